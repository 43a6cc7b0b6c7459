// Copyright 2026 The subq Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include "subq/calib_stats.hpp"
#include "subq/eigen.hpp"
#include "subq/error.hpp"
#include "subq/matrix.hpp"
#include "subq/mpq_engine.hpp"
#include "subq/orthogonal.hpp"
#include "subq/quantizer.hpp"
#include "subq/random.hpp"
#include "subq/serialize.hpp"
#include "subq/subspace_solver.hpp"
#include "subq/synthetic.hpp"
#include "subq/tensor_io.hpp"
