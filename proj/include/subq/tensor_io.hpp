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

// Binary containers.
//
// Tensor file (.sqt):
//   "SQT1" | u32 LE header_len | header JSON | payload
//   header = {"dtype": "f32"|"f64", "layout": "row-major", "name": str, "shape": [int...]}
//   payload = product(shape) little-endian values in row-major order, nothing after.
//
// Bundle file (.sqb), used for calibration stats and plans:
//   "SQB1" | u32 LE header_len | header JSON | payload
//   header = {"format": str, "version": 1, "meta": {...},
//             "tensors": [{"name", "dtype", "shape", "layout", "offset", "nbytes"}...]}
//   payload = tensors back to back in listed order; offsets are relative to the
//   payload start and must be contiguous, with nothing after the last one.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <system_error>
#include <unistd.h>
#include <vector>

#include "json.hpp"

#include "subq/matrix.hpp"

namespace subq {

using json = nlohmann::json;

enum class Dtype { kF32, kF64 };

constexpr std::string_view to_string(Dtype d) { return d == Dtype::kF32 ? "f32" : "f64"; }
constexpr std::size_t dtype_size(Dtype d) { return d == Dtype::kF32 ? 4 : 8; }

inline Dtype parse_dtype(std::string_view s) {
  if (s == "f32") return Dtype::kF32;
  if (s == "f64") return Dtype::kF64;
  throw Error(ErrorCode::kUnsupportedDtype, "dtype '" + std::string(s) + "'");
}

struct ReadOptions {
  std::uint64_t max_bytes = std::uint64_t{4} << 30;  // 4 GiB
};

struct NamedTensor {
  std::string name;
  Dtype dtype = Dtype::kF64;
  Matrix value;
};

namespace detail {

inline constexpr std::array<char, 4> kTensorMagic{'S', 'Q', 'T', '1'};
inline constexpr std::array<char, 4> kBundleMagic{'S', 'Q', 'B', '1'};

template <typename U>
U byteswap_if_big_endian(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) out |= ((v >> (8 * i)) & 0xFF) << (8 * (sizeof(U) - 1 - i));
    return out;
  }
  return v;
}

inline void put_u32(std::string& out, std::uint32_t v) {
  v = byteswap_if_big_endian(v);
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

inline std::uint32_t get_u32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return byteswap_if_big_endian(v);
}

inline void append_values(std::string& out, const Matrix& m, Dtype dtype) {
  for (double v : m.data()) {
    if (dtype == Dtype::kF64) {
      auto bits = byteswap_if_big_endian(std::bit_cast<std::uint64_t>(v));
      char buf[8];
      std::memcpy(buf, &bits, 8);
      out.append(buf, 8);
    } else {
      auto bits = byteswap_if_big_endian(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      char buf[4];
      std::memcpy(buf, &bits, 4);
      out.append(buf, 4);
    }
  }
}

inline std::vector<double> decode_values(const char* p, std::size_t count, Dtype dtype) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (dtype == Dtype::kF64) {
      std::uint64_t bits;
      std::memcpy(&bits, p + 8 * i, 8);
      out[i] = std::bit_cast<double>(byteswap_if_big_endian(bits));
    } else {
      std::uint32_t bits;
      std::memcpy(&bits, p + 4 * i, 4);
      out[i] = static_cast<double>(std::bit_cast<float>(byteswap_if_big_endian(bits)));
    }
  }
  return out;
}

inline json shape_json(const Matrix& m) { return json::array({m.rows(), m.cols()}); }

/// Validates a shape entry list; returns (rows, cols) with rank-1 shapes read as 1 x n.
inline std::pair<std::size_t, std::size_t> parse_shape(const json& shape, std::uint64_t max_bytes,
                                                       std::size_t elem_size, const std::string& where) {
  if (!shape.is_array() || shape.empty() || shape.size() > 2) {
    throw Error(ErrorCode::kHeaderMismatch, where + ": shape must be an array of 1 or 2 positive ints");
  }
  std::uint64_t total = 1;
  std::vector<std::size_t> dims;
  for (const json& e : shape) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 1) {
      throw Error(ErrorCode::kHeaderMismatch, where + ": shape entries must be integers >= 1");
    }
    const auto v = e.get<std::uint64_t>();
    if (v > max_bytes || total > max_bytes / v) {
      throw Error(ErrorCode::kHeaderMismatch, where + ": shape exceeds the read cap");
    }
    total *= v;
    dims.push_back(static_cast<std::size_t>(v));
  }
  if (total > max_bytes / elem_size) throw Error(ErrorCode::kHeaderMismatch, where + ": payload exceeds the read cap");
  return dims.size() == 1 ? std::pair{std::size_t{1}, dims[0]} : std::pair{dims[0], dims[1]};
}

inline std::string read_file(const std::filesystem::path& path, std::uint64_t max_bytes) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "': " + ec.message());
  if (size > max_bytes + (std::uint64_t{1} << 26)) {
    throw Error(ErrorCode::kIo, "'" + path.string() + "' exceeds the read cap");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::string bytes(static_cast<std::size_t>(size), '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(size));
  if (!in) throw Error(ErrorCode::kIo, "short read on '" + path.string() + "'");
  return bytes;
}

struct Framed {
  json header;
  std::string_view payload;
};

inline Framed unframe(const std::string& bytes, const std::array<char, 4>& magic, const std::string& where) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), magic.data(), 4) != 0) {
    throw Error(ErrorCode::kBadMagic, where + ": expected magic '" + std::string(magic.data(), 4) + "'");
  }
  if (bytes.size() < 8) throw Error(ErrorCode::kTruncatedPayload, where + ": missing header length");
  const std::uint32_t header_len = get_u32(bytes.data() + 4);
  if (header_len > bytes.size() - 8) throw Error(ErrorCode::kTruncatedPayload, where + ": truncated header");
  Framed f;
  try {
    f.header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + header_len);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kHeaderMismatch, where + ": header is not valid JSON (" + e.what() + ")");
  }
  if (!f.header.is_object()) throw Error(ErrorCode::kHeaderMismatch, where + ": header must be a JSON object");
  f.payload = std::string_view(bytes).substr(8 + header_len);
  return f;
}

inline std::string frame(const std::array<char, 4>& magic, const json& header, const std::string& payload) {
  const std::string h = header.dump();
  if (h.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "header too large");
  }
  std::string out(magic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(h.size()));
  out += h;
  out += payload;
  return out;
}

inline std::string header_string(const json& header, const char* key, const std::string& where) {
  auto it = header.find(key);
  if (it == header.end() || !it->is_string()) {
    throw Error(ErrorCode::kHeaderMismatch, where + ": header field '" + key + "' missing or not a string");
  }
  return it->get<std::string>();
}

}  // namespace detail

/// Writes bytes to `path` via a temporary sibling and rename, so readers never
/// observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed on '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot move output into place at '" + path.string() + "'");
  }
}

inline std::string encode_tensor(const std::string& name, const Matrix& m, Dtype dtype = Dtype::kF64) {
  if (m.rows() == 0 || m.cols() == 0) throw Error(ErrorCode::kInvalidArgument, "tensor '" + name + "' is empty");
  json header = {{"name", name}, {"dtype", to_string(dtype)}, {"shape", detail::shape_json(m)},
                 {"layout", "row-major"}};
  std::string payload;
  payload.reserve(m.size() * dtype_size(dtype));
  detail::append_values(payload, m, dtype);
  return detail::frame(detail::kTensorMagic, header, payload);
}

inline NamedTensor decode_tensor(const std::string& bytes, const std::string& where = "tensor",
                                 const ReadOptions& opts = {}) {
  const detail::Framed f = detail::unframe(bytes, detail::kTensorMagic, where);
  NamedTensor t;
  t.name = detail::header_string(f.header, "name", where);
  t.dtype = parse_dtype(detail::header_string(f.header, "dtype", where));
  if (detail::header_string(f.header, "layout", where) != "row-major") {
    throw Error(ErrorCode::kHeaderMismatch, where + ": only row-major layout is supported");
  }
  if (!f.header.contains("shape")) throw Error(ErrorCode::kHeaderMismatch, where + ": header field 'shape' missing");
  const std::size_t elem = dtype_size(t.dtype);
  const auto [rows, cols] = detail::parse_shape(f.header["shape"], opts.max_bytes, elem, where);
  const std::size_t nbytes = rows * cols * elem;
  if (f.payload.size() < nbytes) {
    throw Error(ErrorCode::kTruncatedPayload, where + ": payload has " + std::to_string(f.payload.size()) +
                                                  " bytes, header needs " + std::to_string(nbytes));
  }
  if (f.payload.size() > nbytes) {
    throw Error(ErrorCode::kTrailingBytes, where + ": " + std::to_string(f.payload.size() - nbytes) +
                                               " bytes after payload");
  }
  t.value = Matrix(rows, cols, detail::decode_values(f.payload.data(), rows * cols, t.dtype));
  return t;
}

inline void write_tensor(const std::filesystem::path& path, const std::string& name, const Matrix& m,
                         Dtype dtype = Dtype::kF64) {
  write_file_atomic(path, encode_tensor(name, m, dtype));
}

inline NamedTensor read_tensor(const std::filesystem::path& path, const ReadOptions& opts = {}) {
  return decode_tensor(detail::read_file(path, opts.max_bytes), path.string(), opts);
}

/// A set of named f64/f32 matrices plus JSON metadata.
struct Bundle {
  std::string format;
  json meta = json::object();
  std::vector<NamedTensor> tensors;

  void add(std::string name, Matrix m, Dtype dtype = Dtype::kF64) {
    tensors.push_back({std::move(name), dtype, std::move(m)});
  }

  const Matrix& get(const std::string& name) const {
    for (const auto& t : tensors)
      if (t.name == name) return t.value;
    throw Error(ErrorCode::kSchema, format + ": tensor '" + name + "' missing");
  }
};

inline std::string encode_bundle(const Bundle& b) {
  json entries = json::array();
  std::string payload;
  for (const NamedTensor& t : b.tensors) {
    const std::size_t offset = payload.size();
    detail::append_values(payload, t.value, t.dtype);
    entries.push_back({{"name", t.name},
                       {"dtype", to_string(t.dtype)},
                       {"shape", detail::shape_json(t.value)},
                       {"layout", "row-major"},
                       {"offset", offset},
                       {"nbytes", payload.size() - offset}});
  }
  json header = {{"format", b.format}, {"version", 1}, {"meta", b.meta}, {"tensors", entries}};
  return detail::frame(detail::kBundleMagic, header, payload);
}

inline Bundle decode_bundle(const std::string& bytes, const std::string& where = "bundle",
                            const ReadOptions& opts = {}) {
  const detail::Framed f = detail::unframe(bytes, detail::kBundleMagic, where);
  Bundle b;
  b.format = detail::header_string(f.header, "format", where);
  if (!f.header.contains("version") || f.header["version"] != 1) {
    throw Error(ErrorCode::kHeaderMismatch, where + ": unsupported bundle version");
  }
  b.meta = f.header.value("meta", json::object());
  if (!f.header.contains("tensors") || !f.header["tensors"].is_array()) {
    throw Error(ErrorCode::kHeaderMismatch, where + ": header field 'tensors' missing");
  }
  std::size_t cursor = 0;
  for (const json& e : f.header["tensors"]) {
    const std::string name = detail::header_string(e, "name", where);
    const std::string at = where + ": tensor '" + name + "'";
    const Dtype dtype = parse_dtype(detail::header_string(e, "dtype", at));
    if (detail::header_string(e, "layout", at) != "row-major") {
      throw Error(ErrorCode::kHeaderMismatch, at + ": only row-major layout is supported");
    }
    if (!e.contains("shape") || !e.contains("offset") || !e.contains("nbytes") ||
        !e["offset"].is_number_unsigned() || !e["nbytes"].is_number_unsigned()) {
      throw Error(ErrorCode::kHeaderMismatch, at + ": entry needs shape, offset and nbytes");
    }
    const auto [rows, cols] = detail::parse_shape(e["shape"], opts.max_bytes, dtype_size(dtype), at);
    const std::size_t nbytes = rows * cols * dtype_size(dtype);
    if (e["offset"].get<std::uint64_t>() != cursor || e["nbytes"].get<std::uint64_t>() != nbytes) {
      throw Error(ErrorCode::kHeaderMismatch, at + ": offset/nbytes do not match the packed layout");
    }
    if (f.payload.size() - cursor < nbytes) throw Error(ErrorCode::kTruncatedPayload, at + ": payload truncated");
    b.tensors.push_back({name, dtype, Matrix(rows, cols, detail::decode_values(f.payload.data() + cursor,
                                                                               rows * cols, dtype))});
    cursor += nbytes;
  }
  if (cursor != f.payload.size()) {
    throw Error(ErrorCode::kTrailingBytes, where + ": " + std::to_string(f.payload.size() - cursor) +
                                               " bytes after the last tensor");
  }
  return b;
}

inline void write_bundle(const std::filesystem::path& path, const Bundle& b) {
  write_file_atomic(path, encode_bundle(b));
}

inline Bundle read_bundle(const std::filesystem::path& path, const ReadOptions& opts = {}) {
  return decode_bundle(detail::read_file(path, opts.max_bytes), path.string(), opts);
}

}  // namespace subq
