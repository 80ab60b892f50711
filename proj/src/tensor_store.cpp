/* Copyright 2026 The radseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "radseg/tensor_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "radseg/errors.hpp"

namespace radseg {
namespace {

static_assert(std::endian::native == std::endian::little,
              "payload encoding assumes a little-endian host");

bool valid_dtype(std::uint8_t code) { return code <= 4; }

// product(dims) * elem, or throws on overflow.
std::uint64_t checked_payload_bytes(std::span<const std::uint64_t> dims,
                                    std::size_t elem) {
  std::uint64_t n = elem;
  for (std::uint64_t d : dims) {
    if (d == 0) throw FormatError("tensor dim of zero");
    if (n > std::numeric_limits<std::uint64_t>::max() / d) {
      throw FormatError("tensor payload size overflows 64 bits");
    }
    n *= d;
  }
  return n;
}

void put_u16(std::vector<std::byte>& out, std::uint16_t v) {
  out.push_back(static_cast<std::byte>(v & 0xff));
  out.push_back(static_cast<std::byte>(v >> 8));
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
  }
}

std::uint64_t get_u64(const std::byte* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(p[i])) << (8 * i);
  }
  return v;
}

// Parses the fixed 8-byte prefix; returns ndim.
std::size_t parse_prefix(const std::byte* p, TensorHeader& header) {
  if (std::memcmp(p, kTensorMagic, 4) != 0) {
    throw FormatError("bad magic: not an RSTF tensor file");
  }
  header.version = static_cast<std::uint16_t>(
      std::to_integer<std::uint16_t>(p[4]) |
      (std::to_integer<std::uint16_t>(p[5]) << 8));
  if (header.version != kTensorFormatVersion) {
    throw FormatError("unsupported RSTF version " + std::to_string(header.version));
  }
  const auto code = std::to_integer<std::uint8_t>(p[6]);
  if (!valid_dtype(code)) {
    throw FormatError("unsupported dtype code " + std::to_string(code));
  }
  header.dtype = static_cast<DType>(code);
  const std::size_t ndim = std::to_integer<std::uint8_t>(p[7]);
  if (ndim == 0) throw FormatError("tensor rank must be >= 1");
  return ndim;
}

template <typename T>
Tensor from_values(DType dtype, std::vector<std::uint64_t> dims,
                   std::span<const T> values) {
  Tensor t;
  t.dtype = dtype;
  t.dims = std::move(dims);
  if (t.dims.empty()) throw ShapeError("tensor rank must be >= 1");
  if (checked_payload_bytes(t.dims, sizeof(T)) != values.size_bytes()) {
    throw ShapeError("tensor data length does not match product(dims)");
  }
  t.payload.resize(values.size_bytes());
  if (!values.empty()) {
    std::memcpy(t.payload.data(), values.data(), values.size_bytes());
  }
  return t;
}

template <typename T>
std::vector<T> to_values(const Tensor& t) {
  std::vector<T> out(t.payload.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), t.payload.data(), t.payload.size());
  return out;
}

}  // namespace

std::size_t element_size(DType dtype) {
  switch (dtype) {
    case DType::kF32: return 4;
    case DType::kF16: return 2;
    case DType::kI32: return 4;
    case DType::kU8: return 1;
    case DType::kU64: return 8;
  }
  throw FormatError("unknown dtype");
}

const char* dtype_name(DType dtype) {
  switch (dtype) {
    case DType::kF32: return "f32";
    case DType::kF16: return "f16";
    case DType::kI32: return "i32";
    case DType::kU8: return "u8";
    case DType::kU64: return "u64";
  }
  return "?";
}

std::uint16_t f32_to_f16(float value) {
  const std::uint32_t x = std::bit_cast<std::uint32_t>(value);
  const std::uint32_t sign = (x >> 16) & 0x8000u;
  const std::uint32_t exp = (x >> 23) & 0xffu;
  std::uint32_t mant = x & 0x7fffffu;

  if (exp == 0xff) {  // inf / nan
    return static_cast<std::uint16_t>(sign | 0x7c00u | (mant ? 0x200u | (mant >> 13) : 0));
  }
  int e = static_cast<int>(exp) - 127 + 15;
  if (e >= 0x1f) return static_cast<std::uint16_t>(sign | 0x7c00u);
  if (e <= 0) {
    if (e < -10) return static_cast<std::uint16_t>(sign);
    mant |= 0x800000u;
    const int shift = 14 - e;
    std::uint32_t half = mant >> shift;
    const std::uint32_t rem = mant & ((1u << shift) - 1);
    const std::uint32_t halfway = 1u << (shift - 1);
    if (rem > halfway || (rem == halfway && (half & 1u))) ++half;
    return static_cast<std::uint16_t>(sign | half);
  }
  std::uint32_t half = (static_cast<std::uint32_t>(e) << 10) | (mant >> 13);
  const std::uint32_t rem = mant & 0x1fffu;
  if (rem > 0x1000u || (rem == 0x1000u && (half & 1u))) ++half;  // may carry into exp
  return static_cast<std::uint16_t>(sign | half);
}

float f16_to_f32(std::uint16_t bits) {
  const std::uint32_t sign = static_cast<std::uint32_t>(bits & 0x8000u) << 16;
  std::uint32_t exp = (bits >> 10) & 0x1fu;
  std::uint32_t mant = bits & 0x3ffu;
  std::uint32_t out;
  if (exp == 0) {
    if (mant == 0) {
      out = sign;
    } else {
      int e = -1;
      do {
        ++e;
        mant <<= 1;
      } while ((mant & 0x400u) == 0);
      mant &= 0x3ffu;
      out = sign | (static_cast<std::uint32_t>(127 - 15 - e) << 23) | (mant << 13);
    }
  } else if (exp == 0x1f) {
    out = sign | 0x7f800000u | (mant << 13);
  } else {
    out = sign | ((exp + 127 - 15) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(out);
}

std::uint64_t Tensor::numel() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

Tensor Tensor::from_f32(std::vector<std::uint64_t> dims,
                        std::span<const float> values) {
  return from_values(DType::kF32, std::move(dims), values);
}

Tensor Tensor::from_f32_as_f16(std::vector<std::uint64_t> dims,
                               std::span<const float> values) {
  std::vector<std::uint16_t> bits(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) bits[i] = f32_to_f16(values[i]);
  return from_values(DType::kF16, std::move(dims),
                     std::span<const std::uint16_t>(bits));
}

Tensor Tensor::from_i32(std::vector<std::uint64_t> dims,
                        std::span<const std::int32_t> values) {
  return from_values(DType::kI32, std::move(dims), values);
}

Tensor Tensor::from_u8(std::vector<std::uint64_t> dims,
                       std::span<const std::uint8_t> values) {
  return from_values(DType::kU8, std::move(dims), values);
}

Tensor Tensor::from_u64(std::vector<std::uint64_t> dims,
                        std::span<const std::uint64_t> values) {
  return from_values(DType::kU64, std::move(dims), values);
}

Tensor Tensor::from_matrix(const Matrix& m) {
  return from_f32({m.rows(), m.cols()}, m.values());
}

std::vector<float> Tensor::to_f32() const {
  if (dtype == DType::kF32) return to_values<float>(*this);
  if (dtype == DType::kF16) {
    const auto bits = to_values<std::uint16_t>(*this);
    std::vector<float> out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) out[i] = f16_to_f32(bits[i]);
    return out;
  }
  throw InputError(std::string("expected a float tensor, got ") + dtype_name(dtype));
}

std::vector<std::int32_t> Tensor::to_i32() const {
  if (dtype == DType::kI32) return to_values<std::int32_t>(*this);
  if (dtype == DType::kU8) {
    const auto raw = to_values<std::uint8_t>(*this);
    return {raw.begin(), raw.end()};
  }
  throw InputError(std::string("expected an i32/u8 tensor, got ") + dtype_name(dtype));
}

std::vector<std::uint8_t> Tensor::to_u8() const {
  if (dtype != DType::kU8) {
    throw InputError(std::string("expected a u8 tensor, got ") + dtype_name(dtype));
  }
  return to_values<std::uint8_t>(*this);
}

std::vector<std::uint64_t> Tensor::to_u64() const {
  if (dtype != DType::kU64) {
    throw InputError(std::string("expected a u64 tensor, got ") + dtype_name(dtype));
  }
  return to_values<std::uint64_t>(*this);
}

Matrix Tensor::to_matrix() const {
  if (dims.size() == 1) return Matrix(1, dims[0], to_f32());
  if (dims.size() != 2) {
    throw ShapeError("expected a rank-2 tensor, got rank " + std::to_string(dims.size()));
  }
  return Matrix(dims[0], dims[1], to_f32());
}

std::vector<std::byte> encode_tensor(const Tensor& tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > 255) {
    throw ShapeError("tensor rank must be in [1, 255]");
  }
  const std::uint64_t expected =
      checked_payload_bytes(tensor.dims, element_size(tensor.dtype));
  if (expected != tensor.payload.size()) {
    throw ShapeError("tensor payload has " + std::to_string(tensor.payload.size()) +
                     " bytes, dims require " + std::to_string(expected));
  }
  std::vector<std::byte> out;
  out.reserve(header_size(tensor.dims.size()) + tensor.payload.size());
  for (char c : kTensorMagic) out.push_back(static_cast<std::byte>(c));
  put_u16(out, kTensorFormatVersion);
  out.push_back(static_cast<std::byte>(tensor.dtype));
  out.push_back(static_cast<std::byte>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u64(out, d);
  out.insert(out.end(), tensor.payload.begin(), tensor.payload.end());
  return out;
}

Tensor decode_tensor(std::span<const std::byte> bytes, ReadOptions options) {
  if (bytes.size() < 8) throw FormatError("truncated RSTF header");
  TensorHeader header;
  const std::size_t ndim = parse_prefix(bytes.data(), header);
  if (bytes.size() < header_size(ndim)) throw FormatError("truncated RSTF dims");
  Tensor t;
  t.dtype = header.dtype;
  t.dims.resize(ndim);
  for (std::size_t i = 0; i < ndim; ++i) t.dims[i] = get_u64(bytes.data() + 8 + 8 * i);
  const std::uint64_t want = checked_payload_bytes(t.dims, element_size(t.dtype));
  if (want > options.max_payload_bytes) {
    throw FormatError("declared payload of " + std::to_string(want) +
                      " bytes exceeds read cap");
  }
  if (bytes.size() - header_size(ndim) != want) {
    throw FormatError("payload length mismatch: header declares " +
                      std::to_string(want) + " bytes, found " +
                      std::to_string(bytes.size() - header_size(ndim)));
  }
  t.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header_size(ndim)),
                   bytes.end());
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  const auto bytes = encode_tensor(tensor);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot move " + tmp.string() + " into place: " + ec.message());
}

void write_tensor(const std::filesystem::path& path, DType dtype,
                  std::span<const std::uint64_t> dims,
                  std::span<const std::byte> payload) {
  Tensor t;
  t.dtype = dtype;
  t.dims.assign(dims.begin(), dims.end());
  t.payload.assign(payload.begin(), payload.end());
  write_tensor(path, t);
}

namespace {

// Reads the header and validates size against the file length without
// touching the payload.
TensorHeader read_header_from(std::ifstream& in, std::uint64_t file_size,
                              const std::filesystem::path& path) {
  std::byte prefix[8];
  if (file_size < 8 || !in.read(reinterpret_cast<char*>(prefix), 8)) {
    throw FormatError(path.string() + ": truncated RSTF header");
  }
  TensorHeader header;
  const std::size_t ndim = parse_prefix(prefix, header);
  if (file_size < header_size(ndim)) {
    throw FormatError(path.string() + ": truncated RSTF dims");
  }
  std::vector<std::byte> dim_bytes(8 * ndim);
  in.read(reinterpret_cast<char*>(dim_bytes.data()),
          static_cast<std::streamsize>(dim_bytes.size()));
  header.dims.resize(ndim);
  for (std::size_t i = 0; i < ndim; ++i) header.dims[i] = get_u64(dim_bytes.data() + 8 * i);
  header.payload_bytes = checked_payload_bytes(header.dims, element_size(header.dtype));
  if (file_size - header_size(ndim) != header.payload_bytes) {
    throw FormatError(path.string() + ": payload length mismatch: header declares " +
                      std::to_string(header.payload_bytes) + " bytes, file holds " +
                      std::to_string(file_size - header_size(ndim)));
  }
  return header;
}

std::uint64_t file_size_of(const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw InputError("cannot stat " + path.string() + ": " + ec.message());
  return size;
}

}  // namespace

TensorHeader read_tensor_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_header_from(in, file_size_of(path), path);
}

Tensor read_tensor(const std::filesystem::path& path, ReadOptions options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const TensorHeader header = read_header_from(in, file_size_of(path), path);
  if (header.payload_bytes > options.max_payload_bytes) {
    throw FormatError(path.string() + ": declared payload of " +
                      std::to_string(header.payload_bytes) + " bytes exceeds read cap");
  }
  Tensor t;
  t.dtype = header.dtype;
  t.dims = header.dims;
  t.payload.resize(header.payload_bytes);
  if (!in.read(reinterpret_cast<char*>(t.payload.data()),
               static_cast<std::streamsize>(t.payload.size()))) {
    throw FormatError(path.string() + ": short read of payload");
  }
  return t;
}

std::string describe_header(const TensorHeader& header) {
  std::ostringstream os;
  os << "RSTF v" << header.version << " dtype=" << dtype_name(header.dtype)
     << " ndim=" << header.dims.size() << " dims=[";
  for (std::size_t i = 0; i < header.dims.size(); ++i) {
    os << (i ? "," : "") << header.dims[i];
  }
  os << "] header_bytes=" << header_size(header.dims.size())
     << " payload_bytes=" << header.payload_bytes;
  return os.str();
}

}  // namespace radseg
