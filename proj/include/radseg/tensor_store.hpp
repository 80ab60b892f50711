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
// RSTF binary tensor container.
//
// Layout (all integers little-endian):
//
//   offset  size       field
//   0       4          magic "RSTF"
//   4       2          version (u16, currently 1)
//   6       1          dtype code (u8): f32=0 f16=1 i32=2 u8=3 u64=4
//   7       1          ndim (u8, >= 1)
//   8       8 * ndim   dims (u64 each, row-major, every dim >= 1)
//   8+8*ndim ...       payload, product(dims) * element_size bytes
//
// Nothing follows the payload; trailing bytes are rejected.
#ifndef RADSEG_TENSOR_STORE_HPP_
#define RADSEG_TENSOR_STORE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "radseg/matrix.hpp"

namespace radseg {

enum class DType : std::uint8_t { kF32 = 0, kF16 = 1, kI32 = 2, kU8 = 3, kU64 = 4 };

inline constexpr char kTensorMagic[4] = {'R', 'S', 'T', 'F'};
inline constexpr std::uint16_t kTensorFormatVersion = 1;
inline constexpr std::uint64_t kDefaultMaxPayloadBytes = 8ull << 30;

std::size_t element_size(DType dtype);
const char* dtype_name(DType dtype);
// Header bytes preceding the payload for a tensor of the given rank.
constexpr std::size_t header_size(std::size_t ndim) { return 8 + 8 * ndim; }

std::uint16_t f32_to_f16(float value);
float f16_to_f32(std::uint16_t bits);

// Raw tensor: dtype, shape and little-endian payload bytes exactly as stored.
struct Tensor {
  DType dtype = DType::kF32;
  std::vector<std::uint64_t> dims;
  std::vector<std::byte> payload;

  std::uint64_t numel() const;

  static Tensor from_f32(std::vector<std::uint64_t> dims,
                         std::span<const float> values);
  // Rounds each value to binary16.
  static Tensor from_f32_as_f16(std::vector<std::uint64_t> dims,
                                std::span<const float> values);
  static Tensor from_i32(std::vector<std::uint64_t> dims,
                         std::span<const std::int32_t> values);
  static Tensor from_u8(std::vector<std::uint64_t> dims,
                        std::span<const std::uint8_t> values);
  static Tensor from_u64(std::vector<std::uint64_t> dims,
                         std::span<const std::uint64_t> values);
  static Tensor from_matrix(const Matrix& m);

  // f32 and f16 payloads; f16 is widened.
  std::vector<float> to_f32() const;
  // i32 and u8 payloads.
  std::vector<std::int32_t> to_i32() const;
  std::vector<std::uint8_t> to_u8() const;
  std::vector<std::uint64_t> to_u64() const;
  // Rank-2 float tensor as a Matrix; rank-1 becomes a single row.
  Matrix to_matrix() const;

  bool operator==(const Tensor& other) const = default;
};

struct TensorHeader {
  std::uint16_t version = 0;
  DType dtype = DType::kF32;
  std::vector<std::uint64_t> dims;
  std::uint64_t payload_bytes = 0;
};

struct ReadOptions {
  // Declared payloads larger than this are rejected before allocation.
  std::uint64_t max_payload_bytes = kDefaultMaxPayloadBytes;
};

// Throws ShapeError when payload size disagrees with dims, InputError on I/O
// failure. The file is written to a sibling temporary and renamed into place.
void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
void write_tensor(const std::filesystem::path& path, DType dtype,
                  std::span<const std::uint64_t> dims,
                  std::span<const std::byte> payload);

// Throws FormatError on bad magic, unsupported version or dtype, truncation or
// trailing bytes.
Tensor read_tensor(const std::filesystem::path& path, ReadOptions options = {});
TensorHeader read_tensor_header(const std::filesystem::path& path);

// In-memory codec used by the file functions.
std::vector<std::byte> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::span<const std::byte> bytes, ReadOptions options = {});

std::string describe_header(const TensorHeader& header);

}  // namespace radseg

#endif  // RADSEG_TENSOR_STORE_HPP_
