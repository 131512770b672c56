// Copyright 2026  The sslprobe Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "sslprobe/common.hpp"

namespace sslprobe {

// Matrix container layout (little-endian):
//   offset  size  field
//        0     4  magic "SSLM"
//        4     2  version (1)
//        6     1  dtype (0 = float32)
//        7     1  flags (0)
//        8     8  rows
//       16     8  cols
//       24     -  rows*cols float32 values, row-major
inline constexpr char kMatrixMagic[4] = {'S', 'S', 'L', 'M'};
inline constexpr std::uint16_t kMatrixVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;
inline constexpr std::size_t kMatrixHeaderBytes = 24;

struct MatrixHeader {
  std::uint16_t version = kMatrixVersion;
  std::uint8_t dtype = kDtypeFloat32;
  std::uint8_t flags = 0;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;

  std::uint64_t payload_bytes() const { return rows * cols * sizeof(float); }
};

/// Writes the container; returns the number of bytes emitted. Throws
/// FormatError on non-finite values and Error on stream failure.
std::uint64_t write_matrix(const FrameMatrix& matrix, std::ostream& out);

/// Parses and checks magic, version and dtype. Throws FormatError.
MatrixHeader read_matrix_header(std::istream& in);

FrameMatrix read_matrix(std::istream& in);

// Path-level wrappers; errors carry the path.
std::uint64_t write_matrix_file(const FrameMatrix& matrix, const std::filesystem::path& path);
FrameMatrix read_matrix_file(const std::filesystem::path& path);

}  // namespace sslprobe
