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

#include "sslprobe/matrix_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace sslprobe {

namespace {

template <typename T>
void put_le(std::array<unsigned char, kMatrixHeaderBytes>& buf, std::size_t offset, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[offset + i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

void store_float_le(unsigned char* dst, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) dst[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
}

float load_float_le(const unsigned char* src) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(src[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::uint64_t write_matrix(const FrameMatrix& matrix, std::ostream& out) {
  if (!matrix.allFinite()) throw FormatError("matrix contains non-finite values");

  std::array<unsigned char, kMatrixHeaderBytes> header{};
  std::memcpy(header.data(), kMatrixMagic, 4);
  put_le<std::uint16_t>(header, 4, kMatrixVersion);
  put_le<std::uint8_t>(header, 6, kDtypeFloat32);
  put_le<std::uint8_t>(header, 7, 0);
  put_le<std::uint64_t>(header, 8, static_cast<std::uint64_t>(matrix.rows()));
  put_le<std::uint64_t>(header, 16, static_cast<std::uint64_t>(matrix.cols()));
  out.write(reinterpret_cast<const char*>(header.data()), header.size());

  std::vector<unsigned char> row(static_cast<std::size_t>(matrix.cols()) * 4);
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) store_float_le(row.data() + 4 * c, matrix(r, c));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw Error("write failed");
  return kMatrixHeaderBytes + static_cast<std::uint64_t>(matrix.size()) * 4;
}

MatrixHeader read_matrix_header(std::istream& in) {
  std::array<unsigned char, kMatrixHeaderBytes> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got >= 4 && std::memcmp(buf.data(), kMatrixMagic, 4) != 0) {
    throw FormatError("not an embedding matrix (bad magic)");
  }
  if (got < kMatrixHeaderBytes) {
    std::ostringstream msg;
    msg << "truncated header: expected " << kMatrixHeaderBytes << " bytes, got " << got;
    throw FormatError(msg.str());
  }
  MatrixHeader h;
  h.version = get_le<std::uint16_t>(buf.data() + 4);
  h.dtype = get_le<std::uint8_t>(buf.data() + 6);
  h.flags = get_le<std::uint8_t>(buf.data() + 7);
  h.rows = get_le<std::uint64_t>(buf.data() + 8);
  h.cols = get_le<std::uint64_t>(buf.data() + 16);
  if (h.version != kMatrixVersion) {
    throw FormatError("unsupported matrix version " + std::to_string(h.version));
  }
  if (h.dtype != kDtypeFloat32) throw FormatError("unsupported dtype " + std::to_string(h.dtype));
  return h;
}

FrameMatrix read_matrix(std::istream& in) {
  const MatrixHeader h = read_matrix_header(in);
  const std::uint64_t expected = h.payload_bytes();
  std::vector<unsigned char> payload(expected);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(expected));
  std::uint64_t actual = static_cast<std::uint64_t>(in.gcount());
  if (actual < expected) {
    std::ostringstream msg;
    msg << "payload length mismatch: expected " << expected << " bytes, got " << actual;
    throw FormatError(msg.str());
  }
  in.peek();
  if (!in.eof()) {
    // Count the trailing bytes so the message names both sizes.
    std::uint64_t extra = 0;
    char sink[4096];
    while (in.read(sink, sizeof sink) || in.gcount() > 0) extra += static_cast<std::uint64_t>(in.gcount());
    std::ostringstream msg;
    msg << "payload length mismatch: expected " << expected << " bytes, got " << (actual + extra);
    throw FormatError(msg.str());
  }

  FrameMatrix m(static_cast<Eigen::Index>(h.rows), static_cast<Eigen::Index>(h.cols));
  const unsigned char* p = payload.data();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c, p += 4) m(r, c) = load_float_le(p);
  }
  return m;
}

std::uint64_t write_matrix_file(const FrameMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  try {
    const auto n = write_matrix(matrix, out);
    out.flush();
    if (!out) throw Error("write failed");
    return n;
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

FrameMatrix read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  try {
    return read_matrix(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace sslprobe
