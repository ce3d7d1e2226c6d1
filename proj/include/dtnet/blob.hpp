// Copyright 2026 The dtnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Little-endian binary blobs used for model persistence. Every blob starts
// with an 8-byte magic tag and a 32-bit format version.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtnet/errors.hpp"

namespace dtnet {

inline constexpr std::uint32_t kBlobVersion = 1;

class BlobWriter {
 public:
  explicit BlobWriter(std::string_view magic) {
    if (magic.size() != 8) throw EncodingError("blob magic must be 8 bytes");
    bytes_.insert(bytes_.end(), magic.begin(), magic.end());
    u32(kBlobVersion);
  }

  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }

  std::vector<std::uint8_t> take() && { return std::move(bytes_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class BlobReader {
 public:
  /// Checks the magic tag and version. Wrong magic is corruption; an unknown
  /// version is a compatibility error.
  BlobReader(std::span<const std::uint8_t> bytes, std::string_view magic) : bytes_(bytes) {
    need(8, "magic");
    if (std::memcmp(bytes_.data(), magic.data(), 8) != 0)
      throw CorruptionError("bad magic, expected '" + std::string(magic) + "'", 0);
    pos_ = 8;
    const std::uint32_t version = u32();
    if (version != kBlobVersion)
      throw CompatibilityError("unsupported blob version " + std::to_string(version));
  }

  std::uint8_t u8() {
    need(1, "u8");
    return bytes_[pos_++];
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4, "u32")); }
  std::uint64_t u64() { return get(8, "u64"); }
  double f64() { return std::bit_cast<double>(get(8, "f64")); }
  std::vector<double> f64s(std::size_t n) {
    need(n * 8, "f64 array");
    std::vector<double> out(n);
    for (auto& v : out) v = f64();
    return out;
  }

  /// Reads a dimension and rejects values that the remaining bytes could not
  /// possibly back.
  std::size_t dim(const char* what) {
    const std::size_t at = pos_;
    const std::uint64_t v = u64();
    if (v > bytes_.size()) throw CorruptionError(std::string("implausible ") + what, at);
    return static_cast<std::size_t>(v);
  }

  std::size_t offset() const noexcept { return pos_; }

  void expect_end() const {
    if (pos_ != bytes_.size()) throw CorruptionError("trailing bytes after blob", pos_);
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n)
      throw CorruptionError(std::string("truncated blob while reading ") + what, pos_);
  }
  std::uint64_t get(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace dtnet
