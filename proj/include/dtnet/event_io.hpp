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

// 40-bit event records as used by N-MNIST and N-CARS style recordings:
//
//   byte 0      x
//   byte 1      y
//   byte 2      bit 7 polarity (1 = ON), bits 6..0 timestamp bits 22..16
//   bytes 3-4   timestamp bits 15..0, big-endian
//
// Timestamps are microseconds. The records carry no geometry; callers supply it.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "dtnet/errors.hpp"
#include "dtnet/event.hpp"

namespace dtnet {

inline constexpr std::size_t kEventRecordBytes = 5;
inline constexpr Timestamp kMaxRecordTimestamp = (Timestamp{1} << 23) - 1;
/// Largest geometry a record can address.
inline constexpr Geometry kRecordGeometry{256, 256};

inline EventStream parse_event_file(std::span<const std::uint8_t> bytes,
                                    Geometry geometry = kRecordGeometry, Timestamp slack = 0) {
  if (bytes.size() % kEventRecordBytes != 0)
    throw ParseError("truncated event record: " + std::to_string(bytes.size()) +
                         " bytes is not a multiple of 5",
                     bytes.size() - bytes.size() % kEventRecordBytes);
  EventStream s{geometry, {}, std::nullopt};
  s.events.reserve(bytes.size() / kEventRecordBytes);
  Timestamp latest = kNever;
  for (std::size_t off = 0; off < bytes.size(); off += kEventRecordBytes) {
    const std::size_t index = off / kEventRecordBytes;
    Event e;
    e.x = bytes[off];
    e.y = bytes[off + 1];
    e.p = (bytes[off + 2] & 0x80) ? Polarity::kOn : Polarity::kOff;
    e.t = (static_cast<Timestamp>(bytes[off + 2] & 0x7F) << 16) |
          (static_cast<Timestamp>(bytes[off + 3]) << 8) | static_cast<Timestamp>(bytes[off + 4]);
    if (!geometry.contains(e.x, e.y))
      throw BoundsError("record " + std::to_string(index) + " at (" + std::to_string(e.x) + "," +
                        std::to_string(e.y) + ") lies outside the " +
                        std::to_string(geometry.width) + "x" + std::to_string(geometry.height) +
                        " sensor");
    if (latest != kNever && e.t < latest - slack)
      throw OrderingError("record " + std::to_string(index) + " timestamp " +
                          std::to_string(e.t) + " regresses past " + std::to_string(latest));
    latest = std::max(latest, e.t);
    s.events.push_back(e);
  }
  return s;
}

inline std::vector<std::uint8_t> write_event_file(const EventStream& stream) {
  std::vector<std::uint8_t> out;
  out.reserve(stream.events.size() * kEventRecordBytes);
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if (e.x > 255 || e.y > 255)
      throw EncodingError("event " + std::to_string(i) + " coordinates do not fit in 8 bits");
    if (e.t < 0 || e.t > kMaxRecordTimestamp)
      throw EncodingError("event " + std::to_string(i) + " timestamp " + std::to_string(e.t) +
                          " does not fit in 23 bits");
    out.push_back(static_cast<std::uint8_t>(e.x));
    out.push_back(static_cast<std::uint8_t>(e.y));
    out.push_back(static_cast<std::uint8_t>((e.p == Polarity::kOn ? 0x80 : 0x00) |
                                            ((e.t >> 16) & 0x7F)));
    out.push_back(static_cast<std::uint8_t>((e.t >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>(e.t & 0xFF));
  }
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path,
                             std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("short write to " + path.string());
}

inline EventStream load_event_file(const std::filesystem::path& path,
                                   Geometry geometry = kRecordGeometry, Timestamp slack = 0) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse_event_file(bytes, geometry, slack);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.message(), e.offset());
  } catch (const BoundsError& e) {
    throw BoundsError(path.string() + ": " + e.what());
  } catch (const OrderingError& e) {
    throw OrderingError(path.string() + ": " + e.what());
  }
}

}  // namespace dtnet
