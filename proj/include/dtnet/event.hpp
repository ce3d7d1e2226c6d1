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

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dtnet/errors.hpp"

namespace dtnet {

/// Microseconds since the start of a recording.
using Timestamp = std::int64_t;

/// Marks a cell that has never received an event.
inline constexpr Timestamp kNever = std::numeric_limits<Timestamp>::min();

enum class Polarity : std::int8_t { kOff = -1, kOn = 1 };

/// Plane index used by per-polarity state: OFF -> 0, ON -> 1.
constexpr int channel_of(Polarity p) noexcept { return p == Polarity::kOn ? 1 : 0; }
constexpr int sign_of(Polarity p) noexcept { return static_cast<int>(p); }

struct Geometry {
  int width = 0;
  int height = 0;

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  std::size_t pixels() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  friend bool operator==(const Geometry&, const Geometry&) = default;
};

/// One asynchronous camera event.
struct Event {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  Timestamp t = 0;
  Polarity p = Polarity::kOff;

  friend bool operator==(const Event&, const Event&) = default;
};

struct EventStream {
  Geometry geometry;
  std::vector<Event> events;
  std::optional<int> label;

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

/// Throws BoundsError or OrderingError when the stream breaks its invariants.
inline void validate(const EventStream& s, Timestamp slack = 0) {
  Timestamp latest = kNever;
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const Event& e = s.events[i];
    if (!s.geometry.contains(e.x, e.y))
      throw BoundsError("event " + std::to_string(i) + " at (" + std::to_string(e.x) + "," +
                        std::to_string(e.y) + ") lies outside the " +
                        std::to_string(s.geometry.width) + "x" +
                        std::to_string(s.geometry.height) + " sensor");
    if (latest != kNever && e.t < latest - slack)
      throw OrderingError("event " + std::to_string(i) + " has timestamp " +
                          std::to_string(e.t) + " earlier than " + std::to_string(latest));
    if (latest == kNever || e.t > latest) latest = e.t;
  }
}

}  // namespace dtnet
