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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dtnet/errors.hpp"
#include "dtnet/event.hpp"

namespace dtnet {

/// Side length of a square neighbourhood of the given radius.
constexpr int window_side(int radius) noexcept { return 2 * radius + 1; }

/// Number of values in a (2R+1) x (2R+1) x channels neighbourhood.
constexpr std::size_t window_size(int radius, int channels) noexcept {
  const auto side = static_cast<std::size_t>(window_side(radius));
  return side * side * static_cast<std::size_t>(channels);
}

/// Flat index of neighbourhood offset (dx, dy) and channel c. Rows (dy) are
/// outermost, channels innermost.
constexpr std::size_t window_index(int radius, int channels, int dx, int dy, int c) noexcept {
  const int side = window_side(radius);
  return (static_cast<std::size_t>(dy + radius) * side + static_cast<std::size_t>(dx + radius)) *
             static_cast<std::size_t>(channels) +
         static_cast<std::size_t>(c);
}

/// Most recent event time per pixel and channel. Camera events use two
/// channels (OFF, ON); deeper layers use one channel per code component.
class TimestampMap {
 public:
  TimestampMap() = default;
  explicit TimestampMap(Geometry geometry, int channels = 2, Timestamp slack = 0)
      : geometry_(geometry), channels_(channels), slack_(slack),
        last_(geometry.pixels() * static_cast<std::size_t>(channels), kNever) {
    if (geometry.width <= 0 || geometry.height <= 0)
      throw ConfigError("timestamp map geometry must be positive");
    if (channels < 1) throw ConfigError("timestamp map needs at least one channel");
    if (slack < 0) throw ConfigError("ordering slack must be non-negative");
  }

  const Geometry& geometry() const noexcept { return geometry_; }
  int channels() const noexcept { return channels_; }
  Timestamp latest() const noexcept { return latest_; }

  Timestamp at(int x, int y, int channel) const {
    return last_[offset(x, y, channel)];
  }

  void update(int x, int y, int channel, Timestamp t) {
    if (!geometry_.contains(x, y))
      throw BoundsError("update at (" + std::to_string(x) + "," + std::to_string(y) +
                        ") outside the " + std::to_string(geometry_.width) + "x" +
                        std::to_string(geometry_.height) + " map");
    if (channel < 0 || channel >= channels_)
      throw BoundsError("channel " + std::to_string(channel) + " out of range");
    if (latest_ != kNever && t < latest_ - slack_)
      throw OrderingError("timestamp " + std::to_string(t) + " regresses past " +
                          std::to_string(latest_));
    Timestamp& cell = last_[offset(x, y, channel)];
    cell = std::max(cell, t);
    latest_ = std::max(latest_, t);
  }

  void update(const Event& e) { update(e.x, e.y, channel_of(e.p), e.t); }

  void reset() {
    std::fill(last_.begin(), last_.end(), kNever);
    latest_ = kNever;
  }

 private:
  std::size_t offset(int x, int y, int channel) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(geometry_.width) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(channel);
  }

  Geometry geometry_;
  int channels_ = 2;
  Timestamp slack_ = 0;
  Timestamp latest_ = kNever;
  std::vector<Timestamp> last_;
};

/// Raw neighbourhood of most-recent times around one event.
struct TimeContext {
  int radius = 0;
  int channels = 2;
  std::vector<Timestamp> times;  // window_index layout, kNever where empty

  Timestamp at(int dx, int dy, int c) const { return times[window_index(radius, channels, dx, dy, c)]; }
};

/// Exponentially decayed time context around one event.
struct TimeSurface {
  int radius = 0;
  int channels = 2;
  std::vector<double> values;  // window_index layout, each in [0, 1]
  Timestamp center_time = 0;
  int center_channel = 0;

  double at(int dx, int dy, int c) const { return values[window_index(radius, channels, dx, dy, c)]; }
};

/// exp(-(now - then)/tau); 0 for cells with no history. Times later than
/// `now` (possible only under a non-zero ordering slack) saturate at 1.
inline double decay(Timestamp now, Timestamp then, double tau) noexcept {
  if (then == kNever) return 0.0;
  const Timestamp dt = std::max<Timestamp>(now - then, 0);
  return std::exp(-static_cast<double>(dt) / tau);
}

inline void check_radius(int radius) {
  if (radius < 1) throw ConfigError("radius must be >= 1, got " + std::to_string(radius));
}

inline void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw ConfigError("decay constant tau must be positive and finite");
}

inline TimeContext time_context(const TimestampMap& map, int x, int y, int radius) {
  check_radius(radius);
  if (!map.geometry().contains(x, y))
    throw BoundsError("time context centre (" + std::to_string(x) + "," + std::to_string(y) +
                      ") outside the sensor");
  TimeContext ctx{radius, map.channels(),
                  std::vector<Timestamp>(window_size(radius, map.channels()), kNever)};
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (!map.geometry().contains(x + dx, y + dy)) continue;
      for (int c = 0; c < map.channels(); ++c)
        ctx.times[window_index(radius, map.channels(), dx, dy, c)] = map.at(x + dx, y + dy, c);
    }
  }
  return ctx;
}

inline TimeContext time_context(const TimestampMap& map, const Event& e, int radius) {
  return time_context(map, e.x, e.y, radius);
}

inline TimeSurface time_surface(const TimeContext& ctx, Timestamp t_i, double tau,
                                int center_channel = 0) {
  check_tau(tau);
  TimeSurface s{ctx.radius, ctx.channels, std::vector<double>(ctx.times.size()), t_i,
                center_channel};
  for (std::size_t k = 0; k < ctx.times.size(); ++k) s.values[k] = decay(t_i, ctx.times[k], tau);
  return s;
}

/// Fused time_context + time_surface writing into a caller-owned buffer; the
/// per-event hot path.
inline void fill_surface(const TimestampMap& map, int x, int y, Timestamp t_i, int radius,
                         double tau, std::span<double> out) {
  const int channels = map.channels();
  const Geometry& g = map.geometry();
  std::fill(out.begin(), out.end(), 0.0);
  const int y0 = std::max(y - radius, 0), y1 = std::min(y + radius, g.height - 1);
  const int x0 = std::max(x - radius, 0), x1 = std::min(x + radius, g.width - 1);
  for (int yy = y0; yy <= y1; ++yy) {
    for (int xx = x0; xx <= x1; ++xx) {
      double* dst = out.data() + window_index(radius, channels, xx - x, yy - y, 0);
      for (int c = 0; c < channels; ++c) dst[c] = decay(t_i, map.at(xx, yy, c), tau);
    }
  }
}

/// Reference surface for event `index`: rescans events [0, index] for the
/// latest time at every neighbourhood cell. Quadratic; tests only.
inline TimeSurface brute_force_time_surface(const EventStream& stream, std::size_t index,
                                            int radius, double tau) {
  check_radius(radius);
  check_tau(tau);
  if (index >= stream.events.size()) throw BoundsError("event index out of range");
  const Event& centre = stream.events[index];
  const int side = window_side(radius);
  TimeSurface s{radius, 2, std::vector<double>(static_cast<std::size_t>(side * side * 2), 0.0),
                centre.t, channel_of(centre.p)};
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      for (int c = 0; c < 2; ++c) {
        Timestamp latest = kNever;
        for (std::size_t j = 0; j <= index; ++j) {
          const Event& e = stream.events[j];
          if (e.x == centre.x + dx && e.y == centre.y + dy && channel_of(e.p) == c)
            latest = std::max(latest, e.t);
        }
        if (latest != kNever)
          s.values[static_cast<std::size_t>(((dy + radius) * side + (dx + radius)) * 2 + c)] =
              std::exp(-static_cast<double>(std::max<Timestamp>(centre.t - latest, 0)) / tau);
      }
    }
  }
  return s;
}

/// Drops events arriving at the same pixel and polarity less than `min_gap`
/// microseconds after the previously accepted one. Disabled when min_gap <= 0.
class RefractoryFilter {
 public:
  RefractoryFilter(Geometry geometry, Timestamp min_gap)
      : min_gap_(min_gap), last_(geometry, 2, std::numeric_limits<Timestamp>::max() / 4) {}

  bool accept(const Event& e) {
    if (min_gap_ <= 0) return true;
    const Timestamp prev = last_.at(e.x, e.y, channel_of(e.p));
    if (prev != kNever && e.t - prev < min_gap_) return false;
    last_.update(e);
    return true;
  }

 private:
  Timestamp min_gap_;
  TimestampMap last_;
};

inline EventStream apply_refractory(const EventStream& in, Timestamp min_gap) {
  if (min_gap <= 0) return in;
  RefractoryFilter filter(in.geometry, min_gap);
  EventStream out{in.geometry, {}, in.label};
  for (const Event& e : in.events)
    if (filter.accept(e)) out.events.push_back(e);
  return out;
}

}  // namespace dtnet
