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
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "dtnet/autoencoder.hpp"
#include "dtnet/errors.hpp"
#include "dtnet/event.hpp"
#include "dtnet/time_surface.hpp"

namespace dtnet {

/// How a layer hands its codes to the next layer.
enum class Strategy {
  kRawPool,    // next layer reads the decayed, pooled code sub-volume
  kTimeDelay,  // each code component becomes an event at t_in + alpha * z_i
  kThreshold,  // components with z_i >= theta_z become events at t_in
};

enum class PoolMode { kMax, kMean };

inline Strategy parse_strategy(const std::string& s) {
  if (s == "raw_pool") return Strategy::kRawPool;
  if (s == "time_delay") return Strategy::kTimeDelay;
  if (s == "threshold") return Strategy::kThreshold;
  throw ConfigError("unknown strategy '" + s + "'");
}

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kRawPool:
      return "raw_pool";
    case Strategy::kTimeDelay:
      return "time_delay";
    case Strategy::kThreshold:
      return "threshold";
  }
  return "unknown";
}

inline PoolMode parse_pool_mode(const std::string& s) {
  if (s == "max") return PoolMode::kMax;
  if (s == "mean") return PoolMode::kMean;
  throw ConfigError("unknown pool mode '" + s + "'");
}

inline std::string to_string(PoolMode m) { return m == PoolMode::kMax ? "max" : "mean"; }

struct LayerConfig {
  int radius = 2;
  double tau = 30000.0;  // microseconds
  int code_dim = 10;
  Strategy strategy = Strategy::kRawPool;
  PoolMode pool_mode = PoolMode::kMax;
  int pool_window = 1;
  double alpha = 1000.0;  // microseconds of delay per unit of code
  double theta_z = 0.5;

  void validate() const {
    if (radius < 1) throw ConfigError("layer radius must be >= 1");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("layer tau must be > 0");
    if (code_dim < 1) throw ConfigError("layer code_dim must be >= 1");
    if (pool_window < 1) throw ConfigError("layer pool_window must be >= 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("layer alpha must be >= 0");
  }
  friend bool operator==(const LayerConfig&, const LayerConfig&) = default;
};

struct ScalingFactors {
  double k_radius = 1.0;
  double k_tau = 1.0;
  double k_code = 1.0;

  void validate() const {
    if (!(k_radius > 0.0) || !(k_tau > 0.0) || !(k_code > 0.0))
      throw ConfigError("scaling factors must all be > 0");
  }
};

/// Parameters of the following layer: R and N scale and round to the nearest
/// integer (at least 1); tau scales exactly.
inline LayerConfig scale_config(const LayerConfig& cfg, const ScalingFactors& k) {
  k.validate();
  LayerConfig next = cfg;
  next.radius = std::max(1, static_cast<int>(std::lround(k.k_radius * cfg.radius)));
  next.tau = k.k_tau * cfg.tau;
  next.code_dim = std::max(1, static_cast<int>(std::lround(k.k_code * cfg.code_dim)));
  return next;
}

/// H x W grid holding the latest code written at each pixel and its time.
class FeatureVolume {
 public:
  FeatureVolume() = default;
  FeatureVolume(Geometry geometry, int depth)
      : geometry_(geometry), depth_(depth),
        codes_(geometry.pixels() * static_cast<std::size_t>(depth), 0.0),
        last_update_(geometry.pixels(), kNever) {
    if (depth < 1) throw ConfigError("feature volume depth must be >= 1");
  }

  const Geometry& geometry() const noexcept { return geometry_; }
  int depth() const noexcept { return depth_; }

  Timestamp last_update(int x, int y) const { return last_update_[cell(x, y)]; }

  std::span<const double> code(int x, int y) const {
    return {codes_.data() + cell(x, y) * static_cast<std::size_t>(depth_),
            static_cast<std::size_t>(depth_)};
  }

  /// Latest write wins.
  void write(int x, int y, std::span<const double> z, Timestamp t) {
    if (!geometry_.contains(x, y))
      throw BoundsError("feature write at (" + std::to_string(x) + "," + std::to_string(y) +
                        ") outside the volume");
    if (z.size() != static_cast<std::size_t>(depth_))
      throw InputError("code of length " + std::to_string(z.size()) + " written to a depth-" +
                       std::to_string(depth_) + " volume");
    const std::size_t c = cell(x, y);
    if (last_update_[c] != kNever && t < last_update_[c])
      throw OrderingError("feature write at time " + std::to_string(t) + " precedes the cell's " +
                          std::to_string(last_update_[c]));
    std::copy(z.begin(), z.end(), codes_.begin() + static_cast<std::ptrdiff_t>(c * depth_));
    last_update_[c] = t;
  }

  std::size_t touched_cells() const {
    return static_cast<std::size_t>(
        std::count_if(last_update_.begin(), last_update_.end(), [](Timestamp t) { return t != kNever; }));
  }

  friend bool operator==(const FeatureVolume&, const FeatureVolume&) = default;

 private:
  std::size_t cell(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(geometry_.width) +
           static_cast<std::size_t>(x);
  }

  Geometry geometry_;
  int depth_ = 0;
  std::vector<double> codes_;
  std::vector<Timestamp> last_update_;
};

/// Decayed codes around (x, y): every cell's code scaled by
/// exp(-(t_now - last_update)/tau), zeros for untouched or off-sensor cells.
/// Output layout matches window_index(radius, depth, ...).
inline void read_subvolume_into(const FeatureVolume& vol, int x, int y, int radius, double tau,
                                Timestamp t_now, std::span<double> out) {
  check_tau(tau);
  const int depth = vol.depth();
  std::fill(out.begin(), out.end(), 0.0);
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (!vol.geometry().contains(x + dx, y + dy)) continue;
      const Timestamp t = vol.last_update(x + dx, y + dy);
      if (t == kNever) continue;
      const double w = decay(t_now, t, tau);
      const auto z = vol.code(x + dx, y + dy);
      double* dst = out.data() + window_index(radius, depth, dx, dy, 0);
      for (int c = 0; c < depth; ++c) dst[c] = w * z[static_cast<std::size_t>(c)];
    }
  }
}

inline std::vector<double> read_subvolume(const FeatureVolume& vol, int x, int y, int radius,
                                          double tau, Timestamp t_now) {
  check_radius(radius);
  std::vector<double> out(window_size(radius, vol.depth()));
  read_subvolume_into(vol, x, y, radius, tau, t_now, out);
  return out;
}

/// Side length after pooling a side-`side` map with window w (partial windows
/// at the far edge are kept).
constexpr int pooled_side(int side, int window) noexcept { return (side + window - 1) / window; }

/// Per-channel spatial pooling of a (2R+1) x (2R+1) x depth sub-volume.
inline std::vector<double> pool(std::span<const double> sub, int radius, int depth, PoolMode mode,
                                int window) {
  if (window < 1) throw ConfigError("pool window must be >= 1");
  if (sub.size() != window_size(radius, depth))
    throw InputError("sub-volume length does not match its radius and depth");
  const int side = window_side(radius);
  const int out_side = pooled_side(side, window);
  std::vector<double> out(static_cast<std::size_t>(out_side * out_side * depth));
  for (int oy = 0; oy < out_side; ++oy) {
    for (int ox = 0; ox < out_side; ++ox) {
      for (int c = 0; c < depth; ++c) {
        double acc = mode == PoolMode::kMax ? -std::numeric_limits<double>::infinity() : 0.0;
        int n = 0;
        for (int iy = oy * window; iy < std::min(side, (oy + 1) * window); ++iy) {
          for (int ix = ox * window; ix < std::min(side, (ox + 1) * window); ++ix) {
            const double v = sub[static_cast<std::size_t>((iy * side + ix) * depth + c)];
            acc = mode == PoolMode::kMax ? std::max(acc, v) : acc + v;
            ++n;
          }
        }
        out[static_cast<std::size_t>((oy * out_side + ox) * depth + c)] =
            mode == PoolMode::kMax ? acc : acc / n;
      }
    }
  }
  return out;
}

struct ChannelSpike {
  int channel = 0;
  Timestamp t = 0;
  friend bool operator==(const ChannelSpike&, const ChannelSpike&) = default;
};

/// Channel i fires at t_in + alpha * z_i (rounded to the microsecond). Sorted
/// by time, ties by channel.
inline std::vector<ChannelSpike> encode_time_delay(std::span<const double> z, Timestamp t_in,
                                                   double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
  std::vector<ChannelSpike> out;
  out.reserve(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i])) throw InputError("non-finite code component " + std::to_string(i));
    out.push_back({static_cast<int>(i), t_in + static_cast<Timestamp>(std::llround(alpha * z[i]))});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ChannelSpike& a, const ChannelSpike& b) { return a.t < b.t; });
  return out;
}

inline std::vector<int> threshold_features(std::span<const double> z, double theta_z) {
  std::vector<int> out;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i] >= theta_z) out.push_back(static_cast<int>(i));
  return out;
}

/// Event emitted by a layer. `channel` is kAllChannels for raw_pool triggers.
struct FeatureEvent {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  int channel = 0;
  Timestamp t = 0;
  friend bool operator==(const FeatureEvent&, const FeatureEvent&) = default;
};

inline constexpr int kAllChannels = -1;

enum class BorderPolicy { kZeroPad, kCrop };

/// Layer stack plus its trained encoders.
struct NetworkSpec {
  Geometry geometry;
  std::vector<LayerConfig> layers;
  BorderPolicy border = BorderPolicy::kZeroPad;

  void validate() const {
    if (layers.empty()) throw ConfigError("a network needs at least one layer");
    if (geometry.width <= 0 || geometry.height <= 0) throw ConfigError("bad network geometry");
    for (const auto& l : layers) l.validate();
  }

  /// Length of the vector fed to layer `l`'s autoencoder.
  std::size_t input_dim(std::size_t l) const {
    const LayerConfig& cfg = layers[l];
    if (l == 0) return window_size(cfg.radius, 2);
    const LayerConfig& prev = layers[l - 1];
    if (prev.strategy == Strategy::kRawPool) {
      const int s = pooled_side(window_side(cfg.radius), prev.pool_window);
      return static_cast<std::size_t>(s * s) * static_cast<std::size_t>(prev.code_dim);
    }
    return window_size(cfg.radius, prev.code_dim);
  }
};

/// Per-stream execution state of a layer stack. Events go in through push();
/// each layer builds its input around the triggering location, encodes it,
/// stores the code in its feature volume and forwards per its strategy.
///
/// With `sink_layer` set, that layer's inputs are handed to `sink` instead of
/// being encoded, and deeper layers stay idle. This is how layer-wise training
/// gathers data.
class NetworkRunner {
 public:
  using Sink = std::function<void(std::span<const double>)>;

  NetworkRunner(const NetworkSpec& spec, std::span<const Autoencoder> encoders,
                std::size_t sink_layer = SIZE_MAX, Sink sink = {})
      : spec_(spec), encoders_(encoders), sink_layer_(sink_layer), sink_(std::move(sink)) {
    spec_.validate();
    const std::size_t active =
        sink_layer_ < spec_.layers.size() ? sink_layer_ + 1 : spec_.layers.size();
    if (encoders_.size() < std::min(sink_layer_, spec_.layers.size()))
      throw ConfigError("not enough trained encoders for the requested depth");
    for (std::size_t l = 0; l < active; ++l) {
      Layer layer;
      const LayerConfig& cfg = spec_.layers[l];
      const std::size_t dim = spec_.input_dim(l);
      if (l < encoders_.size() && l != sink_layer_) {
        const Autoencoder& ae = encoders_[l];
        if (ae.input_dim() != dim || ae.code_dim() != static_cast<std::size_t>(cfg.code_dim))
          throw CompatibilityError("encoder " + std::to_string(l + 1) + " has shape " +
                                   std::to_string(ae.input_dim()) + "->" +
                                   std::to_string(ae.code_dim()) + ", layer expects " +
                                   std::to_string(dim) + "->" + std::to_string(cfg.code_dim));
      }
      if (l == 0) {
        layer.input_map = TimestampMap(spec_.geometry, 2);
      } else {
        const LayerConfig& prev = spec_.layers[l - 1];
        if (prev.strategy != Strategy::kRawPool)
          layer.input_map = TimestampMap(spec_.geometry, prev.code_dim);
        else
          layer.raw.resize(window_size(cfg.radius, prev.code_dim));
      }
      layer.input.resize(dim);
      layer.code.resize(static_cast<std::size_t>(cfg.code_dim));
      layer.volume = FeatureVolume(spec_.geometry, cfg.code_dim);
      layers_.push_back(std::move(layer));
    }
  }

  /// Feeds one camera event. Events must arrive in time order.
  void push(const Event& e) {
    if (!spec_.geometry.contains(e.x, e.y))
      throw BoundsError("event at (" + std::to_string(e.x) + "," + std::to_string(e.y) +
                        ") outside the sensor");
    Layer& first = layers_.front();
    first.input_map.update(e);
    trigger(0, e.x, e.y, e.t);
  }

  void push(const EventStream& s) {
    for (const Event& e : s.events) push(e);
  }

  /// Drains time-delayed feature events still queued between layers.
  void finish() {
    for (std::size_t l = 1; l < layers_.size(); ++l) flush(l, std::numeric_limits<Timestamp>::max());
  }

  const FeatureVolume& volume(std::size_t layer) const { return layers_.at(layer).volume; }
  const FeatureVolume& final_volume() const { return layers_.back().volume; }

  /// Events emitted by the deepest active layer, when recording is enabled.
  const std::vector<FeatureEvent>& emitted() const noexcept { return emitted_; }
  void record_emitted(bool on) { record_ = on; }

 private:
  struct Pending {
    FeatureEvent e;
    std::uint64_t seq;
    bool operator>(const Pending& o) const { return e.t != o.e.t ? e.t > o.e.t : seq > o.seq; }
  };

  struct Layer {
    TimestampMap input_map;       // layer 0, or fed by spiking strategies
    std::vector<double> raw;      // un-pooled sub-volume buffer for raw_pool
    std::vector<double> input;
    std::vector<double> code;
    FeatureVolume volume;
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pending;  // time_delay
  };

  bool in_border(std::size_t l, int x, int y) const {
    const int r = spec_.layers[l].radius;
    return x < r || y < r || x >= spec_.geometry.width - r || y >= spec_.geometry.height - r;
  }

  void build_input(std::size_t l, int x, int y, Timestamp t) {
    Layer& layer = layers_[l];
    const LayerConfig& cfg = spec_.layers[l];
    if (l > 0 && spec_.layers[l - 1].strategy == Strategy::kRawPool) {
      const LayerConfig& prev = spec_.layers[l - 1];
      read_subvolume_into(layers_[l - 1].volume, x, y, cfg.radius, cfg.tau, t, layer.raw);
      if (prev.pool_window == 1) {
        std::copy(layer.raw.begin(), layer.raw.end(), layer.input.begin());
      } else {
        const auto pooled = pool(layer.raw, cfg.radius, prev.code_dim, prev.pool_mode, prev.pool_window);
        std::copy(pooled.begin(), pooled.end(), layer.input.begin());
      }
    } else {
      fill_surface(layer.input_map, x, y, t, cfg.radius, cfg.tau, layer.input);
    }
  }

  void trigger(std::size_t l, int x, int y, Timestamp t) {
    if (spec_.border == BorderPolicy::kCrop && in_border(l, x, y)) return;
    Layer& layer = layers_[l];
    build_input(l, x, y, t);
    if (l == sink_layer_) {
      if (sink_) sink_(layer.input);
      return;
    }
    encoders_[l].encode_into(layer.input, layer.code);
    layer.volume.write(x, y, layer.code, t);
    emit(l, x, y, t);
  }

  void emit(std::size_t l, int x, int y, Timestamp t) {
    const LayerConfig& cfg = spec_.layers[l];
    const auto ux = static_cast<std::uint16_t>(x), uy = static_cast<std::uint16_t>(y);
    const bool last = l + 1 == layers_.size();
    const std::vector<double>& z = layers_[l].code;
    switch (cfg.strategy) {
      case Strategy::kRawPool:
        if (last) {
          if (record_) emitted_.push_back({ux, uy, kAllChannels, t});
        } else {
          trigger(l + 1, x, y, t);
        }
        break;
      case Strategy::kThreshold: {
        const auto fired = threshold_features(z, cfg.theta_z);
        if (last) {
          if (record_)
            for (int c : fired) emitted_.push_back({ux, uy, c, t});
        } else if (!fired.empty()) {
          for (int c : fired) layers_[l + 1].input_map.update(x, y, c, t);
          trigger(l + 1, x, y, t);
        }
        break;
      }
      case Strategy::kTimeDelay: {
        const auto spikes = encode_time_delay(z, t, cfg.alpha);
        if (last) {
          if (record_)
            for (const auto& s : spikes) emitted_.push_back({ux, uy, s.channel, s.t});
        } else {
          auto& q = layers_[l + 1].pending;
          for (const auto& s : spikes) q.push({{ux, uy, s.channel, s.t}, next_seq_++});
          flush(l + 1, t);
        }
        break;
      }
    }
  }

  // Delivers queued events with time <= `until` to layer l. Every event queued
  // later has a time no earlier than the current input, so delivery stays
  // time-ordered.
  void flush(std::size_t l, Timestamp until) {
    auto& q = layers_[l].pending;
    while (!q.empty() && q.top().e.t <= until) {
      const FeatureEvent e = q.top().e;
      q.pop();
      layers_[l].input_map.update(e.x, e.y, e.channel, e.t);
      trigger(l, e.x, e.y, e.t);
    }
  }

  NetworkSpec spec_;
  std::span<const Autoencoder> encoders_;
  std::size_t sink_layer_;
  Sink sink_;
  std::vector<Layer> layers_;
  std::vector<FeatureEvent> emitted_;
  bool record_ = false;
  std::uint64_t next_seq_ = 0;
};

struct LayerOutput {
  FeatureVolume volume;
  std::vector<FeatureEvent> emitted;
};

/// Runs a single camera-fed layer over a whole stream.
inline LayerOutput run_layer(const EventStream& stream, const LayerConfig& cfg,
                             const Autoencoder& ae, BorderPolicy border = BorderPolicy::kZeroPad) {
  NetworkSpec spec{stream.geometry, {cfg}, border};
  NetworkRunner runner(spec, std::span<const Autoencoder>(&ae, 1));
  runner.record_emitted(true);
  runner.push(stream);
  runner.finish();
  return {runner.final_volume(), runner.emitted()};
}

/// Final feature volume of the full stack for one stream.
inline FeatureVolume extract_features(const NetworkSpec& spec, std::span<const Autoencoder> encoders,
                                      const EventStream& stream) {
  NetworkRunner runner(spec, encoders);
  runner.push(stream);
  runner.finish();
  return runner.final_volume();
}

}  // namespace dtnet
