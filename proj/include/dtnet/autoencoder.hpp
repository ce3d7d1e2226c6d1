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
#include <deque>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dtnet/activation.hpp"
#include "dtnet/blob.hpp"
#include "dtnet/errors.hpp"
#include "dtnet/rng.hpp"

namespace dtnet {

inline constexpr const char* kAutoencoderMagic = "DTNETAE\0";

/// Single-hidden-layer autoencoder with untied weights:
///   code           z = enc(W s + b)
///   reconstruction r = dec(W' z + b')
/// The training loss is the per-element mean squared error ||r - s||^2 / D.
class Autoencoder {
 public:
  struct Gradients {
    std::vector<double> encoder_weights, encoder_bias, decoder_weights, decoder_bias;
  };

  Autoencoder() = default;

  /// Weights uniform in +-sqrt(6 / (D + N_z)), biases zero.
  Autoencoder(std::size_t input_dim, std::size_t code_dim, Activation encoder,
              Activation decoder, std::uint64_t seed)
      : Autoencoder(input_dim, code_dim, encoder, decoder) {
    Rng rng(seed);
    const double limit = std::sqrt(6.0 / static_cast<double>(input_dim + code_dim));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& w : w_enc_) w = dist(rng);
    for (auto& w : w_dec_) w = dist(rng);
  }

  /// All parameters zero.
  static Autoencoder zeros(std::size_t input_dim, std::size_t code_dim, Activation encoder,
                           Activation decoder) {
    return Autoencoder(input_dim, code_dim, encoder, decoder);
  }

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t code_dim() const noexcept { return code_dim_; }
  Activation encoder_activation() const noexcept { return enc_; }
  Activation decoder_activation() const noexcept { return dec_; }

  // Row-major: encoder weights are N_z x D, decoder weights are D x N_z.
  std::span<double> encoder_weights() noexcept { return w_enc_; }
  std::span<double> encoder_bias() noexcept { return b_enc_; }
  std::span<double> decoder_weights() noexcept { return w_dec_; }
  std::span<double> decoder_bias() noexcept { return b_dec_; }
  std::span<const double> encoder_weights() const noexcept { return w_enc_; }
  std::span<const double> encoder_bias() const noexcept { return b_enc_; }
  std::span<const double> decoder_weights() const noexcept { return w_dec_; }
  std::span<const double> decoder_bias() const noexcept { return b_dec_; }

  void encode_into(std::span<const double> s, std::span<double> z) const {
    check_input(s);
    if (z.size() != code_dim_) throw InputError("code buffer has the wrong length");
    for (std::size_t k = 0; k < code_dim_; ++k) {
      const double* row = w_enc_.data() + k * input_dim_;
      double a = b_enc_[k];
      for (std::size_t i = 0; i < input_dim_; ++i) a += row[i] * s[i];
      z[k] = activate(enc_, a);
    }
  }

  std::vector<double> encode(std::span<const double> s) const {
    std::vector<double> z(code_dim_);
    encode_into(s, z);
    return z;
  }

  void decode_into(std::span<const double> z, std::span<double> r) const {
    if (z.size() != code_dim_)
      throw InputError("code has length " + std::to_string(z.size()) + ", expected " +
                       std::to_string(code_dim_));
    if (r.size() != input_dim_) throw InputError("reconstruction buffer has the wrong length");
    for (std::size_t j = 0; j < input_dim_; ++j) {
      const double* row = w_dec_.data() + j * code_dim_;
      double a = b_dec_[j];
      for (std::size_t k = 0; k < code_dim_; ++k) a += row[k] * z[k];
      r[j] = activate(dec_, a);
    }
  }

  std::vector<double> decode(std::span<const double> z) const {
    std::vector<double> r(input_dim_);
    decode_into(z, r);
    return r;
  }

  double reconstruction_error(std::span<const double> s) const {
    const auto r = decode(encode(s));
    double sum = 0.0;
    for (std::size_t j = 0; j < input_dim_; ++j) sum += (r[j] - s[j]) * (r[j] - s[j]);
    return sum / static_cast<double>(input_dim_);
  }

  /// Loss at s and its exact gradient with respect to every parameter.
  double loss_and_gradients(std::span<const double> s, Gradients& g) const {
    check_input(s);
    resize(g);
    std::vector<double> hidden_pre(code_dim_), z(code_dim_);
    for (std::size_t k = 0; k < code_dim_; ++k) {
      const double* row = w_enc_.data() + k * input_dim_;
      double a = b_enc_[k];
      for (std::size_t i = 0; i < input_dim_; ++i) a += row[i] * s[i];
      hidden_pre[k] = a;
      z[k] = activate(enc_, a);
    }
    std::vector<double> dz(code_dim_, 0.0);
    const double scale = 2.0 / static_cast<double>(input_dim_);
    double loss = 0.0;
    for (std::size_t j = 0; j < input_dim_; ++j) {
      const double* row = w_dec_.data() + j * code_dim_;
      double a = b_dec_[j];
      for (std::size_t k = 0; k < code_dim_; ++k) a += row[k] * z[k];
      const double r = activate(dec_, a);
      const double diff = r - s[j];
      loss += diff * diff;
      const double delta = scale * diff * activation_derivative(dec_, a, r);
      g.decoder_bias[j] = delta;
      double* grow = g.decoder_weights.data() + j * code_dim_;
      for (std::size_t k = 0; k < code_dim_; ++k) {
        grow[k] = delta * z[k];
        dz[k] += row[k] * delta;
      }
    }
    for (std::size_t k = 0; k < code_dim_; ++k) {
      const double delta = dz[k] * activation_derivative(enc_, hidden_pre[k], z[k]);
      g.encoder_bias[k] = delta;
      double* grow = g.encoder_weights.data() + k * input_dim_;
      for (std::size_t i = 0; i < input_dim_; ++i) grow[i] = delta * s[i];
    }
    return loss / static_cast<double>(input_dim_);
  }

  /// One SGD step on the reconstruction loss of s. Returns the loss before
  /// the step. Throws TrainingError, leaving the parameters untouched, when
  /// the loss or any gradient is not finite.
  double train_step(std::span<const double> s, double learning_rate) {
    if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
    const double loss = loss_and_gradients(s, scratch_);
    if (!std::isfinite(loss)) throw TrainingError("autoencoder loss is not finite");
    for (const auto* v : {&scratch_.encoder_weights, &scratch_.encoder_bias,
                          &scratch_.decoder_weights, &scratch_.decoder_bias})
      for (double x : *v)
        if (!std::isfinite(x)) throw TrainingError("autoencoder gradient is not finite");
    axpy(-learning_rate, scratch_.encoder_weights, w_enc_);
    axpy(-learning_rate, scratch_.encoder_bias, b_enc_);
    axpy(-learning_rate, scratch_.decoder_weights, w_dec_);
    axpy(-learning_rate, scratch_.decoder_bias, b_dec_);
    return loss;
  }

  bool all_finite() const noexcept {
    for (const auto* v : {&w_enc_, &b_enc_, &w_dec_, &b_dec_})
      for (double x : *v)
        if (!std::isfinite(x)) return false;
    return true;
  }

  /// Layout: magic, version, u64 D, u64 N_z, u8 encoder activation,
  /// u8 decoder activation, then W, b, W', b' as little-endian f64.
  std::vector<std::uint8_t> serialize() const {
    BlobWriter w(std::string_view(kAutoencoderMagic, 8));
    w.u64(input_dim_);
    w.u64(code_dim_);
    w.u8(static_cast<std::uint8_t>(enc_));
    w.u8(static_cast<std::uint8_t>(dec_));
    w.f64s(w_enc_);
    w.f64s(b_enc_);
    w.f64s(w_dec_);
    w.f64s(b_dec_);
    return std::move(w).take();
  }

  static Autoencoder deserialize(std::span<const std::uint8_t> bytes) {
    BlobReader r(bytes, std::string_view(kAutoencoderMagic, 8));
    const std::size_t d = r.dim("input dimension");
    const std::size_t n = r.dim("code dimension");
    if (n == 0 || n >= d) throw CorruptionError("inconsistent autoencoder dimensions", 12);
    const std::size_t tag_at = r.offset();
    const std::uint8_t enc = r.u8(), dec = r.u8();
    if (!is_valid_activation_tag(enc) || !is_valid_activation_tag(dec))
      throw CorruptionError("unknown activation tag", tag_at);
    Autoencoder ae(d, n, static_cast<Activation>(enc), static_cast<Activation>(dec));
    ae.w_enc_ = r.f64s(n * d);
    ae.b_enc_ = r.f64s(n);
    ae.w_dec_ = r.f64s(d * n);
    ae.b_dec_ = r.f64s(d);
    r.expect_end();
    return ae;
  }

  friend bool operator==(const Autoencoder& a, const Autoencoder& b) {
    return a.input_dim_ == b.input_dim_ && a.code_dim_ == b.code_dim_ && a.enc_ == b.enc_ &&
           a.dec_ == b.dec_ && a.w_enc_ == b.w_enc_ && a.b_enc_ == b.b_enc_ &&
           a.w_dec_ == b.w_dec_ && a.b_dec_ == b.b_dec_;
  }

 private:
  Autoencoder(std::size_t input_dim, std::size_t code_dim, Activation encoder, Activation decoder)
      : input_dim_(input_dim), code_dim_(code_dim), enc_(encoder), dec_(decoder),
        w_enc_(code_dim * input_dim, 0.0), b_enc_(code_dim, 0.0),
        w_dec_(input_dim * code_dim, 0.0), b_dec_(input_dim, 0.0) {
    if (code_dim == 0) throw ConfigError("code dimension must be >= 1");
    if (code_dim >= input_dim)
      throw ConfigError("code dimension " + std::to_string(code_dim) +
                        " must be smaller than the input dimension " + std::to_string(input_dim));
  }

  void check_input(std::span<const double> s) const {
    if (s.size() != input_dim_)
      throw InputError("autoencoder input has length " + std::to_string(s.size()) +
                       ", expected " + std::to_string(input_dim_));
  }

  void resize(Gradients& g) const {
    g.encoder_weights.resize(w_enc_.size());
    g.encoder_bias.resize(b_enc_.size());
    g.decoder_weights.resize(w_dec_.size());
    g.decoder_bias.resize(b_dec_.size());
  }

  static void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
  }

  std::size_t input_dim_ = 0;
  std::size_t code_dim_ = 0;
  Activation enc_ = Activation::kSigmoid;
  Activation dec_ = Activation::kSigmoid;
  std::vector<double> w_enc_, b_enc_, w_dec_, b_dec_;
  Gradients scratch_;
};

struct TrainOptions {
  double threshold = 0.01;        // running-mean MSE below which training stops
  std::size_t max_surfaces = 200000;
  double learning_rate = 0.05;
  std::size_t window = 1000;      // running-mean window
  std::size_t sample_every = 1000;
  int max_halvings = 3;
};

struct TrainingReport {
  std::size_t surfaces_seen = 0;
  double final_error = 0.0;
  std::vector<double> trajectory;  // running mean, sampled
  bool converged = false;
  double final_learning_rate = 0.0;
};

/// Online training: one SGD step per surface pulled from `next` (which fills
/// its argument and returns false once exhausted). Converged once a full
/// window of per-surface losses averages below the threshold.
template <typename Source>
TrainingReport train_until_threshold(Autoencoder& ae, Source&& next, const TrainOptions& opt) {
  if (!(opt.threshold >= 0.0)) throw ConfigError("convergence threshold must be >= 0");
  if (opt.max_surfaces == 0) throw ConfigError("max_surfaces must be > 0");
  if (opt.window == 0 || opt.sample_every == 0) throw ConfigError("window sizes must be > 0");
  TrainingReport report;
  double lr = opt.learning_rate;
  int halvings = 0;
  std::deque<double> recent;
  double recent_sum = 0.0;
  std::vector<double> surface;
  auto running_mean = [&] {
    return recent.empty() ? 0.0 : recent_sum / static_cast<double>(recent.size());
  };

  while (report.surfaces_seen < opt.max_surfaces && next(surface)) {
    double loss;
    for (;;) {
      try {
        loss = ae.train_step(surface, lr);
        break;
      } catch (const TrainingError&) {
        if (halvings >= opt.max_halvings) throw;
        ++halvings;
        lr *= 0.5;
      }
    }
    ++report.surfaces_seen;
    recent.push_back(loss);
    recent_sum += loss;
    if (recent.size() > opt.window) {
      recent_sum -= recent.front();
      recent.pop_front();
    }
    if (report.surfaces_seen % opt.sample_every == 0) report.trajectory.push_back(running_mean());
    if (recent.size() == opt.window && running_mean() < opt.threshold) {
      report.converged = true;
      break;
    }
  }
  report.final_error = std::max(running_mean(), 0.0);
  if (report.trajectory.empty() || report.surfaces_seen % opt.sample_every != 0)
    report.trajectory.push_back(report.final_error);
  report.final_learning_rate = lr;
  return report;
}

}  // namespace dtnet
