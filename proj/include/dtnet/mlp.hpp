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
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dtnet/activation.hpp"
#include "dtnet/blob.hpp"
#include "dtnet/errors.hpp"
#include "dtnet/rng.hpp"

namespace dtnet {

inline constexpr const char* kMlpMagic = "DTNETMLP";

enum class Loss : std::uint8_t { kCrossEntropy = 1, kSquaredError = 2 };

inline Loss parse_loss(const std::string& s) {
  if (s == "cross_entropy") return Loss::kCrossEntropy;
  if (s == "squared_error") return Loss::kSquaredError;
  throw ConfigError("unknown loss '" + s + "'");
}

inline std::string to_string(Loss l) {
  return l == Loss::kCrossEntropy ? "cross_entropy" : "squared_error";
}

/// Per-feature z-scoring fitted on training data. Constant features get unit
/// scale so they map to zero.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> inv_std;

  bool empty() const noexcept { return mean.empty(); }

  static Standardizer fit(const std::vector<std::vector<double>>& xs) {
    Standardizer s;
    if (xs.empty()) return s;
    const std::size_t d = xs.front().size();
    s.mean.assign(d, 0.0);
    s.inv_std.assign(d, 0.0);
    for (const auto& x : xs)
      for (std::size_t i = 0; i < d; ++i) s.mean[i] += x[i];
    for (auto& m : s.mean) m /= static_cast<double>(xs.size());
    for (const auto& x : xs)
      for (std::size_t i = 0; i < d; ++i) s.inv_std[i] += (x[i] - s.mean[i]) * (x[i] - s.mean[i]);
    for (auto& v : s.inv_std) {
      const double sd = std::sqrt(v / static_cast<double>(xs.size()));
      v = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
    return s;
  }

  void apply(std::span<double> x) const {
    if (empty()) return;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (x[i] - mean[i]) * inv_std[i];
  }

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

struct MlpTrainOptions {
  int epochs = 50;
  double learning_rate = 0.01;
  std::uint64_t seed = 1;
  int max_halvings = 3;
};

struct MlpTrainingReport {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_accuracy;
  double final_learning_rate = 0.0;
};

/// One-hidden-layer perceptron with softmax output.
class Mlp {
 public:
  struct Gradients {
    std::vector<double> hidden_weights, hidden_bias, output_weights, output_bias;
  };

  Mlp() = default;

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  Mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t classes, std::uint64_t seed,
      Activation hidden = Activation::kSigmoid, Loss loss = Loss::kCrossEntropy)
      : Mlp(input_dim, hidden_dim, classes, hidden, loss) {
    Rng rng(seed);
    std::uniform_real_distribution<double> d1(-std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim)),
                                              std::sqrt(6.0 / static_cast<double>(input_dim + hidden_dim)));
    for (auto& w : w1_) w = d1(rng);
    std::uniform_real_distribution<double> d2(-std::sqrt(6.0 / static_cast<double>(hidden_dim + classes)),
                                              std::sqrt(6.0 / static_cast<double>(hidden_dim + classes)));
    for (auto& w : w2_) w = d2(rng);
  }

  static Mlp zeros(std::size_t input_dim, std::size_t hidden_dim, std::size_t classes,
                   Activation hidden = Activation::kSigmoid, Loss loss = Loss::kCrossEntropy) {
    return Mlp(input_dim, hidden_dim, classes, hidden, loss);
  }

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden_dim() const noexcept { return hidden_dim_; }
  std::size_t classes() const noexcept { return classes_; }
  Activation hidden_activation() const noexcept { return act_; }
  Loss loss_kind() const noexcept { return loss_; }

  // Row-major: hidden weights H x I, output weights C x H.
  std::span<double> hidden_weights() noexcept { return w1_; }
  std::span<double> hidden_bias() noexcept { return b1_; }
  std::span<double> output_weights() noexcept { return w2_; }
  std::span<double> output_bias() noexcept { return b2_; }
  std::span<const double> hidden_weights() const noexcept { return w1_; }
  std::span<const double> hidden_bias() const noexcept { return b1_; }
  std::span<const double> output_weights() const noexcept { return w2_; }
  std::span<const double> output_bias() const noexcept { return b2_; }

  const Standardizer& standardizer() const noexcept { return standardizer_; }
  void set_standardizer(Standardizer s) {
    if (!s.empty() && (s.mean.size() != input_dim_ || s.inv_std.size() != input_dim_))
      throw InputError("standardizer dimension does not match the classifier input");
    standardizer_ = std::move(s);
  }

  /// Pre-softmax outputs for an already standardized input.
  std::vector<double> logits(std::span<const double> x) const {
    check_input(x);
    std::vector<double> h(hidden_dim_), pre(hidden_dim_);
    return forward_raw(x, pre, h);
  }

  /// Class probabilities. Applies the standardizer when one is set.
  std::vector<double> forward(std::span<const double> x) const {
    check_input(x);
    std::vector<double> xs(x.begin(), x.end());
    standardizer_.apply(xs);
    return softmax(logits(xs));
  }

  /// Argmax class; ties go to the lowest index.
  std::size_t predict(std::span<const double> x) const {
    const auto p = forward(x);
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  }

  static std::vector<double> softmax(std::vector<double> v) {
    const double m = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (auto& a : v) sum += (a = std::exp(a - m));
    for (auto& a : v) a /= sum;
    return v;
  }

  /// Loss of one sample and the exact gradient of every parameter. The input
  /// is taken as given (no standardization).
  double loss_and_gradients(std::span<const double> x, std::size_t label, Gradients& g) const {
    check_input(x);
    check_label(label);
    std::vector<double> pre(hidden_dim_), h(hidden_dim_);
    const auto p = softmax(forward_raw(x, pre, h));
    const auto delta_out = output_delta(p, label);
    g.output_weights.assign(w2_.size(), 0.0);
    g.output_bias = delta_out;
    g.hidden_weights.assign(w1_.size(), 0.0);
    g.hidden_bias.assign(hidden_dim_, 0.0);
    for (std::size_t c = 0; c < classes_; ++c)
      for (std::size_t j = 0; j < hidden_dim_; ++j)
        g.output_weights[c * hidden_dim_ + j] = delta_out[c] * h[j];
    for (std::size_t j = 0; j < hidden_dim_; ++j) {
      double back = 0.0;
      for (std::size_t c = 0; c < classes_; ++c) back += w2_[c * hidden_dim_ + j] * delta_out[c];
      const double dh = back * activation_derivative(act_, pre[j], h[j]);
      g.hidden_bias[j] = dh;
      for (std::size_t i = 0; i < input_dim_; ++i) g.hidden_weights[j * input_dim_ + i] = dh * x[i];
    }
    return sample_loss(p, label);
  }

  double loss(std::span<const double> x, std::size_t label) const {
    std::vector<double> pre(hidden_dim_), h(hidden_dim_);
    return sample_loss(softmax(forward_raw(x, pre, h)), label);
  }

  /// SGD step on one (already standardized) sample, updating weights in
  /// place. Returns the loss before the step and whether the pre-step
  /// prediction was correct.
  std::pair<double, bool> sgd_step(std::span<const double> x, std::size_t label, double lr) {
    pre_.resize(hidden_dim_);
    h_.resize(hidden_dim_);
    const auto p = softmax(forward_raw(x, pre_, h_));
    const double l = sample_loss(p, label);
    const bool correct =
        static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()) == label;
    if (!std::isfinite(l)) return {l, correct};
    const auto delta_out = output_delta(p, label);
    dh_.assign(hidden_dim_, 0.0);
    for (std::size_t c = 0; c < classes_; ++c) {
      double* row = w2_.data() + c * hidden_dim_;
      for (std::size_t j = 0; j < hidden_dim_; ++j) {
        dh_[j] += row[j] * delta_out[c];
        row[j] -= lr * delta_out[c] * h_[j];
      }
      b2_[c] -= lr * delta_out[c];
    }
    for (std::size_t j = 0; j < hidden_dim_; ++j) {
      const double d = dh_[j] * activation_derivative(act_, pre_[j], h_[j]);
      if (d == 0.0) continue;
      double* row = w1_.data() + j * input_dim_;
      const double step = lr * d;
      for (std::size_t i = 0; i < input_dim_; ++i) row[i] -= step * x[i];
      b1_[j] -= step;
    }
    return {l, correct};
  }

  /// Seeded-shuffle SGD over the samples for the given number of epochs. An
  /// epoch producing a non-finite loss is rolled back and retried at half
  /// the learning rate, up to max_halvings times.
  MlpTrainingReport train(const std::vector<std::vector<double>>& xs,
                          const std::vector<std::size_t>& labels, const MlpTrainOptions& opt) {
    if (!(opt.learning_rate > 0.0)) throw ConfigError("classifier learning rate must be > 0");
    if (opt.epochs < 0) throw ConfigError("classifier epochs must be >= 0");
    if (xs.size() != labels.size()) throw InputError("sample and label counts differ");
    for (const auto& x : xs) check_input(x);
    for (auto l : labels) check_label(l);

    std::vector<std::vector<double>> prepared = xs;
    for (auto& x : prepared) standardizer_.apply(x);

    MlpTrainingReport report;
    double lr = opt.learning_rate;
    int halvings = 0;
    Rng rng(opt.seed);
    std::vector<std::size_t> order(xs.size());
    for (int epoch = 0; epoch < opt.epochs && !xs.empty(); ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      const auto w1 = w1_, b1 = b1_, w2 = w2_, b2 = b2_;
      for (;;) {
        double total = 0.0;
        std::size_t correct = 0;
        bool finite = true;
        for (std::size_t idx : order) {
          const auto [l, ok] = sgd_step(prepared[idx], labels[idx], lr);
          if (!std::isfinite(l)) {
            finite = false;
            break;
          }
          total += l;
          correct += ok ? 1 : 0;
        }
        if (finite && all_finite()) {
          report.epoch_loss.push_back(total / static_cast<double>(xs.size()));
          report.epoch_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(xs.size()));
          break;
        }
        w1_ = w1;
        b1_ = b1;
        w2_ = w2;
        b2_ = b2;
        if (halvings >= opt.max_halvings)
          throw TrainingError("classifier loss not finite after " + std::to_string(halvings) +
                              " learning-rate halvings");
        ++halvings;
        lr *= 0.5;
      }
    }
    report.final_learning_rate = lr;
    return report;
  }

  bool all_finite() const noexcept {
    for (const auto* v : {&w1_, &b1_, &w2_, &b2_})
      for (double x : *v)
        if (!std::isfinite(x)) return false;
    return true;
  }

  /// Layout: magic, version, u64 I, u64 H, u64 C, u8 hidden activation,
  /// u8 loss, W1, b1, W2, b2 (little-endian f64), u8 standardizer flag and,
  /// when set, I means followed by I inverse deviations.
  std::vector<std::uint8_t> serialize() const {
    BlobWriter w(std::string_view(kMlpMagic, 8));
    w.u64(input_dim_);
    w.u64(hidden_dim_);
    w.u64(classes_);
    w.u8(static_cast<std::uint8_t>(act_));
    w.u8(static_cast<std::uint8_t>(loss_));
    w.f64s(w1_);
    w.f64s(b1_);
    w.f64s(w2_);
    w.f64s(b2_);
    w.u8(standardizer_.empty() ? 0 : 1);
    if (!standardizer_.empty()) {
      w.f64s(standardizer_.mean);
      w.f64s(standardizer_.inv_std);
    }
    return std::move(w).take();
  }

  static Mlp deserialize(std::span<const std::uint8_t> bytes) {
    BlobReader r(bytes, std::string_view(kMlpMagic, 8));
    const std::size_t in = r.dim("input dimension");
    const std::size_t hid = r.dim("hidden dimension");
    const std::size_t cls = r.dim("class count");
    if (in == 0 || hid == 0 || cls < 2) throw CorruptionError("inconsistent classifier dimensions", 12);
    const std::size_t tag_at = r.offset();
    const std::uint8_t act = r.u8(), loss = r.u8();
    if (!is_valid_activation_tag(act) || (loss != 1 && loss != 2))
      throw CorruptionError("unknown activation or loss tag", tag_at);
    Mlp m(in, hid, cls, static_cast<Activation>(act), static_cast<Loss>(loss));
    m.w1_ = r.f64s(hid * in);
    m.b1_ = r.f64s(hid);
    m.w2_ = r.f64s(cls * hid);
    m.b2_ = r.f64s(cls);
    const std::size_t flag_at = r.offset();
    const std::uint8_t flag = r.u8();
    if (flag > 1) throw CorruptionError("bad standardizer flag", flag_at);
    if (flag == 1) {
      m.standardizer_.mean = r.f64s(in);
      m.standardizer_.inv_std = r.f64s(in);
    }
    r.expect_end();
    return m;
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.input_dim_ == b.input_dim_ && a.hidden_dim_ == b.hidden_dim_ &&
           a.classes_ == b.classes_ && a.act_ == b.act_ && a.loss_ == b.loss_ &&
           a.w1_ == b.w1_ && a.b1_ == b.b1_ && a.w2_ == b.w2_ && a.b2_ == b.b2_ &&
           a.standardizer_ == b.standardizer_;
  }

 private:
  Mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t classes, Activation hidden, Loss loss)
      : input_dim_(input_dim), hidden_dim_(hidden_dim), classes_(classes), act_(hidden), loss_(loss),
        w1_(hidden_dim * input_dim, 0.0), b1_(hidden_dim, 0.0), w2_(classes * hidden_dim, 0.0),
        b2_(classes, 0.0) {
    if (input_dim == 0 || hidden_dim == 0) throw ConfigError("classifier dimensions must be > 0");
    if (classes < 2) throw ConfigError("classifier needs at least two classes");
  }

  void check_input(std::span<const double> x) const {
    if (x.size() != input_dim_)
      throw InputError("classifier input has length " + std::to_string(x.size()) + ", expected " +
                       std::to_string(input_dim_));
  }

  void check_label(std::size_t label) const {
    if (label >= classes_) throw InputError("label " + std::to_string(label) + " out of range");
  }

  std::vector<double> forward_raw(std::span<const double> x, std::vector<double>& pre,
                                  std::vector<double>& h) const {
    for (std::size_t j = 0; j < hidden_dim_; ++j) {
      const double* row = w1_.data() + j * input_dim_;
      double a = b1_[j];
      for (std::size_t i = 0; i < input_dim_; ++i) a += row[i] * x[i];
      pre[j] = a;
      h[j] = activate(act_, a);
    }
    std::vector<double> out(classes_);
    for (std::size_t c = 0; c < classes_; ++c) {
      const double* row = w2_.data() + c * hidden_dim_;
      double a = b2_[c];
      for (std::size_t j = 0; j < hidden_dim_; ++j) a += row[j] * h[j];
      out[c] = a;
    }
    return out;
  }

  double sample_loss(const std::vector<double>& p, std::size_t label) const {
    if (loss_ == Loss::kCrossEntropy) return -std::log(p[label]);
    double s = 0.0;
    for (std::size_t c = 0; c < classes_; ++c) {
      const double d = p[c] - (c == label ? 1.0 : 0.0);
      s += d * d;
    }
    return s;
  }

  // dLoss / dlogit.
  std::vector<double> output_delta(const std::vector<double>& p, std::size_t label) const {
    std::vector<double> d(classes_);
    if (loss_ == Loss::kCrossEntropy) {
      for (std::size_t c = 0; c < classes_; ++c) d[c] = p[c] - (c == label ? 1.0 : 0.0);
      return d;
    }
    double dot = 0.0;
    for (std::size_t c = 0; c < classes_; ++c) dot += (p[c] - (c == label ? 1.0 : 0.0)) * p[c];
    for (std::size_t k = 0; k < classes_; ++k)
      d[k] = 2.0 * p[k] * ((p[k] - (k == label ? 1.0 : 0.0)) - dot);
    return d;
  }

  std::size_t input_dim_ = 0, hidden_dim_ = 0, classes_ = 0;
  Activation act_ = Activation::kSigmoid;
  Loss loss_ = Loss::kCrossEntropy;
  std::vector<double> w1_, b1_, w2_, b2_;
  Standardizer standardizer_;
  std::vector<double> pre_, h_, dh_;
};

}  // namespace dtnet
