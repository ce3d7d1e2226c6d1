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
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "dtnet/errors.hpp"
#include "dtnet/hierarchy.hpp"
#include "dtnet/mlp.hpp"
#include "dtnet/parallel.hpp"

namespace dtnet {

/// Flattens a volume row by row (y, then x, then channel). Untouched cells
/// contribute zeros.
inline std::vector<double> vectorize(const FeatureVolume& vol) {
  const Geometry& g = vol.geometry();
  const auto depth = static_cast<std::size_t>(vol.depth());
  std::vector<double> out(g.pixels() * depth, 0.0);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      if (vol.last_update(x, y) == kNever) continue;
      const auto z = vol.code(x, y);
      std::copy(z.begin(), z.end(),
                out.begin() + static_cast<std::ptrdiff_t>(
                                  (static_cast<std::size_t>(y) * g.width + x) * depth));
    }
  }
  return out;
}

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : n_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const noexcept { return n_; }

  void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1) {
    if (truth >= n_ || predicted >= n_) throw InputError("class index out of range");
    counts_[truth * n_ + predicted] += count;
  }

  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * n_ + predicted];
  }

  void merge(const ConfusionMatrix& other) {
    if (other.n_ != n_) throw InputError("cannot merge confusion matrices of different sizes");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

  std::uint64_t row_total(std::size_t truth) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < n_; ++p) s += at(truth, p);
    return s;
  }

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }

  std::uint64_t trace() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += at(i, i);
    return s;
  }

  /// trace / total; 0 for an empty matrix.
  double overall_rate() const {
    const auto t = total();
    return t == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(t);
  }

  /// Recall of one class; 0 when the class has no samples.
  double class_rate(std::size_t c) const {
    const auto t = row_total(c);
    return t == 0 ? 0.0 : static_cast<double>(at(c, c)) / static_cast<double>(t);
  }

  std::string to_text(const std::vector<std::string>& names) const {
    std::size_t width = 6;
    for (const auto& n : names) width = std::max(width, n.size() + 1);
    for (std::size_t i = 0; i < counts_.size(); ++i)
      width = std::max(width, std::to_string(counts_[i]).size() + 1);
    std::ostringstream os;
    os << std::setw(static_cast<int>(width)) << "true\\pred";
    for (std::size_t p = 0; p < n_; ++p) os << std::setw(static_cast<int>(width)) << name(names, p);
    os << std::setw(9) << "rate" << "\n";
    for (std::size_t t = 0; t < n_; ++t) {
      os << std::setw(static_cast<int>(width)) << name(names, t);
      for (std::size_t p = 0; p < n_; ++p) os << std::setw(static_cast<int>(width)) << at(t, p);
      os << std::setw(9) << std::fixed << std::setprecision(4) << class_rate(t) << "\n";
    }
    os << "overall " << std::fixed << std::setprecision(4) << overall_rate() << " (" << trace()
       << "/" << total() << ")\n";
    return os.str();
  }

  std::string to_csv(const std::vector<std::string>& names) const {
    std::ostringstream os;
    os << "true\\pred";
    for (std::size_t p = 0; p < n_; ++p) os << "," << name(names, p);
    os << "\n";
    for (std::size_t t = 0; t < n_; ++t) {
      os << name(names, t);
      for (std::size_t p = 0; p < n_; ++p) os << "," << at(t, p);
      os << "\n";
    }
    return os.str();
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  static std::string name(const std::vector<std::string>& names, std::size_t i) {
    return i < names.size() ? names[i] : std::to_string(i);
  }

  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

/// Argmax predictions against labels. Runs on `workers` threads; the matrix
/// does not depend on the worker count.
inline ConfusionMatrix evaluate(const Mlp& mlp, const std::vector<std::vector<double>>& xs,
                                const std::vector<std::size_t>& labels, int workers = 1) {
  if (xs.size() != labels.size()) throw InputError("sample and label counts differ");
  std::vector<std::size_t> predicted(xs.size());
  parallel_for(xs.size(), workers, [&](std::size_t i) { predicted[i] = mlp.predict(xs[i]); });
  ConfusionMatrix cm(mlp.classes());
  for (std::size_t i = 0; i < xs.size(); ++i) cm.add(labels[i], predicted[i]);
  return cm;
}

}  // namespace dtnet
