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

#include <cmath>
#include <cstdint>
#include <string>

#include "dtnet/errors.hpp"

namespace dtnet {

enum class Activation : std::uint8_t { kSigmoid = 1, kRectifier = 2, kIdentity = 3 };

inline double activate(Activation a, double x) noexcept {
  switch (a) {
    case Activation::kSigmoid:
      return 1.0 / (1.0 + std::exp(-x));
    case Activation::kRectifier:
      return x > 0.0 ? x : 0.0;
    case Activation::kIdentity:
      break;
  }
  return x;
}

/// Derivative at pre-activation `x` whose activated value is `y`.
inline double activation_derivative(Activation a, double x, double y) noexcept {
  switch (a) {
    case Activation::kSigmoid:
      return y * (1.0 - y);
    case Activation::kRectifier:
      return x > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity:
      break;
  }
  return 1.0;
}

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kRectifier:
      return "rectifier";
    case Activation::kIdentity:
      return "identity";
  }
  return "unknown";
}

inline Activation parse_activation(const std::string& name) {
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "rectifier" || name == "relu") return Activation::kRectifier;
  if (name == "identity" || name == "linear") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + name + "'");
}

inline bool is_valid_activation_tag(std::uint8_t tag) noexcept { return tag >= 1 && tag <= 3; }

}  // namespace dtnet
