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
#include <random>

#include "dtnet/event.hpp"
#include "dtnet/rng.hpp"

namespace dtnet::testing {

/// Random time-ordered stream with frequent timestamp ties.
inline EventStream random_stream(Rng& rng, Geometry g, std::size_t n, Timestamp max_step = 50) {
  std::uniform_int_distribution<int> xs(0, g.width - 1), ys(0, g.height - 1), ps(0, 1);
  std::uniform_int_distribution<Timestamp> step(0, max_step);
  EventStream s{g, {}, std::nullopt};
  Timestamp t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    t += step(rng);
    s.events.push_back({static_cast<std::uint16_t>(xs(rng)), static_cast<std::uint16_t>(ys(rng)), t,
                        ps(rng) ? Polarity::kOn : Polarity::kOff});
  }
  return s;
}

/// Relative error with an absolute floor for near-zero gradients.
inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace dtnet::testing
