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

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "dtnet/time_surface.hpp"
#include "test_util.hpp"

namespace dtnet {
namespace {

constexpr Geometry kSensor{34, 34};

TEST(TimestampMapTest, SingleUpdateSetsOnlyThatCell) {
  TimestampMap map(kSensor);
  map.update(Event{3, 4, 100, Polarity::kOn});
  EXPECT_EQ(map.at(3, 4, channel_of(Polarity::kOn)), 100);
  for (int y = 0; y < kSensor.height; ++y)
    for (int x = 0; x < kSensor.width; ++x)
      for (int c = 0; c < 2; ++c) {
        if (!(x == 3 && y == 4 && c == 1)) {
          EXPECT_EQ(map.at(x, y, c), kNever);
        }
      }
}

TEST(TimestampMapTest, KeepsLatestTime) {
  TimestampMap map(kSensor);
  map.update(Event{3, 4, 100, Polarity::kOn});
  map.update(Event{3, 4, 200, Polarity::kOn});
  EXPECT_EQ(map.at(3, 4, 1), 200);
}

TEST(TimestampMapTest, PolarityPlanesAreIndependent) {
  TimestampMap map(kSensor);
  map.update(Event{3, 4, 100, Polarity::kOn});
  map.update(Event{3, 4, 150, Polarity::kOff});
  EXPECT_EQ(map.at(3, 4, channel_of(Polarity::kOn)), 100);
  EXPECT_EQ(map.at(3, 4, channel_of(Polarity::kOff)), 150);
}

TEST(TimestampMapTest, RejectsOutOfBoundsAndRegression) {
  TimestampMap map(kSensor);
  EXPECT_THROW(map.update(Event{34, 0, 0, Polarity::kOn}), BoundsError);
  map.update(Event{0, 0, 500, Polarity::kOn});
  EXPECT_THROW(map.update(Event{1, 1, 499, Polarity::kOn}), OrderingError);
}

TEST(TimestampMapTest, SlackToleratesSmallRegressionWithoutLoweringTimes) {
  TimestampMap map(kSensor, 2, 10);
  map.update(Event{1, 1, 500, Polarity::kOn});
  map.update(Event{1, 1, 495, Polarity::kOn});
  EXPECT_EQ(map.at(1, 1, 1), 500);
  EXPECT_THROW(map.update(Event{1, 1, 489, Polarity::kOn}), OrderingError);
}

TEST(TimeContextTest, OnlyCentreFired) {
  TimestampMap map(kSensor);
  const Event e{10, 10, 42, Polarity::kOff};
  map.update(e);
  const auto ctx = time_context(map, e, 1);
  ASSERT_EQ(ctx.times.size(), 18u);
  EXPECT_EQ(std::count_if(ctx.times.begin(), ctx.times.end(), [](Timestamp t) { return t != kNever; }), 1);
  EXPECT_EQ(ctx.at(0, 0, channel_of(Polarity::kOff)), 42);
}

TEST(TimeContextTest, CornerNeighboursOffSensorAreNever) {
  TimestampMap map(kSensor);
  // Fill everything so only off-sensor cells can be NEVER.
  for (int y = 0; y < kSensor.height; ++y)
    for (int x = 0; x < kSensor.width; ++x)
      for (Polarity p : {Polarity::kOff, Polarity::kOn})
        map.update(Event{static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), 7, p});
  const auto ctx = time_context(map, Event{0, 0, 7, Polarity::kOn}, 1);
  int off_sensor = 0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx)
      if (ctx.at(dx, dy, 0) == kNever) {
        EXPECT_EQ(ctx.at(dx, dy, 1), kNever);
        ++off_sensor;
      }
  EXPECT_EQ(off_sensor, 5);
}

TEST(TimeContextTest, RadiusTwoHasFiftyEntries) {
  TimestampMap map(kSensor);
  EXPECT_EQ(time_context(map, Event{5, 5, 0, Polarity::kOn}, 2).times.size(), 50u);
}

TEST(TimeSurfaceTest, AnalyticDecayValues) {
  const double tau = 30000.0;
  TimeContext ctx{1, 2, std::vector<Timestamp>(18, kNever)};
  ctx.times[window_index(1, 2, 0, 0, 0)] = 100000;
  ctx.times[window_index(1, 2, 1, 0, 0)] = 100000 - 30000;
  ctx.times[window_index(1, 2, -1, 0, 0)] = 100000 - 150000;
  const auto s = time_surface(ctx, 100000, tau);
  EXPECT_EQ(s.at(0, 0, 0), 1.0);
  EXPECT_NEAR(s.at(1, 0, 0), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(s.at(1, 0, 0), 0.367879, 1e-6);
  EXPECT_NEAR(s.at(-1, 0, 0), std::exp(-5.0), 1e-12);
  EXPECT_EQ(s.at(0, 1, 1), 0.0);
}

TEST(TimeSurfaceTest, RejectsNonPositiveTau) {
  TimeContext ctx{1, 2, std::vector<Timestamp>(18, kNever)};
  EXPECT_THROW(time_surface(ctx, 0, 0.0), ConfigError);
  EXPECT_THROW(time_surface(ctx, 0, -5.0), ConfigError);
}

TEST(BruteForceTest, LoneEventGivesUnitCentre) {
  EventStream s{kSensor, {{5, 6, 1000, Polarity::kOn}}, std::nullopt};
  const auto surf = brute_force_time_surface(s, 0, 2, 30000.0);
  for (std::size_t k = 0; k < surf.values.size(); ++k)
    EXPECT_EQ(surf.values[k], k == window_index(2, 2, 0, 0, 1) ? 1.0 : 0.0);
}

TEST(BruteForceTest, EqualTimestampPermutationInvariant) {
  EventStream a{kSensor,
                {{5, 5, 100, Polarity::kOn},
                 {6, 5, 200, Polarity::kOn},
                 {4, 6, 200, Polarity::kOff},
                 {5, 4, 200, Polarity::kOn},
                 {5, 5, 300, Polarity::kOn}},
                std::nullopt};
  EventStream b = a;
  std::swap(b.events[1], b.events[3]);
  std::swap(b.events[2], b.events[3]);
  EXPECT_EQ(brute_force_time_surface(a, 4, 2, 1000.0).values,
            brute_force_time_surface(b, 4, 2, 1000.0).values);
}

// Incremental map + context + kernel, and the fused hot path, against the
// rescanning oracle at every event.
TEST(OracleEquivalenceTest, IncrementalMatchesBruteForce) {
  Rng rng(2024);
  for (int trial = 0; trial < 8; ++trial) {
    const Geometry g{8 + trial * 7, 6 + trial * 5};
    const auto stream = testing::random_stream(rng, g, 600, trial % 2 ? 3 : 200);
    const int radius = 1 + trial % 3;
    const double tau = 250.0 * (trial + 1);
    TimestampMap map(g);
    std::vector<double> fused(window_size(radius, 2));
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
      const Event& e = stream.events[i];
      map.update(e);
      const auto incremental = time_surface(time_context(map, e, radius), e.t, tau);
      fill_surface(map, e.x, e.y, e.t, radius, tau, fused);
      const auto oracle = brute_force_time_surface(stream, i, radius, tau);
      for (std::size_t k = 0; k < oracle.values.size(); ++k) {
        ASSERT_NEAR(incremental.values[k], oracle.values[k], 1e-12) << "event " << i;
        ASSERT_NEAR(fused[k], oracle.values[k], 1e-12) << "event " << i;
      }
    }
  }
}

TEST(TimeSurfacePropertyTest, RangeAndUnitCentre) {
  Rng rng(7);
  const auto stream = testing::random_stream(rng, {20, 20}, 2000);
  TimestampMap map(stream.geometry);
  for (const auto& e : stream.events) {
    map.update(e);
    const auto s = time_surface(time_context(map, e, 2), e.t, 500.0);
    for (double v : s.values) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    ASSERT_EQ(s.at(0, 0, channel_of(e.p)), 1.0);
  }
}

TEST(TimeSurfacePropertyTest, MonotoneDecayForFrozenMap) {
  Rng rng(11);
  const auto stream = testing::random_stream(rng, {16, 16}, 500);
  TimestampMap map(stream.geometry);
  for (const auto& e : stream.events) map.update(e);
  const auto ctx = time_context(map, 8, 8, 3);
  std::vector<double> prev = time_surface(ctx, map.latest(), 300.0).values;
  for (Timestamp dt = 1; dt < 5000; dt += 97) {
    const auto cur = time_surface(ctx, map.latest() + dt, 300.0).values;
    for (std::size_t k = 0; k < cur.size(); ++k) ASSERT_LE(cur[k], prev[k]);
    prev = cur;
  }
}

TEST(TimeSurfacePropertyTest, ScalingTimeAndTauTogetherIsInvariant) {
  Rng rng(13);
  auto stream = testing::random_stream(rng, {16, 16}, 400);
  for (Timestamp c : {2, 3, 1000}) {
    EventStream scaled = stream;
    for (auto& e : scaled.events) e.t *= c;
    for (std::size_t i = 0; i < stream.events.size(); i += 37) {
      const auto a = brute_force_time_surface(stream, i, 2, 80.0);
      const auto b = brute_force_time_surface(scaled, i, 2, 80.0 * static_cast<double>(c));
      for (std::size_t k = 0; k < a.values.size(); ++k) ASSERT_NEAR(a.values[k], b.values[k], 1e-12);
    }
  }
}

TEST(RefractoryFilterTest, DropsFastRepeatsOnly) {
  EventStream s{kSensor,
                {{1, 1, 0, Polarity::kOn},
                 {1, 1, 50, Polarity::kOn},
                 {1, 1, 60, Polarity::kOff},
                 {2, 1, 70, Polarity::kOn},
                 {1, 1, 150, Polarity::kOn}},
                std::nullopt};
  const auto out = apply_refractory(s, 100);
  ASSERT_EQ(out.events.size(), 4u);
  EXPECT_EQ(out.events[1].t, 60);
  EXPECT_EQ(out.events[3].t, 150);
  EXPECT_EQ(apply_refractory(s, 0).events.size(), s.events.size());
}

TEST(EventStreamTest, ValidateReportsBoundsAndOrdering) {
  EventStream s{{4, 4}, {{0, 0, 10, Polarity::kOn}, {4, 0, 11, Polarity::kOn}}, std::nullopt};
  EXPECT_THROW(validate(s), BoundsError);
  s.events[1] = {1, 0, 9, Polarity::kOn};
  EXPECT_THROW(validate(s), OrderingError);
  EXPECT_NO_THROW(validate(s, 1));
}

}  // namespace
}  // namespace dtnet
