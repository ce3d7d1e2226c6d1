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

// Synthetic stand-ins for neuromorphic recordings, produced through the frame
// conversion path:
//
//  * saccade digits: a small gray-level digit image upscaled to 28x28 on a
//    34x34 canvas and swept along a three-segment triangular trajectory over
//    300 ms, like the sensor motion used to record N-MNIST;
//  * car scenes: a car silhouette (body, cabin, two wheels) drifting across
//    the view versus drifting random clutter, two classes like N-CARS.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dtnet/errors.hpp"
#include "dtnet/event.hpp"
#include "dtnet/event_io.hpp"
#include "dtnet/frames.hpp"
#include "dtnet/rng.hpp"

namespace dtnet::synthetic {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // row-major, [0, 1]
  int label = 0;

  double at(int x, int y) const {
    if (x < 0 || y < 0 || x >= width || y >= height) return 0.0;
    return pixels[static_cast<std::size_t>(y) * width + x];
  }

  /// Bilinear sample with zero outside the image.
  double sample(double x, double y) const {
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    return (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) +
           (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
  }
};

/// Reads "label,v0,...,v63" rows (values 0..16, 8x8 row-major); lines
/// starting with '#' are skipped.
inline std::vector<GrayImage> load_digits_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::vector<GrayImage> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<int> values;
    while (std::getline(ss, cell, ',')) values.push_back(std::stoi(cell));
    if (values.size() != 65)
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 65 fields");
    GrayImage img{8, 8, {}, values[0]};
    for (std::size_t i = 1; i < values.size(); ++i) img.pixels.push_back(values[i] / 16.0);
    out.push_back(std::move(img));
  }
  return out;
}

struct SaccadeOptions {
  Geometry canvas{34, 34};
  int digit_side = 28;
  Timestamp saccade_us = 100000;
  Timestamp frame_us = 500;
  double amplitude = 1.5;  // pixels
  double contrast_threshold = 0.15;
};

/// Frames of one digit swept along the triangular saccade path. `rng` adds a
/// sub-pixel placement jitter per sample.
inline FrameSequence saccade_frames(const GrayImage& digit, const SaccadeOptions& opt, Rng& rng) {
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  const double jx = jitter(rng), jy = jitter(rng);
  const double scale = static_cast<double>(digit.width) / opt.digit_side;
  const double origin_x = (opt.canvas.width - opt.digit_side) / 2.0 + jx;
  const double origin_y = (opt.canvas.height - opt.digit_side) / 2.0 + jy;
  const double a = opt.amplitude;
  const std::array<std::array<double, 2>, 4> path{{{-a, a}, {a, a}, {0.0, -a}, {-a, a}}};

  FrameSequence seq;
  seq.geometry = opt.canvas;
  const Timestamp total = 3 * opt.saccade_us;
  for (Timestamp t = 0; t <= total; t += opt.frame_us) {
    const auto leg = std::min<Timestamp>(t / opt.saccade_us, 2);
    const double u = static_cast<double>(t - leg * opt.saccade_us) / static_cast<double>(opt.saccade_us);
    const double dx = path[leg][0] + u * (path[leg + 1][0] - path[leg][0]);
    const double dy = path[leg][1] + u * (path[leg + 1][1] - path[leg][1]);
    std::vector<double> frame(opt.canvas.pixels());
    for (int y = 0; y < opt.canvas.height; ++y) {
      for (int x = 0; x < opt.canvas.width; ++x) {
        // Pixel centres mapped back into the source image.
        const double sx = (x + 0.5 - origin_x - dx) * scale - 0.5;
        const double sy = (y + 0.5 - origin_y - dy) * scale - 0.5;
        frame[static_cast<std::size_t>(y) * opt.canvas.width + x] = std::clamp(digit.sample(sx, sy), 0.0, 1.0);
      }
    }
    seq.frames.push_back(std::move(frame));
    seq.timestamps.push_back(t);
  }
  return seq;
}

inline EventStream saccade_events(const GrayImage& digit, const SaccadeOptions& opt, Rng& rng) {
  EventStream s = frames_to_events(saccade_frames(digit, opt, rng), opt.contrast_threshold);
  s.label = digit.label;
  return s;
}

struct CarSceneOptions {
  Geometry canvas{48, 40};
  Timestamp duration_us = 100000;
  Timestamp frame_us = 500;
  double contrast_threshold = 0.15;
};

/// Class 1: car silhouette drifting horizontally. Class 0: drifting blobs.
inline FrameSequence car_scene_frames(bool car, const CarSceneOptions& opt, Rng& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double w = opt.canvas.width, h = opt.canvas.height;
  const double speed = (0.5 + uni(rng)) * (uni(rng) < 0.5 ? -1.0 : 1.0) * 40.0;  // px per second
  const double cx0 = w * (0.35 + 0.3 * uni(rng)), cy = h * (0.45 + 0.2 * uni(rng));
  const double size = 0.8 + 0.4 * uni(rng);
  struct Blob {
    double x, y, r, level, vx, vy;
  };
  std::vector<Blob> blobs;
  if (!car) {
    const int n = 4 + static_cast<int>(uni(rng) * 5);
    for (int i = 0; i < n; ++i)
      blobs.push_back({uni(rng) * w, uni(rng) * h, 2.0 + 4.0 * uni(rng), 0.4 + 0.6 * uni(rng),
                       (uni(rng) - 0.5) * 60.0, (uni(rng) - 0.5) * 60.0});
  }
  auto inside_rect = [](double x, double y, double x0, double y0, double x1, double y1) {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  };

  FrameSequence seq;
  seq.geometry = opt.canvas;
  for (Timestamp t = 0; t <= opt.duration_us; t += opt.frame_us) {
    const double sec = static_cast<double>(t) * 1e-6;
    std::vector<double> frame(opt.canvas.pixels(), 0.0);
    for (int y = 0; y < opt.canvas.height; ++y) {
      for (int x = 0; x < opt.canvas.width; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        double v = 0.0;
        if (car) {
          const double cx = cx0 + speed * sec;
          const double lx = (px - cx) / size, ly = (py - cy) / size;
          if (inside_rect(lx, ly, -12, -2, 12, 4)) v = 0.8;           // body
          if (inside_rect(lx, ly, -6, -7, 6, -2)) v = 0.6;            // cabin
          for (double wx : {-7.0, 7.0})
            if ((lx - wx) * (lx - wx) + (ly - 5) * (ly - 5) <= 9.0) v = 1.0;  // wheels
        } else {
          for (const Blob& b : blobs) {
            const double bx = b.x + b.vx * sec, by = b.y + b.vy * sec;
            if ((px - bx) * (px - bx) + (py - by) * (py - by) <= b.r * b.r) v = std::max(v, b.level);
          }
        }
        frame[static_cast<std::size_t>(y) * opt.canvas.width + x] = v;
      }
    }
    seq.frames.push_back(std::move(frame));
    seq.timestamps.push_back(t);
  }
  return seq;
}

inline EventStream car_scene_events(bool car, const CarSceneOptions& opt, Rng& rng) {
  EventStream s = frames_to_events(car_scene_frames(car, opt, rng), opt.contrast_threshold);
  s.label = car ? 1 : 0;
  return s;
}

/// Writes <root>/<split>/<class>/<index>.bin.
inline void write_sample(const std::filesystem::path& root, const std::string& split,
                         const std::string& cls, std::size_t index, const EventStream& s) {
  const auto dir = root / split / cls;
  std::filesystem::create_directories(dir);
  std::ostringstream name;
  name << std::setw(5) << std::setfill('0') << index << ".bin";
  write_file_bytes(dir / name.str(), write_event_file(s));
}

/// Saccade-digit dataset in N-MNIST layout plus a manifest. The first
/// `train_per_class` digits of each class go to Train, the next
/// `test_per_class` to Test.
inline std::filesystem::path make_saccade_digit_dataset(const std::vector<GrayImage>& digits,
                                                        const std::filesystem::path& root,
                                                        std::size_t train_per_class,
                                                        std::size_t test_per_class, std::uint64_t seed,
                                                        const SaccadeOptions& opt = {}) {
  std::array<std::size_t, 10> seen{};
  Rng rng(seed);
  for (const auto& d : digits) {
    if (d.label < 0 || d.label > 9) throw InputError("digit label out of range");
    const std::size_t k = seen[static_cast<std::size_t>(d.label)]++;
    if (k >= train_per_class + test_per_class) continue;
    const EventStream s = saccade_events(d, opt, rng);
    const bool train = k < train_per_class;
    write_sample(root, train ? "Train" : "Test", std::to_string(d.label), train ? k : k - train_per_class, s);
  }
  const auto manifest = root / "dataset.manifest";
  std::ofstream m(manifest, std::ios::trunc);
  m << "[dataset]\nroot = .\nlayout = directories\nformat = events\nwidth = " << opt.canvas.width
    << "\nheight = " << opt.canvas.height << "\nclasses = 0,1,2,3,4,5,6,7,8,9\ntrain = Train\ntest = Test\n";
  return manifest;
}

inline std::filesystem::path make_car_scene_dataset(const std::filesystem::path& root,
                                                    std::size_t train_per_class,
                                                    std::size_t test_per_class, std::uint64_t seed,
                                                    const CarSceneOptions& opt = {}) {
  Rng rng(seed);
  for (int cls = 0; cls < 2; ++cls) {
    for (std::size_t k = 0; k < train_per_class + test_per_class; ++k) {
      const EventStream s = car_scene_events(cls == 1, opt, rng);
      const bool train = k < train_per_class;
      write_sample(root, train ? "Train" : "Test", cls == 1 ? "cars" : "background",
                   train ? k : k - train_per_class, s);
    }
  }
  const auto manifest = root / "dataset.manifest";
  std::ofstream m(manifest, std::ios::trunc);
  m << "[dataset]\nroot = .\nlayout = directories\nformat = events\nwidth = " << opt.canvas.width
    << "\nheight = " << opt.canvas.height << "\nclasses = background,cars\ntrain = Train\ntest = Test\n";
  return manifest;
}

}  // namespace dtnet::synthetic
