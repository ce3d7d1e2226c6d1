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

// Conventional frame input: turns a gray-level frame sequence into events by
// level-crossing sampling, and reads/writes frame directories (binary PGM
// images plus a `timestamps.txt` sidecar with one integer microsecond value
// per line, in frame order).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "dtnet/errors.hpp"
#include "dtnet/event.hpp"

namespace dtnet {

struct FrameSequence {
  Geometry geometry;
  std::vector<std::vector<double>> frames;  // row-major gray levels in [0, 1]
  std::vector<Timestamp> timestamps;
};

inline void validate(const FrameSequence& seq) {
  if (seq.frames.size() != seq.timestamps.size())
    throw InputError("frame count does not match timestamp count");
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    if (seq.frames[k].size() != seq.geometry.pixels())
      throw InputError("frame " + std::to_string(k) + " has " +
                       std::to_string(seq.frames[k].size()) + " pixels, expected " +
                       std::to_string(seq.geometry.pixels()));
    if (k > 0 && seq.timestamps[k] <= seq.timestamps[k - 1])
      throw InputError("frame timestamps must be strictly increasing (frame " +
                       std::to_string(k) + ")");
  }
}

/// Level-crossing emulation. Each pixel keeps a reference level, initialised
/// from the first frame; a change of n whole thresholds emits n events of the
/// change's sign at the frame's timestamp and moves the reference by n*theta.
inline EventStream frames_to_events(const FrameSequence& seq, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("contrast threshold must be positive");
  if (seq.frames.size() < 2) throw InputError("frame conversion needs at least two frames");
  validate(seq);
  // Absorbs rounding in |delta|/theta so exact multiples are not lost.
  constexpr double kCrossingSlack = 1e-9;

  EventStream out{seq.geometry, {}, std::nullopt};
  std::vector<double> reference = seq.frames.front();
  for (std::size_t k = 1; k < seq.frames.size(); ++k) {
    const auto& frame = seq.frames[k];
    for (int y = 0; y < seq.geometry.height; ++y) {
      for (int x = 0; x < seq.geometry.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * seq.geometry.width + x;
        const double delta = frame[i] - reference[i];
        const auto crossings =
            static_cast<long>(std::floor(std::abs(delta) / threshold + kCrossingSlack));
        if (crossings == 0) continue;
        const Polarity p = delta > 0 ? Polarity::kOn : Polarity::kOff;
        for (long n = 0; n < crossings; ++n)
          out.events.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y),
                                seq.timestamps[k], p});
        reference[i] += static_cast<double>(sign_of(p)) * static_cast<double>(crossings) * threshold;
      }
    }
  }
  return out;
}

// Binary PGM (P5), maxval <= 255.

namespace detail {
inline std::string next_pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}
}  // namespace detail

inline std::vector<double> read_pgm(const std::filesystem::path& path, Geometry& geometry) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  if (detail::next_pgm_token(in) != "P5") throw InputError(path.string() + ": not a binary PGM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(detail::next_pgm_token(in));
    h = std::stoi(detail::next_pgm_token(in));
    maxval = std::stoi(detail::next_pgm_token(in));
  } catch (const std::exception&) {
    throw InputError(path.string() + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw InputError(path.string() + ": unsupported PGM dimensions or depth");
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw InputError(path.string() + ": truncated PGM pixel data");
  geometry = {w, h};
  std::vector<double> levels(raw.size());
  std::transform(raw.begin(), raw.end(), levels.begin(),
                 [maxval](unsigned char v) { return static_cast<double>(v) / maxval; });
  return levels;
}

inline void write_pgm(const std::filesystem::path& path, Geometry geometry,
                      const std::vector<double>& levels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << "P5\n" << geometry.width << " " << geometry.height << "\n255\n";
  for (double v : levels)
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
}

inline constexpr const char* kTimestampSidecar = "timestamps.txt";

/// Loads `*.pgm` files in lexicographic name order with their sidecar times.
inline FrameSequence load_frame_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw InputError("cannot read frame directory " + dir.string());
  std::vector<fs::path> images;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") images.push_back(entry.path());
  std::sort(images.begin(), images.end());

  FrameSequence seq;
  std::ifstream sidecar(dir / kTimestampSidecar);
  if (!sidecar) throw InputError("cannot read " + (dir / kTimestampSidecar).string());
  std::string line;
  while (std::getline(sidecar, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      seq.timestamps.push_back(std::stoll(line));
    } catch (const std::exception&) {
      throw InputError((dir / kTimestampSidecar).string() + ": bad timestamp '" + line + "'");
    }
  }
  if (seq.timestamps.size() != images.size())
    throw InputError(dir.string() + ": " + std::to_string(images.size()) + " frames but " +
                     std::to_string(seq.timestamps.size()) + " timestamps");
  for (std::size_t k = 0; k < images.size(); ++k) {
    Geometry g;
    seq.frames.push_back(read_pgm(images[k], g));
    if (k == 0) seq.geometry = g;
    else if (g != seq.geometry)
      throw InputError(images[k].string() + ": frame shape differs from the first frame");
  }
  validate(seq);
  return seq;
}

inline void write_frame_directory(const std::filesystem::path& dir, const FrameSequence& seq) {
  validate(seq);
  std::filesystem::create_directories(dir);
  std::ofstream sidecar(dir / kTimestampSidecar, std::ios::trunc);
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    std::ostringstream name;
    name << "frame_" << std::setw(6) << std::setfill('0') << k << ".pgm";
    write_pgm(dir / name.str(), seq.geometry, seq.frames[k]);
    sidecar << seq.timestamps[k] << "\n";
  }
}

}  // namespace dtnet
