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

// Dataset manifests. A manifest is a sectioned key-value file:
//
//   [dataset]
//   root = nmnist              ; relative to the manifest's directory
//   layout = directories       ; or label_file
//   format = events            ; or frames (one frame directory per sample)
//   width = 34
//   height = 34
//   classes = 0,1,2,3,4,5,6,7,8,9   ; optional for the directories layout
//   train = Train              ; sub-directory, or label file for label_file
//   test = Test
//   split = train              ; default split
//   subsample = 0              ; first K samples per class, 0 = all
//   contrast_threshold = 0.1   ; frames format only
//   ordering_slack_us = 0
//
// The directories layout reads <root>/<split dir>/<class>/<sample>, samples in
// lexicographic order. A label file lists one "<relative path> <class>" pair
// per line, relative to root.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dtnet/config.hpp"
#include "dtnet/errors.hpp"
#include "dtnet/event.hpp"
#include "dtnet/event_io.hpp"
#include "dtnet/frames.hpp"
#include "dtnet/parallel.hpp"

namespace dtnet {

enum class Split { kTrain, kTest };

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw ConfigError("unknown split '" + s + "' (expected train or test)");
}

inline const char* to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

struct DatasetManifest {
  std::filesystem::path root;
  enum class Layout { kDirectories, kLabelFile } layout = Layout::kDirectories;
  enum class Format { kEvents, kFrames } format = Format::kEvents;
  Geometry geometry;
  std::vector<std::string> classes;
  std::string train_source = "Train";
  std::string test_source = "Test";
  Split split = Split::kTrain;
  std::size_t subsample = 0;
  double contrast_threshold = 0.1;
  Timestamp ordering_slack = 0;

  static DatasetManifest from_config(const KeyValueConfig& cfg) {
    DatasetManifest m;
    m.root = cfg.path("dataset.root");
    const auto layout = cfg.get<std::string>("dataset.layout", "directories");
    if (layout == "directories") m.layout = Layout::kDirectories;
    else if (layout == "label_file") m.layout = Layout::kLabelFile;
    else throw ConfigError(cfg.origin() + ": key 'dataset.layout' has unknown value '" + layout + "'");
    const auto format = cfg.get<std::string>("dataset.format", "events");
    if (format == "events") m.format = Format::kEvents;
    else if (format == "frames") m.format = Format::kFrames;
    else throw ConfigError(cfg.origin() + ": key 'dataset.format' has unknown value '" + format + "'");
    m.geometry = {cfg.get<int>("dataset.width"), cfg.get<int>("dataset.height")};
    if (m.geometry.width <= 0 || m.geometry.height <= 0)
      throw ConfigError(cfg.origin() + ": keys 'dataset.width'/'dataset.height' must be positive");
    m.classes = cfg.get_list("dataset.classes");
    m.train_source = cfg.get<std::string>("dataset.train", "Train");
    m.test_source = cfg.get<std::string>("dataset.test", "Test");
    m.split = parse_split(cfg.get<std::string>("dataset.split", "train"));
    const long k = cfg.get<long>("dataset.subsample", 0);
    if (k < 0) throw ConfigError(cfg.origin() + ": key 'dataset.subsample' must be >= 0");
    m.subsample = static_cast<std::size_t>(k);
    m.contrast_threshold = cfg.get<double>("dataset.contrast_threshold", 0.1);
    if (!(m.contrast_threshold > 0.0))
      throw ConfigError(cfg.origin() + ": key 'dataset.contrast_threshold' must be positive");
    m.ordering_slack = cfg.get<Timestamp>("dataset.ordering_slack_us", 0);
    if (m.ordering_slack < 0)
      throw ConfigError(cfg.origin() + ": key 'dataset.ordering_slack_us' must be >= 0");
    if (m.layout == Layout::kLabelFile && m.classes.empty())
      throw ConfigError(cfg.origin() + ": label_file layout requires 'dataset.classes'");
    return m;
  }

  static DatasetManifest load(const std::filesystem::path& path) {
    return from_config(KeyValueConfig::load(path));
  }

  DatasetManifest with_split(Split s) const {
    DatasetManifest m = *this;
    m.split = s;
    return m;
  }
};

struct SampleRef {
  std::filesystem::path path;
  int label = 0;
};

struct Dataset {
  std::vector<std::string> class_names;
  Geometry geometry;
  std::vector<EventStream> streams;  // label = index into class_names
  std::vector<std::filesystem::path> paths;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return streams.size(); }
};

/// Resolves the manifest into an ordered sample list without reading samples.
/// Order: class by class in class order, samples by path within a class.
inline std::vector<SampleRef> enumerate_samples(const DatasetManifest& m,
                                                std::vector<std::string>& class_names,
                                                std::vector<std::string>& warnings) {
  namespace fs = std::filesystem;
  const std::string& source = m.split == Split::kTrain ? m.train_source : m.test_source;
  class_names = m.classes;
  std::vector<std::vector<fs::path>> per_class;

  if (m.layout == DatasetManifest::Layout::kDirectories) {
    const fs::path split_dir = m.root / source;
    if (!fs::is_directory(split_dir))
      throw InputError("dataset directory " + split_dir.string() + " is not readable");
    if (class_names.empty()) {
      for (const auto& entry : fs::directory_iterator(split_dir))
        if (entry.is_directory()) class_names.push_back(entry.path().filename().string());
      // Numeric names sort numerically so "10" follows "9".
      std::sort(class_names.begin(), class_names.end(), [](const auto& a, const auto& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
      });
    }
    for (const auto& name : class_names) {
      std::vector<fs::path> files;
      const fs::path dir = split_dir / name;
      if (fs::is_directory(dir)) {
        for (const auto& entry : fs::directory_iterator(dir)) {
          const bool wanted = m.format == DatasetManifest::Format::kEvents
                                  ? entry.is_regular_file() && entry.path().extension() == ".bin"
                                  : entry.is_directory();
          if (wanted) files.push_back(entry.path());
        }
      } else {
        warnings.push_back("class directory " + dir.string() + " is missing");
      }
      std::sort(files.begin(), files.end());
      per_class.push_back(std::move(files));
    }
  } else {
    const fs::path list = m.root / source;
    std::ifstream in(list);
    if (!in) throw InputError("cannot read label file " + list.string());
    per_class.resize(class_names.size());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream ls(line);
      std::string rel, label;
      if (!(ls >> rel)) continue;
      if (!(ls >> label))
        throw InputError(list.string() + ":" + std::to_string(line_no) + ": missing label");
      const auto it = std::find(class_names.begin(), class_names.end(), label);
      if (it == class_names.end())
        throw InputError(list.string() + ":" + std::to_string(line_no) + ": unknown label '" +
                         label + "'");
      per_class[static_cast<std::size_t>(it - class_names.begin())].push_back(m.root / rel);
    }
  }

  std::vector<SampleRef> refs;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    auto& files = per_class[c];
    if (m.subsample > 0 && files.size() > m.subsample) files.resize(m.subsample);
    if (m.subsample > 0 && files.size() < m.subsample)
      warnings.push_back("class '" + class_names[c] + "' has only " +
                         std::to_string(files.size()) + " samples, fewer than subsample " +
                         std::to_string(m.subsample));
    for (auto& f : files) refs.push_back({std::move(f), static_cast<int>(c)});
  }
  if (refs.empty())
    warnings.push_back(std::string("dataset split '") + to_string(m.split) + "' is empty");
  return refs;
}

inline EventStream load_sample(const DatasetManifest& m, const std::filesystem::path& path) {
  if (m.format == DatasetManifest::Format::kEvents)
    return load_event_file(path, m.geometry, m.ordering_slack);
  FrameSequence frames = load_frame_directory(path);
  if (frames.geometry != m.geometry)
    throw InputError(path.string() + ": frame geometry does not match the manifest");
  return frames_to_events(frames, m.contrast_threshold);
}

/// Reads every sample of the manifest's split. Parsing runs on `workers`
/// threads; the result order is independent of the worker count.
inline Dataset load_dataset(const DatasetManifest& m, int workers = 1) {
  Dataset ds;
  ds.geometry = m.geometry;
  const auto refs = enumerate_samples(m, ds.class_names, ds.warnings);
  ds.streams.resize(refs.size());
  parallel_for(refs.size(), workers, [&](std::size_t i) {
    ds.streams[i] = load_sample(m, refs[i].path);
    ds.streams[i].label = refs[i].label;
  });
  for (const auto& r : refs) ds.paths.push_back(r.path);
  return ds;
}

}  // namespace dtnet
