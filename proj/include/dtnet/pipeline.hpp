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

// End-to-end orchestration behind the command-line tool: configuration,
// layer-wise training, model bundles, evaluation, benchmarking and
// inspection.
//
// Pipeline configuration schema (sectioned key-value, see config.hpp):
//
//   [dataset]     manifest, subsample_train, subsample_test, refractory_us,
//                 border (zero_pad | crop)
//   [layer1]      radius, tau_us, code_dim, strategy (raw_pool | time_delay |
//                 threshold), pool_mode (max | mean), pool_window, alpha_us,
//                 theta_z
//   [layer2] ...  further explicit layers, or instead:
//   [hierarchy]   layers, k_radius, k_tau, k_code   (layers 2.. derived from
//                 layer1 by scaling)
//   [autoencoder] threshold, learning_rate, max_surfaces, window,
//                 encoder_activation, decoder_activation
//   [classifier]  hidden, learning_rate, epochs, loss, hidden_activation,
//                 standardize
//   [run]         seed, workers, out
//
// A bundle is a directory holding config.ini (the effective configuration
// plus a [bundle] section), ae_layer<N>.bin, mlp.bin and training_report.txt.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dtnet/autoencoder.hpp"
#include "dtnet/classifier.hpp"
#include "dtnet/config.hpp"
#include "dtnet/dataset.hpp"
#include "dtnet/errors.hpp"
#include "dtnet/event_io.hpp"
#include "dtnet/hierarchy.hpp"
#include "dtnet/mlp.hpp"
#include "dtnet/parallel.hpp"
#include "dtnet/rng.hpp"
#include "dtnet/time_surface.hpp"

namespace dtnet {

struct AutoencoderSettings {
  TrainOptions train;
  Activation encoder = Activation::kSigmoid;
  Activation decoder = Activation::kSigmoid;
};

struct ClassifierSettings {
  std::size_t hidden = 200;
  double learning_rate = 0.01;
  int epochs = 50;
  Loss loss = Loss::kCrossEntropy;
  Activation hidden_activation = Activation::kSigmoid;
  bool standardize = false;
};

struct PipelineConfig {
  KeyValueConfig source;
  std::filesystem::path manifest;
  std::size_t subsample_train = 0;
  std::size_t subsample_test = 0;
  Timestamp refractory = 0;
  BorderPolicy border = BorderPolicy::kZeroPad;
  std::vector<LayerConfig> layers;
  AutoencoderSettings autoencoder;
  ClassifierSettings classifier;
  std::uint64_t seed = 1;
  int workers = 1;
  std::filesystem::path out = "dtnet-out";

  static PipelineConfig from_config(const KeyValueConfig& cfg);

  static PipelineConfig load(const std::filesystem::path& path) {
    return from_config(KeyValueConfig::load(path));
  }

  /// The configuration as written into bundles, with every resolved value.
  KeyValueConfig effective() const;
};

namespace detail {

template <typename T>
T positive(const KeyValueConfig& cfg, const std::string& key, T fallback) {
  const T v = cfg.get<T>(key, fallback);
  if (!(v > T{0})) throw ConfigError(cfg.origin() + ": key '" + key + "' must be > 0");
  return v;
}

template <typename T>
T non_negative(const KeyValueConfig& cfg, const std::string& key, T fallback) {
  const T v = cfg.get<T>(key, fallback);
  if (!(v >= T{0})) throw ConfigError(cfg.origin() + ": key '" + key + "' must be >= 0");
  return v;
}

template <typename Fn>
auto keyed(const KeyValueConfig& cfg, const std::string& key, Fn&& parse) {
  try {
    return parse();
  } catch (const ConfigError& e) {
    throw ConfigError(cfg.origin() + ": key '" + key + "': " + e.what());
  }
}

inline LayerConfig read_layer(const KeyValueConfig& cfg, const std::string& section) {
  LayerConfig l;
  l.radius = cfg.get<int>(section + ".radius", l.radius);
  if (l.radius < 1) throw ConfigError(cfg.origin() + ": key '" + section + ".radius' must be >= 1");
  l.tau = positive<double>(cfg, section + ".tau_us", l.tau);
  l.code_dim = cfg.get<int>(section + ".code_dim", l.code_dim);
  if (l.code_dim < 1)
    throw ConfigError(cfg.origin() + ": key '" + section + ".code_dim' must be >= 1");
  l.strategy = keyed(cfg, section + ".strategy", [&] {
    return parse_strategy(cfg.get<std::string>(section + ".strategy", "raw_pool"));
  });
  l.pool_mode = keyed(cfg, section + ".pool_mode", [&] {
    return parse_pool_mode(cfg.get<std::string>(section + ".pool_mode", "max"));
  });
  l.pool_window = positive<int>(cfg, section + ".pool_window", l.pool_window);
  l.alpha = non_negative<double>(cfg, section + ".alpha_us", l.alpha);
  l.theta_z = cfg.get<double>(section + ".theta_z", l.theta_z);
  return l;
}

inline void write_layer(KeyValueConfig& cfg, const std::string& section, const LayerConfig& l) {
  cfg.set(section + ".radius", l.radius);
  cfg.set(section + ".tau_us", l.tau);
  cfg.set(section + ".code_dim", l.code_dim);
  cfg.set(section + ".strategy", to_string(l.strategy));
  cfg.set(section + ".pool_mode", to_string(l.pool_mode));
  cfg.set(section + ".pool_window", l.pool_window);
  cfg.set(section + ".alpha_us", l.alpha);
  cfg.set(section + ".theta_z", l.theta_z);
}

}  // namespace detail

inline PipelineConfig PipelineConfig::from_config(const KeyValueConfig& cfg) {
  using namespace detail;
  PipelineConfig pc;
  pc.source = cfg;
  if (cfg.has("dataset.manifest")) pc.manifest = cfg.path("dataset.manifest");
  pc.subsample_train = non_negative<std::size_t>(cfg, "dataset.subsample_train", 0);
  pc.subsample_test = non_negative<std::size_t>(cfg, "dataset.subsample_test", 0);
  pc.refractory = non_negative<Timestamp>(cfg, "dataset.refractory_us", 0);
  const auto border = cfg.get<std::string>("dataset.border", "zero_pad");
  if (border == "zero_pad") pc.border = BorderPolicy::kZeroPad;
  else if (border == "crop") pc.border = BorderPolicy::kCrop;
  else throw ConfigError(cfg.origin() + ": key 'dataset.border' has unknown value '" + border + "'");

  if (!cfg.has_section("layer1"))
    throw ConfigError(cfg.origin() + ": no layers configured (section 'layer1' is missing)");
  pc.layers.push_back(read_layer(cfg, "layer1"));
  if (cfg.has_section("hierarchy")) {
    const int depth = cfg.get<int>("hierarchy.layers", 1);
    if (depth < 1) throw ConfigError(cfg.origin() + ": key 'hierarchy.layers' must be >= 1");
    ScalingFactors k{positive<double>(cfg, "hierarchy.k_radius", 1.0),
                     positive<double>(cfg, "hierarchy.k_tau", 1.0),
                     positive<double>(cfg, "hierarchy.k_code", 1.0)};
    while (static_cast<int>(pc.layers.size()) < depth)
      pc.layers.push_back(scale_config(pc.layers.back(), k));
  } else {
    for (int l = 2; cfg.has_section("layer" + std::to_string(l)); ++l)
      pc.layers.push_back(read_layer(cfg, "layer" + std::to_string(l)));
  }

  auto& ae = pc.autoencoder;
  ae.train.threshold = non_negative<double>(cfg, "autoencoder.threshold", 0.01);
  ae.train.learning_rate = positive<double>(cfg, "autoencoder.learning_rate", 0.05);
  ae.train.max_surfaces = positive<std::size_t>(cfg, "autoencoder.max_surfaces", 200000);
  ae.train.window = positive<std::size_t>(cfg, "autoencoder.window", 1000);
  ae.encoder = keyed(cfg, "autoencoder.encoder_activation", [&] {
    return parse_activation(cfg.get<std::string>("autoencoder.encoder_activation", "sigmoid"));
  });
  ae.decoder = keyed(cfg, "autoencoder.decoder_activation", [&] {
    return parse_activation(cfg.get<std::string>("autoencoder.decoder_activation", "sigmoid"));
  });

  auto& mc = pc.classifier;
  mc.hidden = positive<std::size_t>(cfg, "classifier.hidden", 200);
  mc.learning_rate = positive<double>(cfg, "classifier.learning_rate", 0.01);
  mc.epochs = non_negative<int>(cfg, "classifier.epochs", 50);
  mc.loss = keyed(cfg, "classifier.loss", [&] {
    return parse_loss(cfg.get<std::string>("classifier.loss", "cross_entropy"));
  });
  mc.hidden_activation = keyed(cfg, "classifier.hidden_activation", [&] {
    return parse_activation(cfg.get<std::string>("classifier.hidden_activation", "sigmoid"));
  });
  mc.standardize = cfg.get<bool>("classifier.standardize", false);

  pc.seed = cfg.get<std::uint64_t>("run.seed", 1);
  pc.workers = positive<int>(cfg, "run.workers", 1);
  if (cfg.has("run.out")) pc.out = cfg.path("run.out");
  return pc;
}

inline KeyValueConfig PipelineConfig::effective() const {
  KeyValueConfig cfg;
  cfg.set("dataset.manifest", std::filesystem::absolute(manifest).lexically_normal().string());
  cfg.set("dataset.subsample_train", subsample_train);
  cfg.set("dataset.subsample_test", subsample_test);
  cfg.set("dataset.refractory_us", refractory);
  cfg.set("dataset.border", std::string(border == BorderPolicy::kZeroPad ? "zero_pad" : "crop"));
  for (std::size_t l = 0; l < layers.size(); ++l)
    detail::write_layer(cfg, "layer" + std::to_string(l + 1), layers[l]);
  cfg.set("autoencoder.threshold", autoencoder.train.threshold);
  cfg.set("autoencoder.learning_rate", autoencoder.train.learning_rate);
  cfg.set("autoencoder.max_surfaces", autoencoder.train.max_surfaces);
  cfg.set("autoencoder.window", autoencoder.train.window);
  cfg.set("autoencoder.encoder_activation", to_string(autoencoder.encoder));
  cfg.set("autoencoder.decoder_activation", to_string(autoencoder.decoder));
  cfg.set("classifier.hidden", classifier.hidden);
  cfg.set("classifier.learning_rate", classifier.learning_rate);
  cfg.set("classifier.epochs", classifier.epochs);
  cfg.set("classifier.loss", to_string(classifier.loss));
  cfg.set("classifier.hidden_activation", to_string(classifier.hidden_activation));
  cfg.set("classifier.standardize", std::string(classifier.standardize ? "true" : "false"));
  cfg.set("run.seed", seed);
  cfg.set("run.workers", workers);
  return cfg;
}

struct LayerReport {
  std::size_t layer = 0;
  std::size_t input_dim = 0;
  TrainingReport report;
};

struct Bundle {
  PipelineConfig config;
  Geometry geometry;
  std::vector<std::string> class_names;
  std::vector<Autoencoder> encoders;
  Mlp classifier;
  std::vector<LayerReport> layer_reports;
  MlpTrainingReport classifier_report;

  NetworkSpec network() const { return {geometry, config.layers, config.border}; }
};

inline Dataset load_split(const PipelineConfig& pc, Split split) {
  if (pc.manifest.empty()) throw ConfigError("no dataset manifest configured (key 'dataset.manifest')");
  DatasetManifest m = DatasetManifest::load(pc.manifest).with_split(split);
  m.subsample = split == Split::kTrain ? pc.subsample_train : pc.subsample_test;
  Dataset ds = load_dataset(m, pc.workers);
  if (pc.refractory > 0)
    for (auto& s : ds.streams) s = apply_refractory(s, pc.refractory);
  return ds;
}

/// Final-volume feature vectors for every stream, computed on `workers`
/// threads; identical for any worker count.
inline std::vector<std::vector<double>> extract_dataset_features(const NetworkSpec& spec,
                                                                 std::span<const Autoencoder> encoders,
                                                                 const std::vector<EventStream>& streams,
                                                                 int workers) {
  std::vector<std::vector<double>> out(streams.size());
  parallel_for(streams.size(), workers, [&](std::size_t i) {
    out[i] = vectorize(extract_features(spec, encoders, streams[i]));
  });
  return out;
}

/// Trains the autoencoder of layer `layer` on inputs produced by the already
/// trained lower layers. Streams are visited in a seeded random order.
inline TrainingReport train_layer(const NetworkSpec& spec, std::vector<Autoencoder>& encoders,
                                  std::size_t layer, const std::vector<EventStream>& streams,
                                  const AutoencoderSettings& settings, std::uint64_t seed) {
  const std::size_t dim = spec.input_dim(layer);
  const auto code = static_cast<std::size_t>(spec.layers[layer].code_dim);
  const std::string tag = "layer" + std::to_string(layer + 1);
  Autoencoder ae(dim, code, settings.encoder, settings.decoder, derive_seed(seed, "ae-init-" + tag));

  std::vector<std::size_t> order(streams.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "ae-order-" + tag));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> buffer;
  std::size_t cursor = 0, next_stream = 0;
  auto source = [&](std::vector<double>& out) {
    while (cursor >= buffer.size()) {
      if (next_stream >= order.size()) return false;
      buffer.clear();
      cursor = 0;
      NetworkRunner runner(spec, std::span<const Autoencoder>(encoders.data(), layer), layer,
                           [&](std::span<const double> in) { buffer.insert(buffer.end(), in.begin(), in.end()); });
      runner.push(streams[order[next_stream++]]);
      runner.finish();
    }
    out.assign(buffer.begin() + static_cast<std::ptrdiff_t>(cursor),
               buffer.begin() + static_cast<std::ptrdiff_t>(cursor + dim));
    cursor += dim;
    return true;
  };
  TrainingReport report = train_until_threshold(ae, source, settings.train);
  if (encoders.size() <= layer) encoders.resize(layer + 1);
  encoders[layer] = std::move(ae);
  return report;
}

inline std::vector<std::size_t> labels_of(const Dataset& ds) {
  std::vector<std::size_t> labels;
  labels.reserve(ds.size());
  for (const auto& s : ds.streams) labels.push_back(static_cast<std::size_t>(s.label.value_or(0)));
  return labels;
}

/// Progress and warnings go to `log`.
inline Bundle train_pipeline(const PipelineConfig& pc, std::ostream& log) {
  Bundle b;
  b.config = pc;
  Dataset train = load_split(pc, Split::kTrain);
  for (const auto& w : train.warnings) log << "warning: " << w << "\n";
  if (train.size() == 0) throw InputError("training split of " + pc.manifest.string() + " is empty");
  if (train.class_names.size() < 2) throw InputError("training data needs at least two classes");
  b.geometry = train.geometry;
  b.class_names = train.class_names;
  const NetworkSpec spec = b.network();
  spec.validate();

  for (std::size_t l = 0; l < pc.layers.size(); ++l) {
    log << "training autoencoder of layer " << l + 1 << " (" << spec.input_dim(l) << " -> "
        << pc.layers[l].code_dim << ")\n";
    TrainingReport r = train_layer(spec, b.encoders, l, train.streams, pc.autoencoder, pc.seed);
    log << "  surfaces " << r.surfaces_seen << ", mean error " << r.final_error
        << (r.converged ? ", converged" : ", NOT converged") << "\n";
    if (!r.converged)
      log << "warning: layer " << l + 1 << " autoencoder stopped before reaching threshold "
          << pc.autoencoder.train.threshold << "\n";
    b.layer_reports.push_back({l + 1, spec.input_dim(l), std::move(r)});
  }

  log << "extracting features from " << train.size() << " training samples\n";
  const auto xs = extract_dataset_features(spec, b.encoders, train.streams, pc.workers);
  const auto labels = labels_of(train);
  b.classifier = Mlp(xs.front().size(), pc.classifier.hidden, train.class_names.size(),
                     derive_seed(pc.seed, "mlp-init"), pc.classifier.hidden_activation,
                     pc.classifier.loss);
  if (pc.classifier.standardize) b.classifier.set_standardizer(Standardizer::fit(xs));
  log << "training classifier (" << xs.front().size() << " -> " << pc.classifier.hidden << " -> "
      << train.class_names.size() << ")\n";
  b.classifier_report = b.classifier.train(
      xs, labels, {pc.classifier.epochs, pc.classifier.learning_rate, derive_seed(pc.seed, "mlp-shuffle")});
  if (!b.classifier_report.epoch_accuracy.empty())
    log << "  final training accuracy " << b.classifier_report.epoch_accuracy.back() << "\n";
  return b;
}

namespace detail {
inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}
}  // namespace detail

inline std::string training_report_text(const Bundle& b) {
  std::ostringstream os;
  for (const auto& lr : b.layer_reports) {
    os << "[layer" << lr.layer << "]\n";
    os << "input_dim = " << lr.input_dim << "\n";
    os << "surfaces_seen = " << lr.report.surfaces_seen << "\n";
    os << "final_error = " << detail::format_double(lr.report.final_error) << "\n";
    os << "converged = " << (lr.report.converged ? "true" : "false") << "\n";
    os << "final_learning_rate = " << detail::format_double(lr.report.final_learning_rate) << "\n";
    os << "trajectory =";
    for (std::size_t i = 0; i < lr.report.trajectory.size(); ++i)
      os << (i ? "," : " ") << detail::format_double(lr.report.trajectory[i]);
    os << "\n\n";
  }
  os << "[classifier]\n";
  os << "epoch_loss =";
  for (std::size_t i = 0; i < b.classifier_report.epoch_loss.size(); ++i)
    os << (i ? "," : " ") << detail::format_double(b.classifier_report.epoch_loss[i]);
  os << "\nepoch_accuracy =";
  for (std::size_t i = 0; i < b.classifier_report.epoch_accuracy.size(); ++i)
    os << (i ? "," : " ") << detail::format_double(b.classifier_report.epoch_accuracy[i]);
  os << "\nfinal_learning_rate = " << detail::format_double(b.classifier_report.final_learning_rate)
     << "\n";
  return os.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void save_bundle(const Bundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  KeyValueConfig cfg = b.config.effective();
  cfg.set("bundle.width", b.geometry.width);
  cfg.set("bundle.height", b.geometry.height);
  std::string classes;
  for (std::size_t i = 0; i < b.class_names.size(); ++i) classes += (i ? "," : "") + b.class_names[i];
  cfg.set("bundle.classes", classes);
  cfg.set("bundle.layers", b.encoders.size());
  write_text_file(dir / "config.ini", cfg.to_string());
  for (std::size_t l = 0; l < b.encoders.size(); ++l)
    write_file_bytes(dir / ("ae_layer" + std::to_string(l + 1) + ".bin"), b.encoders[l].serialize());
  write_file_bytes(dir / "mlp.bin", b.classifier.serialize());
  write_text_file(dir / "training_report.txt", training_report_text(b));
}

/// Loads a bundle; training reports are restored only as far as the
/// convergence flags and final errors in training_report.txt.
inline Bundle load_bundle(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("bundle " + dir.string() + " not found");
  Bundle b;
  KeyValueConfig cfg = KeyValueConfig::load(dir / "config.ini");
  b.config = PipelineConfig::from_config(cfg);
  b.geometry = {cfg.get<int>("bundle.width"), cfg.get<int>("bundle.height")};
  b.class_names = cfg.get_list("bundle.classes");
  const auto layers = cfg.get<std::size_t>("bundle.layers");
  if (layers != b.config.layers.size())
    throw CompatibilityError("bundle lists " + std::to_string(layers) + " encoders for " +
                             std::to_string(b.config.layers.size()) + " layers");
  for (std::size_t l = 0; l < layers; ++l) {
    const auto path = dir / ("ae_layer" + std::to_string(l + 1) + ".bin");
    const auto bytes = read_file_bytes(path);
    try {
      b.encoders.push_back(Autoencoder::deserialize(bytes));
    } catch (const CorruptionError& e) {
      throw CorruptionError(path.string() + ": " + e.message(), e.offset());
    }
  }
  {
    const auto path = dir / "mlp.bin";
    const auto bytes = read_file_bytes(path);
    try {
      b.classifier = Mlp::deserialize(bytes);
    } catch (const CorruptionError& e) {
      throw CorruptionError(path.string() + ": " + e.message(), e.offset());
    }
  }
  const NetworkSpec spec = b.network();
  for (std::size_t l = 0; l < layers; ++l) {
    if (b.encoders[l].input_dim() != spec.input_dim(l) ||
        b.encoders[l].code_dim() != static_cast<std::size_t>(spec.layers[l].code_dim))
      throw CompatibilityError("encoder of layer " + std::to_string(l + 1) +
                               " does not match the bundle configuration");
  }
  if (b.classifier.input_dim() != b.geometry.pixels() * static_cast<std::size_t>(spec.layers.back().code_dim) ||
      b.classifier.classes() != b.class_names.size())
    throw CompatibilityError("classifier does not match the bundle configuration");

  const auto report_path = dir / "training_report.txt";
  if (std::filesystem::exists(report_path)) {
    const auto rep = KeyValueConfig::load(report_path);
    for (std::size_t l = 0; l < layers; ++l) {
      const std::string s = "layer" + std::to_string(l + 1);
      LayerReport lr{l + 1, spec.input_dim(l), {}};
      lr.report.surfaces_seen = rep.get<std::size_t>(s + ".surfaces_seen", 0);
      lr.report.final_error = rep.get<double>(s + ".final_error", 0.0);
      lr.report.converged = rep.get<bool>(s + ".converged", false);
      b.layer_reports.push_back(lr);
    }
  }
  return b;
}

struct EvalResult {
  ConfusionMatrix confusion{2};
  std::vector<std::string> class_names;
  std::vector<std::string> warnings;

  double accuracy() const { return confusion.overall_rate(); }
};

/// Evaluates a bundle on a split of `pc`'s manifest.
inline EvalResult evaluate_bundle(const Bundle& b, const PipelineConfig& pc, Split split) {
  Dataset ds = load_split(pc, split);
  if (ds.geometry != b.geometry)
    throw CompatibilityError("dataset geometry " + std::to_string(ds.geometry.width) + "x" +
                             std::to_string(ds.geometry.height) + " does not match the bundle's " +
                             std::to_string(b.geometry.width) + "x" + std::to_string(b.geometry.height));
  if (ds.class_names != b.class_names)
    throw CompatibilityError("dataset classes do not match the bundle's classes");
  EvalResult r{ConfusionMatrix(b.class_names.size()), b.class_names, ds.warnings};
  const auto xs = extract_dataset_features(b.network(), b.encoders, ds.streams, pc.workers);
  r.confusion = evaluate(b.classifier, xs, labels_of(ds), pc.workers);
  return r;
}

inline std::string rates_text(const EvalResult& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  os << "overall " << r.accuracy() << "\n";
  for (std::size_t c = 0; c < r.class_names.size(); ++c)
    os << "class " << r.class_names[c] << " " << r.confusion.class_rate(c) << " ("
       << r.confusion.at(c, c) << "/" << r.confusion.row_total(c) << ")\n";
  return os.str();
}

inline void write_eval_reports(const EvalResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "confusion.txt", r.confusion.to_text(r.class_names));
  write_text_file(dir / "confusion.csv", r.confusion.to_csv(r.class_names));
  write_text_file(dir / "rates.txt", rates_text(r));
  std::ostringstream summary;
  summary << "accuracy=" << std::setprecision(6) << std::fixed << r.accuracy() << "\n";
  write_text_file(dir / "summary.txt", summary.str());
}

// Benchmark ------------------------------------------------------------------

struct BenchReport {
  std::size_t events = 0;
  int radius = 0;
  double seconds = 0.0;
  double events_per_second = 0.0;
  double mean_latency_ns = 0.0;
  double p99_latency_ns = 0.0;
};

/// Uniformly random pixels and polarities at one event per microsecond.
inline EventStream synthetic_stream(Geometry g, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> xs(0, g.width - 1), ys(0, g.height - 1), ps(0, 1);
  EventStream s{g, {}, std::nullopt};
  s.events.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    s.events.push_back({static_cast<std::uint16_t>(xs(rng)), static_cast<std::uint16_t>(ys(rng)),
                        static_cast<Timestamp>(i), ps(rng) ? Polarity::kOn : Polarity::kOff});
  return s;
}

/// Times surface construction + encoding per event (the map update is
/// included). Latencies are wall-clock per event.
inline BenchReport bench_layer(const EventStream& stream, const LayerConfig& cfg, const Autoencoder& ae) {
  BenchReport r;
  r.events = stream.events.size();
  r.radius = cfg.radius;
  if (stream.events.empty()) return r;
  TimestampMap map(stream.geometry, 2);
  std::vector<double> surface(window_size(cfg.radius, 2)), code(ae.code_dim());
  std::vector<double> latencies(stream.events.size());
  double checksum = 0.0;
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const auto t0 = clock::now();
    const Event& e = stream.events[i];
    map.update(e);
    fill_surface(map, e.x, e.y, e.t, cfg.radius, cfg.tau, surface);
    ae.encode_into(surface, code);
    checksum += code[0];
    latencies[i] = std::chrono::duration<double, std::nano>(clock::now() - t0).count();
  }
  r.seconds = std::chrono::duration<double>(clock::now() - start).count();
  r.events_per_second = r.seconds > 0 ? static_cast<double>(r.events) / r.seconds : 0.0;
  r.mean_latency_ns = std::accumulate(latencies.begin(), latencies.end(), 0.0) /
                      static_cast<double>(latencies.size());
  const auto k = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(latencies.size()))) - 1;
  std::nth_element(latencies.begin(), latencies.begin() + static_cast<std::ptrdiff_t>(k), latencies.end());
  r.p99_latency_ns = latencies[k];
  if (!std::isfinite(checksum)) throw TrainingError("non-finite code during benchmark");
  return r;
}

inline std::string bench_text(const BenchReport& r) {
  std::ostringstream os;
  os << "events=" << r.events << "\n"
     << "radius=" << r.radius << "\n"
     << "seconds=" << r.seconds << "\n"
     << "events_per_second=" << std::fixed << std::setprecision(1) << r.events_per_second << "\n"
     << "mean_latency_ns=" << r.mean_latency_ns << "\n"
     << "p99_latency_ns=" << r.p99_latency_ns << "\n";
  return os.str();
}

// Inspection -----------------------------------------------------------------

namespace detail {
inline char shade(double v, double lo, double hi) {
  static constexpr const char* kRamp = " .:-=+*#%@";
  if (!(hi > lo)) return kRamp[0];
  const double u = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  return kRamp[static_cast<int>(std::lround(u * 9.0))];
}
}  // namespace detail

/// Decoder column k of an encoder, i.e. the input pattern feature k writes
/// back, as planes of a side x side grid.
struct FeatureGrid {
  std::size_t layer = 0;
  std::size_t feature = 0;
  int side = 0;
  int planes = 0;
  std::vector<double> values;  // window layout: (row, col, plane)
};

inline std::vector<FeatureGrid> feature_grids(const Bundle& b) {
  std::vector<FeatureGrid> out;
  const NetworkSpec spec = b.network();
  for (std::size_t l = 0; l < b.encoders.size(); ++l) {
    const Autoencoder& ae = b.encoders[l];
    int side = window_side(spec.layers[l].radius);
    int planes = 2;
    if (l > 0) {
      const LayerConfig& prev = spec.layers[l - 1];
      planes = prev.code_dim;
      if (prev.strategy == Strategy::kRawPool) side = pooled_side(side, prev.pool_window);
    }
    for (std::size_t k = 0; k < ae.code_dim(); ++k) {
      FeatureGrid g{l + 1, k, side, planes, std::vector<double>(ae.input_dim())};
      for (std::size_t j = 0; j < ae.input_dim(); ++j) g.values[j] = ae.decoder_weights()[j * ae.code_dim() + k];
      out.push_back(std::move(g));
    }
  }
  return out;
}

inline std::string inspect_text(const Bundle& b) {
  std::ostringstream os;
  os << "geometry " << b.geometry.width << "x" << b.geometry.height << "\n";
  os << "classes " << b.class_names.size() << "\n";
  for (std::size_t l = 0; l < b.encoders.size(); ++l) {
    const Autoencoder& ae = b.encoders[l];
    const LayerConfig& cfg = b.config.layers[l];
    os << "layer " << l + 1 << ": radius " << cfg.radius << ", tau " << cfg.tau << " us, strategy "
       << to_string(cfg.strategy) << ", autoencoder " << ae.input_dim() << " -> " << ae.code_dim()
       << " (" << to_string(ae.encoder_activation()) << "/" << to_string(ae.decoder_activation()) << ")";
    if (l < b.layer_reports.size())
      os << ", converged " << (b.layer_reports[l].report.converged ? "yes" : "no") << ", error "
         << b.layer_reports[l].report.final_error;
    os << "\n";
  }
  os << "classifier " << b.classifier.input_dim() << " -> " << b.classifier.hidden_dim() << " -> "
     << b.classifier.classes() << " (" << to_string(b.classifier.hidden_activation()) << ", "
     << to_string(b.classifier.loss_kind()) << ")\n";
  for (const auto& g : feature_grids(b)) {
    const auto [lo, hi] = std::minmax_element(g.values.begin(), g.values.end());
    os << "\nlayer " << g.layer << " feature " << g.feature << " (" << g.side << "x" << g.side << "x"
       << g.planes << ", range " << *lo << " .. " << *hi << ")\n";
    for (int p = 0; p < g.planes; ++p) {
      os << "  plane " << p << "\n";
      for (int r = 0; r < g.side; ++r) {
        os << "  |";
        for (int c = 0; c < g.side; ++c)
          os << detail::shade(g.values[static_cast<std::size_t>((r * g.side + c) * g.planes + p)], *lo, *hi);
        os << "|\n";
      }
    }
  }
  return os.str();
}

inline std::string feature_grids_csv(const Bundle& b) {
  std::ostringstream os;
  os << "layer,feature,plane,row,col,value\n";
  os << std::setprecision(17);
  for (const auto& g : feature_grids(b))
    for (int r = 0; r < g.side; ++r)
      for (int c = 0; c < g.side; ++c)
        for (int p = 0; p < g.planes; ++p)
          os << g.layer << "," << g.feature << "," << p << "," << r << "," << c << ","
             << g.values[static_cast<std::size_t>((r * g.side + c) * g.planes + p)] << "\n";
  return os.str();
}

}  // namespace dtnet
