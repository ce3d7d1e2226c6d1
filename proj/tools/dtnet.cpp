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

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dtnet/errors.hpp"
#include "dtnet/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

struct Overrides {
  std::optional<std::size_t> subsample;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::string manifest;

  void apply(dtnet::PipelineConfig& pc) const {
    if (subsample) pc.subsample_train = pc.subsample_test = *subsample;
    if (workers) {
      if (*workers < 1) throw dtnet::ConfigError("--workers must be >= 1");
      pc.workers = *workers;
    }
    if (seed) pc.seed = *seed;
    if (!manifest.empty()) pc.manifest = manifest;
  }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--subsample", o.subsample, "Use the first K samples per class (both splits)");
  cmd->add_option("--workers", o.workers, "Worker threads for per-sample work");
  cmd->add_option("--seed", o.seed, "Run seed");
  cmd->add_option("--manifest", o.manifest, "Dataset manifest replacing the configured one");
}

int run_train(const std::string& config, const std::string& out, const Overrides& o) {
  auto pc = dtnet::PipelineConfig::load(config);
  o.apply(pc);
  const fs::path dir = out.empty() ? pc.out : fs::path(out);
  const auto bundle = dtnet::train_pipeline(pc, std::cerr);
  dtnet::save_bundle(bundle, dir);
  std::cout << "bundle=" << dir.string() << "\n";
  for (const auto& r : bundle.layer_reports)
    std::cout << "layer" << r.layer << "_converged=" << (r.report.converged ? "true" : "false") << "\n";
  return 0;
}

int run_eval(const std::string& bundle_dir, const std::string& config, const std::string& out,
             const std::string& split, const Overrides& o) {
  const auto bundle = dtnet::load_bundle(bundle_dir);
  auto pc = config.empty() ? bundle.config : dtnet::PipelineConfig::load(config);
  o.apply(pc);
  const auto result = dtnet::evaluate_bundle(bundle, pc, dtnet::parse_split(split));
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  const fs::path dir = out.empty() ? fs::path(bundle_dir) / "eval" : fs::path(out);
  dtnet::write_eval_reports(result, dir);
  std::cout << result.confusion.to_text(result.class_names);
  std::cout << "accuracy=" << std::fixed << std::setprecision(6) << result.accuracy() << "\n";
  return 0;
}

int run_bench(const std::string& config, const std::string& bundle_dir, std::size_t events,
              std::optional<int> radius, const Overrides& o) {
  auto pc = dtnet::PipelineConfig::load(config);
  o.apply(pc);
  dtnet::LayerConfig layer = pc.layers.front();
  if (radius) layer.radius = *radius;
  layer.validate();
  dtnet::Geometry geometry{34, 34};
  dtnet::Autoencoder ae;
  if (!bundle_dir.empty()) {
    const auto bundle = dtnet::load_bundle(bundle_dir);
    if (radius && *radius != bundle.config.layers.front().radius)
      throw dtnet::CompatibilityError("--radius differs from the bundle's layer-1 radius");
    layer = bundle.config.layers.front();
    geometry = bundle.geometry;
    ae = bundle.encoders.front();
  } else {
    ae = dtnet::Autoencoder(dtnet::window_size(layer.radius, 2), static_cast<std::size_t>(layer.code_dim),
                            pc.autoencoder.encoder, pc.autoencoder.decoder,
                            dtnet::derive_seed(pc.seed, "bench-ae"));
  }
  const auto stream = dtnet::synthetic_stream(geometry, events, dtnet::derive_seed(pc.seed, "bench-stream"));
  std::cout << dtnet::bench_text(dtnet::bench_layer(stream, layer, ae));
  return 0;
}

int run_inspect(const std::string& bundle_dir, const std::string& out) {
  const auto bundle = dtnet::load_bundle(bundle_dir);
  std::cout << dtnet::inspect_text(bundle);
  if (!out.empty()) {
    fs::create_directories(out);
    dtnet::write_text_file(fs::path(out) / "features.csv", dtnet::feature_grids_csv(bundle));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep temporal network: event-stream feature learning and classification"};
  app.require_subcommand(1);

  std::string config, bundle, out, split = "test";
  std::size_t events = 1000000;
  std::optional<int> radius;
  Overrides o;

  auto* train = app.add_subcommand("train", "Train all layers and the classifier, write a bundle");
  train->add_option("--config", config, "Pipeline configuration")->required();
  train->add_option("--out", out, "Bundle directory (default: run.out from the config)");
  add_overrides(train, o);

  auto* eval = app.add_subcommand("eval", "Evaluate a bundle and write confusion reports");
  eval->add_option("--bundle", bundle, "Bundle directory")->required();
  eval->add_option("--config", config, "Configuration for the evaluation data (default: bundle's)");
  eval->add_option("--out", out, "Report directory (default: <bundle>/eval)");
  eval->add_option("--split", split, "train or test")->check(CLI::IsMember({"train", "test"}));
  add_overrides(eval, o);

  auto* bench = app.add_subcommand("bench", "Measure layer-1 surface + encoding throughput");
  bench->add_option("--config", config, "Pipeline configuration")->required();
  bench->add_option("--bundle", bundle, "Use the bundle's trained layer-1 encoder");
  bench->add_option("--events", events, "Synthetic stream length");
  bench->add_option("--radius", radius, "Override the layer-1 radius");
  add_overrides(bench, o);

  auto* inspect = app.add_subcommand("inspect", "Describe a bundle and render learned features");
  inspect->add_option("--bundle", bundle, "Bundle directory")->required();
  inspect->add_option("--out", out, "Also write features.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return run_train(config, out, o);
    if (*eval) return run_eval(bundle, config, out, split, o);
    if (*bench) return run_bench(config, bundle, events, radius, o);
    if (*inspect) return run_inspect(bundle, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return dtnet::exit_code(e);
  }
  return 0;
}
