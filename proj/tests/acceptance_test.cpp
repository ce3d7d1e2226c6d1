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

// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exits non-zero if
// any criterion fails. End-to-end criteria drive the dtnet binary.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dtnet/autoencoder.hpp"
#include "dtnet/dataset.hpp"
#include "dtnet/event_io.hpp"
#include "dtnet/hierarchy.hpp"
#include "dtnet/mlp.hpp"
#include "dtnet/pipeline.hpp"
#include "dtnet/synthetic.hpp"
#include "dtnet/time_surface.hpp"

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::kFail, std::move(d)}; }
Outcome check(bool ok, std::string d) { return {ok ? Status::kPass : Status::kFail, std::move(d)}; }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr appended to `log`.
Run cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(DTNET_CLI) + " " + args + " 2>>" + log.string();
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::optional<double> field(const std::string& text, const std::string& key) {
  const std::regex re("(^|\n)" + key + "=([-+0-9.eE]+)");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  return std::stod(m[2].str());
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Trains and evaluates through the CLI; returns accuracy or a failure note.
struct EndToEnd {
  bool ok = false;
  double accuracy = 0.0;
  double seconds = 0.0;
  std::string note;
};

EndToEnd train_and_eval(const fs::path& config, const fs::path& manifest, const fs::path& bundle,
                        const std::string& extra, const fs::path& log) {
  EndToEnd e;
  const auto t0 = Clock::now();
  const auto train = cli("train --config " + q(config) + " --manifest " + q(manifest) + " --out " +
                             q(bundle) + " " + extra, log);
  if (train.code != 0) {
    e.note = "train exited " + std::to_string(train.code);
    return e;
  }
  const auto eval = cli("eval --bundle " + q(bundle) + " --manifest " + q(manifest) + " " + extra, log);
  e.seconds = seconds_since(t0);
  if (eval.code != 0) {
    e.note = "eval exited " + std::to_string(eval.code);
    return e;
  }
  const auto acc = field(eval.out, "accuracy");
  if (!acc) {
    e.note = "no accuracy line in eval output";
    return e;
  }
  e.ok = true;
  e.accuracy = *acc;
  return e;
}

std::vector<std::uint8_t> bytes_of(const fs::path& p) {
  return fs::exists(p) ? dtnet::read_file_bytes(p) : std::vector<std::uint8_t>{};
}

double relative_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

class Suite {
 public:
  explicit Suite(fs::path work) : work_(std::move(work)), log_(work_ / "cli.log") {
    fs::create_directories(work_);
  }

  Outcome full_scale() {
    const char* root = std::getenv("DTNET_NMNIST_ROOT");
    if (!root || !*root)
      return {Status::kSkip, "opt-in; set DTNET_NMNIST_ROOT to the N-MNIST directory (Train/, Test/)"};
    const fs::path manifest = work_ / "nmnist-full.manifest";
    dtnet::write_text_file(manifest, std::string("[dataset]\nroot = ") + root +
                                         "\nlayout = directories\nformat = events\nwidth = 34\nheight = 34\n"
                                         "classes = 0,1,2,3,4,5,6,7,8,9\ntrain = Train\ntest = Test\n");
    const auto r = train_and_eval(fs::path(DTNET_CONFIG_DIR) / "nmnist-paper.ini", manifest,
                                  work_ / "full", "", log_);
    if (!r.ok) return fail(r.note);
    return check(std::abs(r.accuracy - 0.938) <= 0.020,
                 "accuracy " + fmt(r.accuracy) + " vs 0.938 +- 0.020 in " + fmt(r.seconds, 0) + " s");
  }

  Outcome smoke() {
    const auto r = train_and_eval(fs::path(DTNET_CONFIG_DIR) / "nmnist-smoke.ini", digits_manifest(),
                                  work_ / "smoke", "--workers 1", log_);
    if (!r.ok) return fail(r.note);
    return check(r.accuracy >= 0.50 && r.seconds < 1800.0,
                 "accuracy " + fmt(r.accuracy) + " (floor 0.50), " + fmt(r.seconds, 1) +
                     " s (limit 1800) on synthetic saccade digits");
  }

  Outcome oracle() {
    const auto t0 = Clock::now();
    dtnet::Rng rng(20260101);
    const dtnet::Geometry g{64, 64};
    double worst = 0.0;
    std::size_t surfaces = 0;
    for (int s = 0; s < 50; ++s) {
      const int radius = 1 + s % 4;
      const double tau = 500.0 * (1 + s % 7);
      const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 5000)(rng);
      const dtnet::EventStream stream = random_stream(rng, g, n);
      dtnet::TimestampMap map(g);
      std::vector<double> got(dtnet::window_size(radius, 2));
      for (std::size_t i = 0; i < n; ++i) {
        const dtnet::Event& e = stream.events[i];
        map.update(e);
        dtnet::fill_surface(map, e.x, e.y, e.t, radius, tau, got);
        const auto want = dtnet::brute_force_time_surface(stream, i, radius, tau);
        for (std::size_t k = 0; k < got.size(); ++k) worst = std::max(worst, std::abs(got[k] - want.values[k]));
        ++surfaces;
      }
    }
    const double secs = seconds_since(t0);
    return check(worst <= 1e-12 && secs < 60.0, std::to_string(surfaces) + " surfaces, max |diff| " +
                                                     sci(worst) + ", " + fmt(secs, 2) + " s");
  }

  Outcome decay() {
    const double tau = 30000.0;
    const double d0 = dtnet::decay(1000, 1000, tau);
    const double d1 = dtnet::decay(1000 + 30000, 1000, tau);
    const double d5 = dtnet::decay(1000 + 150000, 1000, tau);
    const double err = std::max({std::abs(d0 - 1.0), std::abs(d1 - std::exp(-1.0)), std::abs(d5 - std::exp(-5.0))});
    return check(err <= 1e-12, "max error " + sci(err));
  }

  Outcome gradients() {
    const auto t0 = Clock::now();
    double ae_worst = 0.0, mlp_worst = 0.0;
    const double h = 1e-5;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      dtnet::Rng rng(seed + 500);
      std::uniform_real_distribution<double> u(-1.0, 1.0), u01(0.0, 1.0);

      dtnet::Autoencoder ae(50, 10, dtnet::Activation::kSigmoid, dtnet::Activation::kSigmoid, seed);
      for (auto& b : ae.encoder_bias()) b = u(rng);
      std::vector<double> s(50);
      for (auto& v : s) v = u01(rng);
      dtnet::Autoencoder::Gradients ga;
      ae.loss_and_gradients(s, ga);
      auto probe_ae = [&](std::span<double> p, const std::vector<double>& g) {
        for (std::size_t i = 0; i < p.size(); ++i) {
          const double keep = p[i];
          p[i] = keep + h;
          const double up = ae.reconstruction_error(s);
          p[i] = keep - h;
          const double down = ae.reconstruction_error(s);
          p[i] = keep;
          ae_worst = std::max(ae_worst, relative_error(g[i], (up - down) / (2 * h)));
        }
      };
      probe_ae(ae.encoder_weights(), ga.encoder_weights);
      probe_ae(ae.encoder_bias(), ga.encoder_bias);
      probe_ae(ae.decoder_weights(), ga.decoder_weights);
      probe_ae(ae.decoder_bias(), ga.decoder_bias);

      for (dtnet::Loss loss : {dtnet::Loss::kCrossEntropy, dtnet::Loss::kSquaredError}) {
        dtnet::Mlp m(30, 12, 10, seed, dtnet::Activation::kSigmoid, loss);
        std::vector<double> x(30);
        for (auto& v : x) v = u(rng);
        const std::size_t label = seed % 10;
        dtnet::Mlp::Gradients gm;
        m.loss_and_gradients(x, label, gm);
        auto probe_mlp = [&](std::span<double> p, const std::vector<double>& g) {
          for (std::size_t i = 0; i < p.size(); ++i) {
            const double keep = p[i];
            p[i] = keep + h;
            const double up = m.loss(x, label);
            p[i] = keep - h;
            const double down = m.loss(x, label);
            p[i] = keep;
            mlp_worst = std::max(mlp_worst, relative_error(g[i], (up - down) / (2 * h)));
          }
        };
        probe_mlp(m.hidden_weights(), gm.hidden_weights);
        probe_mlp(m.hidden_bias(), gm.hidden_bias);
        probe_mlp(m.output_weights(), gm.output_weights);
        probe_mlp(m.output_bias(), gm.output_bias);
      }
    }
    return check(ae_worst <= 1e-4 && mlp_worst <= 1e-4,
                 "20 seeds; worst relative error autoencoder " + sci(ae_worst) + ", mlp " +
                     sci(mlp_worst) + ", " + fmt(seconds_since(t0), 2) + " s");
  }

  Outcome parser() {
    dtnet::Rng rng(99);
    const dtnet::EventStream s = random_stream(rng, dtnet::kRecordGeometry, 100000);
    const auto back = dtnet::parse_event_file(dtnet::write_event_file(s));
    if (back.events != s.events) return fail("round trip of 1e5 events changed the stream");

    std::vector<fs::path> files;
    std::string source = "synthetic N-MNIST-format files";
    if (const char* root = std::getenv("DTNET_NMNIST_ROOT"); root && *root) {
      source = "N-MNIST files under " + std::string(root);
      for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file() && entry.path().extension() == ".bin") files.push_back(entry.path());
    } else {
      for (const auto& entry : fs::recursive_directory_iterator(digits_manifest().parent_path()))
        if (entry.is_regular_file() && entry.path().extension() == ".bin") files.push_back(entry.path());
    }
    if (files.empty()) return fail("no sample files found");
    std::size_t events = 0;
    for (const auto& f : files) {
      const auto stream = dtnet::parse_event_file(dtnet::read_file_bytes(f));
      for (std::size_t i = 0; i < stream.events.size(); ++i) {
        const auto& e = stream.events[i];
        if (e.x >= 34 || e.y >= 34) return fail(f.string() + ": event outside 34x34");
        if (i > 0 && e.t < stream.events[i - 1].t) return fail(f.string() + ": timestamps decrease");
      }
      events += stream.events.size();
    }
    return pass("1e5-event round trip exact; " + std::to_string(files.size()) + " " + source + " (" +
                std::to_string(events) + " events) inside 34x34 and time-ordered");
  }

  Outcome scaling() {
    dtnet::LayerConfig l1;
    l1.tau = 50000.0;
    const dtnet::ScalingFactors k{1.0, 5.0, 1.0};
    const auto l2 = dtnet::scale_config(l1, k);
    const auto l3 = dtnet::scale_config(l2, k);
    return check(l2.tau == 250000.0 && l3.tau == 1250000.0,
                 "tau 50000 -> " + fmt(l2.tau, 1) + " -> " + fmt(l3.tau, 1) + " us");
  }

  Outcome determinism() {
    const fs::path config = fs::path(DTNET_CONFIG_DIR) / "nmnist-smoke.ini";
    const std::string extra = "--subsample 10 --workers 1 --seed 5";
    const auto a = train_and_eval(config, digits_manifest(), work_ / "det_a", extra, log_);
    const auto b = train_and_eval(config, digits_manifest(), work_ / "det_b", extra, log_);
    if (!a.ok || !b.ok) return fail(a.ok ? b.note : a.note);
    for (const char* f : {"config.ini", "ae_layer1.bin", "mlp.bin", "training_report.txt"}) {
      const auto x = bytes_of(work_ / "det_a" / f), y = bytes_of(work_ / "det_b" / f);
      if (x.empty() || x != y) return fail(std::string(f) + " differs between runs");
    }
    return check(a.accuracy == b.accuracy, "accuracy " + fmt(a.accuracy, 6) + " twice; bundle files identical");
  }

  Outcome ncars() {
    const fs::path root = work_ / "cars";
    if (!fs::exists(root / "dataset.manifest")) dtnet::synthetic::make_car_scene_dataset(root, 50, 25, 11);
    const auto r = train_and_eval(fs::path(DTNET_CONFIG_DIR) / "ncars-paper.ini", root / "dataset.manifest",
                                  work_ / "ncars", "", log_);
    if (!r.ok) return fail(r.note);
    const fs::path eval = work_ / "ncars" / "eval";
    for (const char* f : {"confusion.txt", "confusion.csv", "rates.txt", "summary.txt"})
      if (!fs::exists(eval / f)) return fail(std::string("missing report ") + f);
    std::istringstream csv(dtnet::read_text_file(eval / "confusion.csv"));
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(csv, line)) rows.push_back(line);
    if (rows.size() != 3 || rows[0] != "true\\pred,background,cars") return fail("confusion.csv is not 2x2");
    std::uint64_t total = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      std::istringstream cells(rows[i]);
      std::string cell;
      std::getline(cells, cell, ',');
      while (std::getline(cells, cell, ',')) total += std::stoull(cell);
    }
    const auto summary = field(dtnet::read_text_file(eval / "summary.txt"), "accuracy");
    const bool ok = total == 50 && summary && *summary >= 0.0 && *summary <= 1.0 &&
                    std::abs(*summary - r.accuracy) < 1e-6;
    return check(ok, "2x2 report over " + std::to_string(total) + " test scenes, accuracy " +
                         fmt(r.accuracy) + " (no target), " + fmt(r.seconds, 1) + " s");
  }

  Outcome bench() {
    const auto r = cli("bench --config " + q(fs::path(DTNET_CONFIG_DIR) / "nmnist-smoke.ini") +
                           " --events 1000000",
                       log_);
    if (r.code != 0) return fail("bench exited " + std::to_string(r.code));
    const auto rate = field(r.out, "events_per_second");
    const auto p99 = field(r.out, "p99_latency_ns");
    if (!rate) return fail("no events_per_second line");
    return check(*rate > 1e5, fmt(*rate, 0) + " events/s at R=2 (floor 1e5), p99 latency " +
                                  fmt(p99.value_or(0.0), 0) + " ns");
  }

 private:
  static dtnet::EventStream random_stream(dtnet::Rng& rng, dtnet::Geometry g, std::size_t n) {
    std::uniform_int_distribution<int> xs(0, g.width - 1), ys(0, g.height - 1), ps(0, 1);
    std::uniform_int_distribution<dtnet::Timestamp> step(0, 40);
    dtnet::EventStream s{g, {}, std::nullopt};
    dtnet::Timestamp t = 0;
    for (std::size_t i = 0; i < n; ++i) {
      t += step(rng);
      s.events.push_back({static_cast<std::uint16_t>(xs(rng)), static_cast<std::uint16_t>(ys(rng)), t,
                          ps(rng) ? dtnet::Polarity::kOn : dtnet::Polarity::kOff});
    }
    return s;
  }

  // 100 training and 50 test saccade digits per class, generated once.
  fs::path digits_manifest() {
    const fs::path root = work_ / "digits";
    if (!fs::exists(root / "dataset.manifest")) {
      const auto digits = dtnet::synthetic::load_digits_csv(DTNET_DIGITS_CSV);
      dtnet::synthetic::make_saccade_digit_dataset(digits, root, 100, 50, 7);
    }
    return root / "dataset.manifest";
  }

  fs::path work_;
  fs::path log_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dtnet acceptance suite"};
  std::string work = (fs::temp_directory_path() / "dtnet-acceptance").string();
  std::vector<std::string> only;
  app.add_option("--work-dir", work, "Scratch directory for datasets, bundles and logs");
  app.add_option("--only", only, "Run only the named criteria");
  CLI11_PARSE(app, argc, argv);

  Suite suite(work);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"full-scale-nmnist", [&] { return suite.full_scale(); }},
      {"desk-scale-smoke", [&] { return suite.smoke(); }},
      {"oracle-equivalence", [&] { return suite.oracle(); }},
      {"analytic-decay", [&] { return suite.decay(); }},
      {"gradient-suites", [&] { return suite.gradients(); }},
      {"parser-fidelity", [&] { return suite.parser(); }},
      {"scaling-cascade", [&] { return suite.scaling(); }},
      {"determinism", [&] { return suite.determinism(); }},
      {"ncars-end-to-end", [&] { return suite.ncars(); }},
      {"throughput", [&] { return suite.bench(); }},
  };

  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    if (o.status == Status::kFail) ++failures;
    std::cout << tag << "  " << name << "  " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
