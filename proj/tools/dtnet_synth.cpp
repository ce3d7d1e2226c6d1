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

// Generates synthetic event datasets in the 40-bit record format: saccade
// digits (N-MNIST layout) and car scenes (two-class, N-CARS-like).

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dtnet/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic event dataset generator"};
  app.require_subcommand(1);
  std::string digits_csv, out;
  std::size_t train = 100, test = 50;
  std::uint64_t seed = 7;

  auto* digits = app.add_subcommand("digits", "Saccade-swept handwritten digits, 34x34");
  digits->add_option("--digits", digits_csv, "CSV of 8x8 digit images")->required();
  auto* cars = app.add_subcommand("cars", "Car versus background scenes, 48x40");
  for (auto* cmd : {digits, cars}) {
    cmd->add_option("--out", out, "Dataset root")->required();
    cmd->add_option("--train", train, "Training samples per class");
    cmd->add_option("--test", test, "Test samples per class");
    cmd->add_option("--seed", seed, "Generator seed");
  }
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::path manifest;
    if (*digits)
      manifest = dtnet::synthetic::make_saccade_digit_dataset(dtnet::synthetic::load_digits_csv(digits_csv),
                                                              out, train, test, seed);
    else
      manifest = dtnet::synthetic::make_car_scene_dataset(out, train, test, seed);
    std::cout << "manifest=" << manifest.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
