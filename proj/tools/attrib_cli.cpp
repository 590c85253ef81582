/*
 * Copyright 2026 The attrib Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// attrib: command-line front end for the attribution benchmark pipeline.
//
// Exit codes: 0 success, 2 configuration error, 3 stage failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "attrib/error.hpp"
#include "attrib/pipeline.hpp"
#include "attrib/run_config.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string estimators;
  std::string variants;
  std::optional<std::size_t> jobs;
  std::vector<std::string> overrides;
  bool quiet = false;
};

attrib::RunConfig resolve_config(const Options& opt) {
  attrib::RunConfig config;
  if (!opt.config_path.empty()) config = attrib::load_run_config(opt.config_path);
  if (opt.seed) config.seed = *opt.seed;
  if (!opt.out.empty()) config.out = opt.out;
  if (!opt.estimators.empty()) config.set("estimators.list", opt.estimators);
  if (!opt.variants.empty()) config.set("variants", opt.variants);
  if (opt.jobs) config.jobs = *opt.jobs;
  for (const std::string& item : opt.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw attrib::ConfigError("--set expects key=value, got '" + item + "'");
    }
    config.set(item.substr(0, eq), item.substr(eq + 1));
  }
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train a classifier on synthetic scans, attribute its predictions and score "
               "the attribution methods."};
  app.set_version_flag("--version", attrib::tool_version());
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config_path, "Config file with 'section.key = value' lines")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", opt.seed, "Master seed (run.seed)");
  app.add_option("--out", opt.out, "Run directory (run.out)");
  app.add_option("--estimators", opt.estimators,
                 "Comma list: backprop,deconvolution,intgrad,intgrad_bw,expected_grad,"
                 "smoothgrad,smoothgrad_sq,random");
  app.add_option("--variants", opt.variants, "Comma list of original,absolute");
  app.add_option("--jobs", opt.jobs, "Worker threads for per-image work")->check(CLI::PositiveNumber);
  app.add_option("--set", opt.overrides, "Override any config key: key=value (repeatable)");
  app.add_flag("-q,--quiet", opt.quiet, "Suppress progress messages");

  std::vector<attrib::Stage> stages;
  bool print_config = false;
  std::string metric;

  app.add_subcommand("gen-data", "Generate the synthetic dataset")->callback([&] {
    stages = {attrib::Stage::kGenData};
  });
  app.add_subcommand("train", "Train the classifier")->callback([&] {
    stages = {attrib::Stage::kTrain};
  });
  app.add_subcommand("attribute", "Compute heatmaps for every estimator and variant")
      ->callback([&] { stages = {attrib::Stage::kAttribute}; });
  auto* eval = app.add_subcommand("eval", "Evaluate heatmaps with one metric");
  eval->add_option("metric", metric, "fidelity, roc or dsc")
      ->required()
      ->check(CLI::IsMember({"fidelity", "roc", "dsc"}));
  eval->callback([&] {
    if (metric == "fidelity") stages = {attrib::Stage::kEvalFidelity};
    if (metric == "roc") stages = {attrib::Stage::kEvalRoc};
    if (metric == "dsc") stages = {attrib::Stage::kEvalDsc};
  });
  app.add_subcommand("report", "Write summary tables and plots")->callback([&] {
    stages = {attrib::Stage::kReport};
  });
  app.add_subcommand("run", "Run every stage")->callback([&] { stages = attrib::all_stages(); });
  app.add_subcommand("print-config", "Print the resolved configuration")->callback([&] {
    print_config = true;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  attrib::RunConfig config;
  try {
    config = resolve_config(opt);
  } catch (const attrib::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (print_config) {
    std::cout << config.dump();
    return 0;
  }

  attrib::LogFn log;
  if (!opt.quiet) log = [](const std::string& m) { std::cerr << "[attrib] " << m << "\n"; };
  try {
    attrib::Pipeline pipeline(config, log);
    pipeline.execute(stages);
    if (!opt.quiet) {
      std::cerr << "[attrib] manifest: " << pipeline.layout().run_manifest().string() << "\n";
    }
  } catch (const attrib::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const attrib::StageError& e) {
    std::cerr << "stage '" << e.stage() << "' failed: " << e.what() << "\n";
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return 0;
}
