// Copyright 2026 The Elasticsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// elasticsim: runs a config-driven experiment and writes traces, a summary
// and optionally a policy comparison report.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "elastic/errors.h"
#include "elastic/experiment.h"

namespace {

std::vector<std::string> split(const std::string &text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Discrete-event simulator for static, resource-centric and executor-centric "
               "stream elasticity"};
  std::string config_path;
  std::string out_dir;
  std::string seeds;
  std::string policies;
  int jobs = 1;
  bool report = false;
  bool print_config = false;
  app.add_option("--config", config_path, "Experiment JSON document")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
  app.add_option("--seeds", seeds, "Comma-separated seeds (overrides seeds)");
  app.add_option("--policies", policies, "Comma-separated subset of static,rc,ec");
  app.add_option("--jobs", jobs, "Experiment points run in parallel")->check(CLI::PositiveNumber);
  app.add_flag("--report", report, "Write report.md comparing the policies");
  app.add_flag("--print-config", print_config, "Print the effective config and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    if (config_path.empty()) {
      if (report && !out_dir.empty()) {
        std::cout << elastic::compare_policies(out_dir);
        return 0;
      }
      std::cerr << "--config is required (or --report with --out to re-read a results dir)\n";
      return 2;
    }
    elastic::ExperimentConfig config = elastic::load_experiment(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (!seeds.empty()) {
      config.seeds.clear();
      for (const auto &s : split(seeds)) {
        try {
          config.seeds.push_back(std::stoull(s));
        } catch (const std::exception &) {
          throw elastic::Error(elastic::ErrorCode::kConfigError, "--seeds: bad seed '" + s + "'");
        }
      }
    }
    if (!policies.empty()) {
      config.policies.clear();
      for (const auto &p : split(policies)) {
        auto kind = elastic::parse_policy(p);
        if (!kind) {
          throw elastic::Error(elastic::ErrorCode::kConfigError, "--policies: unknown '" + p + "'");
        }
        config.policies.push_back(*kind);
      }
    }
    if (print_config) {
      std::cout << elastic::experiment_to_json(config).dump(2) << "\n";
      return 0;
    }
    auto results = elastic::run_experiment(config, jobs);
    for (const auto &r : results) {
      std::printf("%-6s %-28s throughput=%.0f tuples/s mean_latency=%.3f ms\n",
                  std::string(elastic::policy_name(r.point.policy)).c_str(),
                  elastic::trace_file_name(config, r.point).c_str(), r.summary.throughput,
                  r.summary.mean_latency * 1e3);
    }
    if (report) std::cout << "\n" << elastic::compare_policies(config.output_dir);
  } catch (const elastic::Error &e) {
    std::cerr << "elasticsim: " << e.what() << "\n";
    return e.code() == elastic::ErrorCode::kConfigError ? 2 : 1;
  }
  return 0;
}
