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
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "elastic/simulator.h"
#include "json.hpp"

namespace elastic {

/// One swept parameter. Recognized names: omega, skew, source_rate, keys,
/// executors, shards, payload_bytes, tuple_bytes, state_bytes, upstream,
/// rc_sync_rtt, theta.
struct SweepAxis {
  std::string parameter;
  std::vector<double> values;
};

struct ExperimentConfig {
  std::string name = "experiment";
  SimConfig base;
  std::vector<PolicyKind> policies;
  std::vector<std::uint64_t> seeds;
  double duration = 60.0;  // logical s
  double warmup = 10.0;    // excluded from summary statistics
  std::optional<SweepAxis> sweep;
  std::string output_dir = "results";
};

/// Desk-scale micro-benchmark: 8 nodes x 8 cores, y = 8, z = 256, 10,000
/// keys, skew 0.5, 1 ms mean cost, 128-byte payload, saturating source.
ExperimentConfig default_experiment();

/// Unknown or mistyped fields raise ConfigError naming the field path.
ExperimentConfig experiment_from_json(const nlohmann::json &doc);
/// Parse errors report line and column.
ExperimentConfig load_experiment(const std::filesystem::path &path);
nlohmann::json experiment_to_json(const ExperimentConfig &config);

struct ExperimentPoint {
  PolicyKind policy = PolicyKind::kExecutorCentric;
  std::optional<double> sweep_value;
  std::uint64_t seed = 1;
};

/// Cartesian product in a fixed order: sweep value, then policy, then seed.
std::vector<ExperimentPoint> expand_points(const ExperimentConfig &config);

/// The point's full simulation config.
SimConfig point_config(const ExperimentConfig &config, const ExperimentPoint &point);

struct SummaryRow {
  PolicyKind policy = PolicyKind::kExecutorCentric;
  std::string sweep_parameter;
  std::optional<double> sweep_value;
  std::uint64_t seed = 1;
  double throughput = 0.0;    // completions/s after warmup
  double mean_latency = 0.0;  // s, completion weighted
  double p99_latency = 0.0;   // s, mean of per-window p99
  std::uint64_t migrated_bytes = 0;
  std::uint64_t sync_messages = 0;
  std::uint64_t remote_bytes = 0;
};

struct PointResult {
  ExperimentPoint point;
  SummaryRow summary;
  std::string trace_csv;
  std::string decisions;
  Trace trace;
};

PointResult run_point(const ExperimentConfig &config, const ExperimentPoint &point);
SummaryRow summarize(const Trace &trace, double warmup);

/// trace_<policy>_<sweep>_<seed>.csv
std::string trace_file_name(const ExperimentConfig &config, const ExperimentPoint &point);

/// Runs every point (`jobs` > 1 uses the parallel runner), writes one trace
/// CSV and decision log per point plus summary.csv, and returns the results
/// in point order.
std::vector<PointResult> run_experiment(const ExperimentConfig &config, int jobs = 1);

void write_summary_csv(const std::vector<SummaryRow> &rows, std::ostream &out);
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path &path);

/// Completions per second over a sliding window, sampled every trace bucket.
/// Entry i covers ((i + 1) * bucket - window, (i + 1) * bucket].
std::vector<double> instantaneous_throughput(const Trace &trace, double window = 1.0);

struct TransientEpisode {
  double shuffle_time = 0.0;
  double steady_throughput = 0.0;  // mean over the baseline before the shuffle
  double below_seconds = 0.0;      // time under threshold * steady before the next shuffle
};

/// One episode per shuffle that has `baseline` seconds of history and at
/// least one `window` of run left after it.
std::vector<TransientEpisode> transient_episodes(const Trace &trace, double threshold = 0.9,
                                                 double baseline = 10.0, double window = 1.0);

/// Reads results_dir/summary.csv, writes results_dir/report.md and returns
/// its text. Throws MissingSeries with fewer than two policies.
std::string compare_policies(const std::filesystem::path &results_dir);

}  // namespace elastic
