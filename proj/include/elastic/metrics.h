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
#include <vector>

#include "elastic/scheduler.h"
#include "elastic/workload.h"

namespace elastic {

inline constexpr std::size_t kLatencyReservoir = 4096;
inline constexpr std::uint64_t kMinTuplesForServiceRate = 10;

struct MetricEvent {
  enum class Kind {
    kArrival,      // value = bytes
    kProcessed,    // value = CPU seconds
    kOutput,       // value = bytes
    kCompletion,   // value = end-to-end latency, s
    kMigration,    // value = bytes
    kSync,         // value = messages
    kRemoteBytes,  // value = bytes
    kSourceEmit,
  } kind;
  int unit = -1;  // executor (or operator, for the resource-centric model)
  double value = 0.0;
};

struct WindowSummary {
  double window_end = 0.0;
  double throughput = 0.0;  // sink completions / s
  double mean_latency = 0.0;
  double p99_latency = 0.0;
  std::uint64_t migrated_bytes = 0;
  std::uint64_t sync_messages = 0;
  std::uint64_t remote_bytes = 0;
  std::uint64_t completions = 0;
};

/// Windowed counters for scheduler inputs and reported metrics.
class WindowAccumulator {
 public:
  WindowAccumulator(int units, double window, double alpha, std::uint64_t seed);

  void record(const MetricEvent &e);
  void resize(int units);

  /// lambda, mu, data rate per unit, EWMA-smoothed across windows. Units with
  /// too few processed tuples keep their previous mu (0 until first measured).
  MetricsSnapshot snapshot(const std::vector<int> &cores, const std::vector<double> &state_bytes);
  /// Summary of the window and reset of every counter.
  WindowSummary close(double window_end);

  double window() const { return window_; }

 private:
  struct Unit {
    std::uint64_t tuples_in = 0;
    std::uint64_t processed = 0;
    double bytes_in = 0.0;
    double bytes_out = 0.0;
    double busy = 0.0;
    // smoothed
    bool seen = false;
    double lambda = 0.0;
    double mu = 0.0;
    double data_rate = 0.0;
  };

  double window_;
  double alpha_;
  Rng rng_;
  std::vector<Unit> units_;
  std::uint64_t source_emits_ = 0;
  double source_rate_ = 0.0;
  bool source_seen_ = false;
  std::uint64_t completions_ = 0;
  double latency_sum_ = 0.0;
  std::vector<double> reservoir_;
  std::uint64_t migrated_ = 0;
  std::uint64_t sync_ = 0;
  std::uint64_t remote_ = 0;
};

}  // namespace elastic
