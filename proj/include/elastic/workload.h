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
#include <random>
#include <string>
#include <vector>

#include "elastic/core_model.h"

namespace elastic {

/// mt19937_64 with distribution code written out so streams are identical
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Inverse-CDF exponential sample with the given rate.
  double exponential(double rate);
  /// Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

struct RatePoint {
  double time = 0.0;
  double rate = 0.0;
};

struct WorkloadConfig {
  int keys = 10000;
  double skew = 0.5;
  double source_rate = 0.0;        // tuples/s; 0 = take it from the topology
  std::uint64_t payload_bytes = 128;
  double shuffles_per_minute = 0.0;  // omega
  double shuffle_start = 10.0;     // first shuffle, logical s
  std::uint64_t seed = 1;
  int source_executors = 8;        // spouts feeding the root operators
  std::vector<RatePoint> rate_trace;  // piecewise-constant override of source_rate
};

/// p_i proportional to i^-skew for i = 1..K.
std::vector<double> zipf_frequencies(int keys, double skew);

/// Fisher-Yates permutation of the frequency-to-key mapping.
std::vector<double> shuffle_frequencies(std::vector<double> freqs, Rng &rng);

/// Inverse-CDF key sampling over a frequency vector.
class KeySampler {
 public:
  explicit KeySampler(const std::vector<double> &freqs);
  Key sample(Rng &rng) const;

 private:
  std::vector<double> cdf_;
};

struct Arrival {
  double gap = 0.0;
  Key key = 0;
};

Arrival next_arrival(Rng &rng, double rate, const KeySampler &keys);

/// Poisson source with zipf keys and periodic frequency shuffles.
class WorkloadGenerator {
 public:
  explicit WorkloadGenerator(const WorkloadConfig &config, double default_rate = 0.0);

  Arrival next(double now);
  void shuffle();
  double rate_at(double t) const;
  /// Shuffle instants in (0, horizon]; empty when omega = 0.
  std::vector<double> shuffle_times(double horizon) const;
  const std::vector<double> &frequencies() const { return freqs_; }
  const WorkloadConfig &config() const { return config_; }

 private:
  WorkloadConfig config_;
  double base_rate_;
  Rng arrivals_;
  Rng shuffles_;
  std::vector<double> freqs_;
  KeySampler sampler_;
};

/// Reads "time_s,rate_tps" rows; a header line is skipped.
std::vector<RatePoint> read_rate_trace(const std::string &path);

/// Source -> one stateful "calculator" operator.
TopologySpec micro_benchmark_topology(int executors, int shards, double cpu_cost,
                                      double source_rate);

/// A "transactor" fanning out to 6 statistics and 5 event-processing operators.
TopologySpec exchange_topology(int executors, int shards, double source_rate);

}  // namespace elastic
