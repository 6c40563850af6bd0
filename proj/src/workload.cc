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

#include "elastic/workload.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "elastic/errors.h"

namespace elastic {

double Rng::exponential(double rate) { return -std::log1p(-uniform()) / rate; }

std::uint64_t Rng::below(std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return r % bound;
}

std::vector<double> zipf_frequencies(int keys, double skew) {
  if (keys < 1 || !(skew >= 0.0)) throw Error(ErrorCode::kConfigError, "zipf: keys >= 1, skew >= 0");
  std::vector<double> p(keys);
  double sum = 0.0;
  for (int i = 0; i < keys; ++i) {
    p[i] = std::pow(static_cast<double>(i + 1), -skew);
    sum += p[i];
  }
  for (double &v : p) v /= sum;
  return p;
}

std::vector<double> shuffle_frequencies(std::vector<double> freqs, Rng &rng) {
  for (std::size_t i = freqs.size(); i > 1; --i) {
    std::size_t j = rng.below(i);
    std::swap(freqs[i - 1], freqs[j]);
  }
  return freqs;
}

KeySampler::KeySampler(const std::vector<double> &freqs) : cdf_(freqs.size()) {
  double acc = 0.0;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    acc += freqs[i];
    cdf_[i] = acc;
  }
  for (double &c : cdf_) c /= acc;
}

Key KeySampler::sample(Rng &rng) const {
  double u = rng.uniform();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<Key>(it - cdf_.begin());
}

Arrival next_arrival(Rng &rng, double rate, const KeySampler &keys) {
  Arrival a;
  a.gap = rng.exponential(rate);
  a.key = keys.sample(rng);
  return a;
}

WorkloadGenerator::WorkloadGenerator(const WorkloadConfig &config, double default_rate)
    : config_(config),
      base_rate_(config.source_rate > 0.0 ? config.source_rate : default_rate),
      arrivals_(config.seed),
      shuffles_(config.seed ^ 0x5deece66dULL),
      freqs_(zipf_frequencies(config.keys, config.skew)),
      sampler_(freqs_) {}

Arrival WorkloadGenerator::next(double now) { return next_arrival(arrivals_, rate_at(now), sampler_); }

void WorkloadGenerator::shuffle() {
  freqs_ = shuffle_frequencies(std::move(freqs_), shuffles_);
  sampler_ = KeySampler(freqs_);
}

double WorkloadGenerator::rate_at(double t) const {
  if (config_.rate_trace.empty()) return base_rate_;
  auto it = std::upper_bound(config_.rate_trace.begin(), config_.rate_trace.end(), t,
                             [](double v, const RatePoint &p) { return v < p.time; });
  if (it == config_.rate_trace.begin()) return config_.rate_trace.front().rate;
  return std::prev(it)->rate;
}

std::vector<double> WorkloadGenerator::shuffle_times(double horizon) const {
  std::vector<double> out;
  if (!(config_.shuffles_per_minute > 0.0)) return out;
  const double period = 60.0 / config_.shuffles_per_minute;
  for (double t = config_.shuffle_start; t <= horizon; t += period) out.push_back(t);
  return out;
}

std::vector<RatePoint> read_rate_trace(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open rate trace " + path);
  std::vector<RatePoint> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    RatePoint p;
    if (!(row >> p.time >> p.rate)) {
      if (lineno == 1) continue;
      throw Error(ErrorCode::kConfigError, path + ":" + std::to_string(lineno) + ": bad row");
    }
    out.push_back(p);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RatePoint &a, const RatePoint &b) { return a.time < b.time; });
  return out;
}

TopologySpec micro_benchmark_topology(int executors, int shards, double cpu_cost,
                                      double source_rate) {
  TopologySpec spec;
  spec.source_rate = source_rate;
  spec.operators.push_back({"calculator", executors, shards, cpu_cost, 0.0, 128});
  return spec;
}

TopologySpec exchange_topology(int executors, int shards, double source_rate) {
  TopologySpec spec;
  spec.source_rate = source_rate;
  spec.operators.push_back({"transactor", executors, shards, 1.0e-3, 1.0, 160});
  for (int i = 0; i < 6; ++i) {
    std::string name = "statistics" + std::to_string(i);
    spec.operators.push_back({name, executors, shards, 0.2e-3, 0.0, 64});
    spec.edges.push_back({"transactor", name});
  }
  for (int i = 0; i < 5; ++i) {
    std::string name = "event" + std::to_string(i);
    spec.operators.push_back({name, executors, shards, 0.1e-3, 0.0, 64});
    spec.edges.push_back({"transactor", name});
  }
  return spec;
}

}  // namespace elastic
