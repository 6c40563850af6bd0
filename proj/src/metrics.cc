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

#include "elastic/metrics.h"

#include <algorithm>
#include <cmath>

namespace elastic {

WindowAccumulator::WindowAccumulator(int units, double window, double alpha, std::uint64_t seed)
    : window_(window), alpha_(alpha), rng_(seed), units_(units) {
  reservoir_.reserve(kLatencyReservoir);
}

void WindowAccumulator::resize(int units) { units_.resize(units); }

void WindowAccumulator::record(const MetricEvent &e) {
  switch (e.kind) {
    case MetricEvent::Kind::kArrival:
      units_[e.unit].tuples_in += 1;
      units_[e.unit].bytes_in += e.value;
      break;
    case MetricEvent::Kind::kProcessed:
      units_[e.unit].processed += 1;
      units_[e.unit].busy += e.value;
      break;
    case MetricEvent::Kind::kOutput:
      units_[e.unit].bytes_out += e.value;
      break;
    case MetricEvent::Kind::kCompletion: {
      ++completions_;
      latency_sum_ += e.value;
      if (reservoir_.size() < kLatencyReservoir) {
        reservoir_.push_back(e.value);
      } else {
        std::uint64_t slot = rng_.below(completions_);
        if (slot < kLatencyReservoir) reservoir_[slot] = e.value;
      }
      break;
    }
    case MetricEvent::Kind::kMigration:
      migrated_ += static_cast<std::uint64_t>(e.value);
      break;
    case MetricEvent::Kind::kSync:
      sync_ += static_cast<std::uint64_t>(e.value);
      break;
    case MetricEvent::Kind::kRemoteBytes:
      remote_ += static_cast<std::uint64_t>(e.value);
      break;
    case MetricEvent::Kind::kSourceEmit:
      ++source_emits_;
      break;
  }
}

MetricsSnapshot WindowAccumulator::snapshot(const std::vector<int> &cores,
                                            const std::vector<double> &state_bytes) {
  auto smooth = [this](bool seen, double old, double fresh) {
    return seen ? alpha_ * fresh + (1.0 - alpha_) * old : fresh;
  };
  MetricsSnapshot snap;
  double emitted = static_cast<double>(source_emits_) / window_;
  source_rate_ = smooth(source_seen_, source_rate_, emitted);
  source_seen_ = true;
  snap.source_rate = source_rate_;
  for (std::size_t j = 0; j < units_.size(); ++j) {
    Unit &u = units_[j];
    double lambda = static_cast<double>(u.tuples_in) / window_;
    double rate = (u.bytes_in + u.bytes_out) / window_;
    u.lambda = smooth(u.seen, u.lambda, lambda);
    u.data_rate = smooth(u.seen, u.data_rate, rate);
    if (u.processed >= kMinTuplesForServiceRate && u.busy > 0.0) {
      double mu = static_cast<double>(u.processed) / u.busy;
      u.mu = u.mu > 0.0 ? smooth(true, u.mu, mu) : mu;
    }
    u.seen = true;
    ExecutorMetrics m;
    m.arrival_rate = u.lambda;
    m.service_rate = u.mu;
    m.data_rate = u.data_rate;
    m.state_bytes = j < state_bytes.size() ? state_bytes[j] : 0.0;
    m.cores = j < cores.size() ? cores[j] : 1;
    snap.executors.push_back(m);
  }
  return snap;
}

WindowSummary WindowAccumulator::close(double window_end) {
  WindowSummary s;
  s.window_end = window_end;
  s.completions = completions_;
  s.throughput = static_cast<double>(completions_) / window_;
  s.mean_latency = completions_ > 0 ? latency_sum_ / static_cast<double>(completions_) : 0.0;
  if (!reservoir_.empty()) {
    std::vector<double> sorted = reservoir_;
    std::sort(sorted.begin(), sorted.end());
    std::size_t idx = static_cast<std::size_t>(std::ceil(0.99 * sorted.size())) - 1;
    s.p99_latency = sorted[std::min(idx, sorted.size() - 1)];
  }
  s.migrated_bytes = migrated_;
  s.sync_messages = sync_;
  s.remote_bytes = remote_;

  for (Unit &u : units_) {
    u.tuples_in = 0;
    u.processed = 0;
    u.bytes_in = u.bytes_out = u.busy = 0.0;
  }
  source_emits_ = 0;
  completions_ = 0;
  latency_sum_ = 0.0;
  reservoir_.clear();
  migrated_ = sync_ = remote_ = 0;
  return s;
}

}  // namespace elastic
