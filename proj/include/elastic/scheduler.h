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

#include <optional>
#include <vector>

#include "elastic/core_model.h"
#include "elastic/elastic_executor.h"

namespace elastic {

inline constexpr double kDefaultPhiBase = 512.0 * 1024.0;  // bytes/s per core

struct ExecutorMetrics {
  double arrival_rate = 0.0;   // lambda_j, tuples/s
  double service_rate = 0.0;   // mu_j, tuples/s per core; 0 = not measured yet
  double state_bytes = 0.0;    // s_j
  double data_rate = 0.0;      // input + output bytes/s
  int cores = 1;               // current k_j
};

struct MetricsSnapshot {
  double source_rate = 0.0;  // lambda_0
  std::vector<ExecutorMetrics> executors;
};

using AllocationVector = std::vector<int>;

/// x(i, j) = cores of node i held by executor j; local_node(j) = I(j).
class AssignmentMatrix {
 public:
  AssignmentMatrix() = default;
  AssignmentMatrix(int nodes, int executors, std::vector<NodeId> local_nodes);

  int nodes() const { return nodes_; }
  int executors() const { return executors_; }
  int &at(int node, int executor) { return cells_[node * executors_ + executor]; }
  int at(int node, int executor) const { return cells_[node * executors_ + executor]; }
  int column_sum(int executor) const;
  int row_sum(int node) const;
  NodeId local_node(int executor) const { return local_[executor]; }
  const std::vector<NodeId> &local_nodes() const { return local_; }

  bool operator==(const AssignmentMatrix &) const = default;

 private:
  int nodes_ = 0;
  int executors_ = 0;
  std::vector<int> cells_;
  std::vector<NodeId> local_;
};

struct ClusterSpec {
  std::vector<int> cores;  // c_i per node
  LinkCost link;

  int nodes() const { return static_cast<int>(cores.size()); }
  int total_cores() const;
};

struct SchedulerConfig {
  double latency_target = 0.01;       // T_max, s
  double phi_base = kDefaultPhiBase;  // bytes/s per core
  double period = 1.0;                // s
  int core_budget = 0;                // 0 = all cluster cores
};

/// Sojourn time of an M/M/k queue; nullopt when k <= lambda/mu.
std::optional<double> mmk_latency(double lambda, double mu, int k);

/// (1/lambda_0) * sum_j lambda_j * E[T_j](k_j). Throws ZeroSourceRate.
std::optional<double> pipeline_latency(const AllocationVector &k, const MetricsSnapshot &snap);

struct AllocationResult {
  AllocationVector k;
  bool overload = false;
  std::optional<double> latency;
};

AllocationResult allocate(const MetricsSnapshot &snap, int budget, double latency_target);
inline AllocationResult allocate(const MetricsSnapshot &snap, const SchedulerConfig &cfg,
                                 int cluster_cores) {
  return allocate(snap, cfg.core_budget > 0 ? cfg.core_budget : cluster_cores, cfg.latency_target);
}

/// C(X | X~) in bytes.
double transition_cost(const AssignmentMatrix &previous, const AssignmentMatrix &next,
                       const std::vector<double> &state_bytes);

struct MarginalCosts {
  double allocate = 0.0;
  std::optional<double> deallocate;  // nullopt when X_j = 1
};

MarginalCosts marginal_costs(const AssignmentMatrix &x, int node, int executor,
                             const std::vector<double> &state_bytes);

/// data_rate / allocated cores.
double data_intensity(const ExecutorMetrics &m, int cores);

/// Greedy core transfer from over- to under-provisioned executors. nullopt
/// means no feasible transfer exists at this phi.
std::optional<AssignmentMatrix> assign(const AllocationVector &k, const AssignmentMatrix &previous,
                                       const ClusterSpec &cluster, double phi,
                                       const MetricsSnapshot &snap);

struct AdaptiveAssignment {
  AssignmentMatrix x;
  double phi = 0.0;
  int iterations = 0;
};

/// Doubles phi from phi_base until assign succeeds.
AdaptiveAssignment assign_adaptive(const AllocationVector &k, const AssignmentMatrix &previous,
                                   const ClusterSpec &cluster, double phi_base,
                                   const MetricsSnapshot &snap);

}  // namespace elastic
