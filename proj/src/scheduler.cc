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

#include "elastic/scheduler.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "elastic/errors.h"

namespace elastic {

AssignmentMatrix::AssignmentMatrix(int nodes, int executors, std::vector<NodeId> local_nodes)
    : nodes_(nodes), executors_(executors), cells_(static_cast<std::size_t>(nodes) * executors, 0),
      local_(std::move(local_nodes)) {
  local_.resize(executors, 0);
}

int AssignmentMatrix::column_sum(int executor) const {
  int sum = 0;
  for (int i = 0; i < nodes_; ++i) sum += at(i, executor);
  return sum;
}

int AssignmentMatrix::row_sum(int node) const {
  int sum = 0;
  for (int j = 0; j < executors_; ++j) sum += at(node, j);
  return sum;
}

int ClusterSpec::total_cores() const { return std::accumulate(cores.begin(), cores.end(), 0); }

std::optional<double> mmk_latency(double lambda, double mu, int k) {
  if (!(mu > 0.0) || k < 1) return std::nullopt;
  if (static_cast<double>(k) * mu <= lambda) return std::nullopt;
  const double a = lambda / mu;
  // Erlang B by recurrence, then Erlang C from B.
  double b = 1.0;
  for (int n = 1; n <= k; ++n) b = a * b / (static_cast<double>(n) + a * b);
  const double c = static_cast<double>(k) * b / (static_cast<double>(k) - a * (1.0 - b));
  return 1.0 / mu + c / (static_cast<double>(k) * mu - lambda);
}

std::optional<double> pipeline_latency(const AllocationVector &k, const MetricsSnapshot &snap) {
  if (!(snap.source_rate > 0.0)) throw Error(ErrorCode::kZeroSourceRate, "lambda_0 must be > 0");
  double sum = 0.0;
  for (std::size_t j = 0; j < snap.executors.size(); ++j) {
    const auto &e = snap.executors[j];
    if (e.arrival_rate <= 0.0) continue;
    auto t = mmk_latency(e.arrival_rate, e.service_rate, k[j]);
    if (!t) return std::nullopt;
    sum += e.arrival_rate * *t;
  }
  return sum / snap.source_rate;
}

namespace {

// Latency over the measured (warm) executors only.
std::optional<double> warm_latency(const AllocationVector &k, const MetricsSnapshot &snap,
                                   const std::vector<bool> &cold) {
  double sum = 0.0;
  for (std::size_t j = 0; j < snap.executors.size(); ++j) {
    const auto &e = snap.executors[j];
    if (cold[j] || e.arrival_rate <= 0.0) continue;
    auto t = mmk_latency(e.arrival_rate, e.service_rate, k[j]);
    if (!t) return std::nullopt;
    sum += e.arrival_rate * *t;
  }
  return sum / snap.source_rate;
}

}  // namespace

AllocationResult allocate(const MetricsSnapshot &snap, int budget, double latency_target) {
  const std::size_t m = snap.executors.size();
  AllocationResult out;
  out.k.assign(m, 1);
  std::vector<bool> cold(m, false);
  std::vector<double> load(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const auto &e = snap.executors[j];
    cold[j] = !(e.service_rate > 0.0);
    if (cold[j]) continue;
    load[j] = e.arrival_rate / e.service_rate;
    out.k[j] = static_cast<int>(std::floor(load[j])) + 1;
  }
  const int total = std::accumulate(out.k.begin(), out.k.end(), 0);
  if (total > budget) {
    // Largest remainder over lambda/mu, one core minimum each.
    out.overload = true;
    out.k.assign(m, 1);
    int spare = budget - static_cast<int>(m);
    double weight = std::accumulate(load.begin(), load.end(), 0.0);
    if (spare <= 0 || !(weight > 0.0)) return out;
    std::vector<std::pair<double, std::size_t>> rem;
    int given = 0;
    for (std::size_t j = 0; j < m; ++j) {
      double quota = spare * load[j] / weight;
      int whole = static_cast<int>(std::floor(quota));
      out.k[j] += whole;
      given += whole;
      rem.emplace_back(quota - whole, j);
    }
    std::stable_sort(rem.begin(), rem.end(),
                     [](const auto &a, const auto &b) { return a.first > b.first; });
    for (int r = 0; r < spare - given; ++r) out.k[rem[r].second] += 1;
    return out;
  }
  if (!(snap.source_rate > 0.0)) return out;

  int used = total;
  out.latency = warm_latency(out.k, snap, cold);
  while ((!out.latency || *out.latency > latency_target) && used < budget) {
    int best = -1;
    std::optional<double> best_latency;
    for (std::size_t j = 0; j < m; ++j) {
      if (cold[j]) continue;
      out.k[j] += 1;
      auto t = warm_latency(out.k, snap, cold);
      out.k[j] -= 1;
      if (t && (!best_latency || *t < *best_latency)) {
        best_latency = t;
        best = static_cast<int>(j);
      }
    }
    if (best < 0) break;
    out.k[best] += 1;
    ++used;
    out.latency = best_latency;
  }
  out.overload = !out.latency || *out.latency > latency_target;
  return out;
}

double transition_cost(const AssignmentMatrix &previous, const AssignmentMatrix &next,
                       const std::vector<double> &state_bytes) {
  double cost = 0.0;
  for (int j = 0; j < previous.executors(); ++j) {
    const double before = previous.column_sum(j);
    if (before <= 0) continue;
    const double after = next.column_sum(j);
    for (int i = 0; i < previous.nodes(); ++i) {
      double share_before = state_bytes[j] * previous.at(i, j) / before;
      double share_after = after > 0 ? state_bytes[j] * next.at(i, j) / after : 0.0;
      cost += std::max(0.0, share_before - share_after);
    }
  }
  return cost;
}

MarginalCosts marginal_costs(const AssignmentMatrix &x, int node, int executor,
                             const std::vector<double> &state_bytes) {
  const double total = x.column_sum(executor);
  const double here = x.at(node, executor);
  const double s = state_bytes[executor];
  MarginalCosts out;
  out.allocate = total > 0 ? s * (total - here) / (total * (total + 1)) : 0.0;
  if (total > 1) out.deallocate = s * (total - here) / (total * (total - 1));
  return out;
}

double data_intensity(const ExecutorMetrics &m, int cores) {
  return cores > 0 ? m.data_rate / cores : m.data_rate;
}

std::optional<AssignmentMatrix> assign(const AllocationVector &k, const AssignmentMatrix &previous,
                                       const ClusterSpec &cluster, double phi,
                                       const MetricsSnapshot &snap) {
  const int n = previous.nodes();
  const int m = previous.executors();
  AssignmentMatrix x = previous;
  std::vector<double> sizes(m, 0.0);
  std::vector<double> intensity(m, 0.0);
  std::vector<bool> intensive(m, false);
  for (int j = 0; j < m; ++j) {
    sizes[j] = snap.executors[j].state_bytes;
    intensity[j] = data_intensity(snap.executors[j], k[j]);
    intensive[j] = intensity[j] > phi;
  }
  std::vector<int> free(n);
  for (int i = 0; i < n; ++i) free[i] = cluster.cores[i] - x.row_sum(i);

  // A data-intensive executor keeps only its local cores.
  for (int j = 0; j < m; ++j) {
    if (!intensive[j]) continue;
    for (int i = 0; i < n; ++i) {
      if (i == x.local_node(j)) continue;
      free[i] += x.at(i, j);
      x.at(i, j) = 0;
    }
  }

  std::vector<int> under;
  for (int j = 0; j < m; ++j) {
    if (x.column_sum(j) < k[j]) under.push_back(j);
  }
  std::stable_sort(under.begin(), under.end(),
                   [&](int a, int b) { return intensity[a] > intensity[b]; });

  auto over = [&](int j) { return x.column_sum(j) > k[j]; };

  for (int j : under) {
    while (x.column_sum(j) < k[j]) {
      // (cost, node, donor) with donor -1 standing for a free core.
      std::optional<std::tuple<double, int, int>> best;
      auto consider = [&](double cost, int i, int donor) {
        std::tuple<double, int, int> cand{cost, i, donor};
        if (!best || cand < *best) best = cand;
      };
      for (int i = 0; i < n; ++i) {
        if (intensive[j] && i != x.local_node(j)) continue;
        double gain = intensive[j] ? 0.0 : marginal_costs(x, i, j, sizes).allocate;
        if (free[i] > 0) consider(gain, i, -1);
        for (int d = 0; d < m; ++d) {
          if (d == j || x.at(i, d) < 1 || !over(d)) continue;
          auto c = marginal_costs(x, i, d, sizes).deallocate;
          if (!c) continue;
          consider(*c + gain, i, d);
        }
      }
      if (!best) return std::nullopt;
      auto [cost, i, donor] = *best;
      if (donor < 0) {
        --free[i];
      } else {
        --x.at(i, donor);
      }
      ++x.at(i, j);
    }
  }

  // Return what the over-provisioned executors still hold beyond k.
  for (int j = 0; j < m; ++j) {
    while (x.column_sum(j) > k[j]) {
      int pick = -1;
      double pick_cost = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        if (x.at(i, j) < 1) continue;
        double c = marginal_costs(x, i, j, sizes).deallocate.value_or(0.0);
        if (c < pick_cost) {
          pick_cost = c;
          pick = i;
        }
      }
      --x.at(pick, j);
      ++free[pick];
    }
  }
  return x;
}

AdaptiveAssignment assign_adaptive(const AllocationVector &k, const AssignmentMatrix &previous,
                                   const ClusterSpec &cluster, double phi_base,
                                   const MetricsSnapshot &snap) {
  if (std::accumulate(k.begin(), k.end(), 0) > cluster.total_cores()) {
    throw Error(ErrorCode::kInfeasibleAssignment, "allocation exceeds cluster capacity");
  }
  double max_intensity = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) {
    max_intensity = std::max(max_intensity, data_intensity(snap.executors[j], k[j]));
  }
  AdaptiveAssignment out;
  out.phi = phi_base;
  while (true) {
    ++out.iterations;
    if (auto x = assign(k, previous, cluster, out.phi, snap)) {
      out.x = std::move(*x);
      return out;
    }
    if (out.phi >= max_intensity) {
      throw Error(ErrorCode::kInfeasibleAssignment, "no assignment even without locality");
    }
    out.phi *= 2.0;
  }
}

}  // namespace elastic
