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

// Reference implementations used by the tests. Written separately from the
// library code on purpose; none of these call into elastic::.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

// FNV-1a over the little-endian bytes of the key.
inline std::uint64_t fnv1a64(std::uint64_t key) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(key >> (8 * i));
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

// Erlang C from the textbook P0 sum (no recurrence).
inline std::optional<double> mmk_sojourn(double lambda, double mu, int k) {
  double a = lambda / mu;
  double rho = a / k;
  if (rho >= 1.0) return std::nullopt;
  double sum = 0.0;
  for (int n = 0; n < k; ++n) sum += std::exp(n * std::log(a) - std::lgamma(n + 1.0));
  if (a == 0.0) sum = 1.0;
  double tail = a == 0.0 ? 0.0 : std::exp(k * std::log(a) - std::lgamma(k + 1.0)) / (1.0 - rho);
  double p_wait = tail / (sum + tail);
  return 1.0 / mu + p_wait / (k * mu - lambda);
}

inline std::optional<double> pipeline(const std::vector<double> &lambda,
                                      const std::vector<double> &mu, const std::vector<int> &k,
                                      double lambda0) {
  double total = 0.0;
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    auto t = mmk_sojourn(lambda[j], mu[j], k[j]);
    if (!t) return std::nullopt;
    total += lambda[j] * *t;
  }
  return total / lambda0;
}

// Smallest total core count meeting the target, by enumeration. nullopt if
// nothing within the budget does.
inline std::optional<int> min_total_cores(const std::vector<double> &lambda,
                                          const std::vector<double> &mu, double lambda0,
                                          int budget, double target) {
  const std::size_t m = lambda.size();
  std::optional<int> best;
  std::vector<int> k(m, 1);
  std::function<void(std::size_t, int)> rec = [&](std::size_t j, int used) {
    if (j == m) {
      auto t = pipeline(lambda, mu, k, lambda0);
      if (t && *t <= target && (!best || used < *best)) best = used;
      return;
    }
    for (int c = 1; used + c + static_cast<int>(m - j - 1) <= budget; ++c) {
      k[j] = c;
      rec(j + 1, used + c);
    }
  };
  rec(0, 0);
  return best;
}

inline double imbalance(const std::vector<double> &w) {
  if (w.empty()) return 1.0;
  double sum = 0.0, peak = 0.0;
  for (double v : w) {
    sum += v;
    peak = std::max(peak, v);
  }
  double mean = sum / static_cast<double>(w.size());
  return mean > 0.0 ? std::max(1.0, peak / mean) : 1.0;
}

// Grid helper: cells[i][j] = cores of executor j on node i.
using Grid = std::vector<std::vector<int>>;

inline int col(const Grid &g, int j) {
  int s = 0;
  for (const auto &row : g) s += row[j];
  return s;
}

inline double transition_cost(const Grid &before, const Grid &after,
                              const std::vector<double> &state) {
  double c = 0.0;
  for (std::size_t j = 0; j < state.size(); ++j) {
    int xb = col(before, static_cast<int>(j));
    int xa = col(after, static_cast<int>(j));
    if (xb == 0) continue;
    for (std::size_t i = 0; i < before.size(); ++i) {
      double was = state[j] * before[i][j] / xb;
      double now = xa == 0 ? 0.0 : state[j] * after[i][j] / xa;
      if (was > now) c += was - now;
    }
  }
  return c;
}

// Empty string when the grid satisfies capacity, allocation and locality.
inline std::string check_assignment(const Grid &g, const std::vector<int> &k,
                                    const std::vector<int> &cores,
                                    const std::vector<bool> &local_only,
                                    const std::vector<int> &local_node) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    int used = 0;
    for (std::size_t j = 0; j < k.size(); ++j) {
      if (g[i][j] < 0) return "negative cell";
      used += g[i][j];
      if (local_only[j] && static_cast<int>(i) != local_node[j] && g[i][j] > 0)
        return "remote core for local-only executor " + std::to_string(j);
    }
    if (used > cores[i]) return "node " + std::to_string(i) + " over capacity";
  }
  for (std::size_t j = 0; j < k.size(); ++j) {
    if (col(g, static_cast<int>(j)) != k[j])
      return "executor " + std::to_string(j) + " has wrong core count";
  }
  return {};
}

// Minimum transition cost over every grid meeting the constraints. With
// `monotone`, executors at their target keep their cells, executors below it
// only gain cores and executors above it only lose cores.
inline std::optional<double> min_transition_cost(const Grid &before, const std::vector<int> &k,
                                                 const std::vector<int> &cores,
                                                 const std::vector<bool> &local_only,
                                                 const std::vector<int> &local_node,
                                                 const std::vector<double> &state,
                                                 bool monotone = false) {
  const int n = static_cast<int>(cores.size());
  const int m = static_cast<int>(k.size());
  Grid g(n, std::vector<int>(m, 0));
  std::vector<int> room = cores;
  std::optional<double> best;
  // Distribute executor j's k[j] cores over nodes, one node at a time.
  std::function<void(int, int, int)> rec = [&](int j, int i, int left) {
    if (j == m) {
      double c = transition_cost(before, g, state);
      if (!best || c < *best) best = c;
      return;
    }
    if (i == n) {
      if (left == 0) rec(j + 1, 0, j + 1 < m ? k[j + 1] : 0);
      return;
    }
    int cap = std::min(left, room[i]);
    if (local_only[j] && i != local_node[j]) cap = 0;
    int low = 0;
    if (monotone) {
      // Locality first strips remote cores from local-only executors.
      auto kept = [&](int node) {
        return local_only[j] && node != local_node[j] ? 0 : before[node][j];
      };
      int had = 0;
      for (int node = 0; node < n; ++node) had += kept(node);
      if (had >= k[j]) cap = std::min(cap, kept(i));
      if (had <= k[j]) low = kept(i);
    }
    for (int c = low; c <= cap; ++c) {
      g[i][j] = c;
      room[i] -= c;
      rec(j, i + 1, left - c);
      room[i] += c;
      g[i][j] = 0;
    }
  };
  rec(0, 0, m > 0 ? k[0] : 0);
  return best;
}

// Batch-means estimate: mean and 95% half width over `batches` equal batches.
struct Estimate {
  double mean = 0.0;
  double half_width = 0.0;
};

inline Estimate batch_means(const std::vector<double> &xs, int batches) {
  const std::size_t per = xs.size() / batches;
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) s += xs[i];
    means.push_back(s / per);
  }
  double mean = 0.0;
  for (double v : means) mean += v;
  mean /= batches;
  double var = 0.0;
  for (double v : means) var += (v - mean) * (v - mean);
  var /= (batches - 1);
  // Student t, 0.975 quantile; batches is 20 or 30 in the tests.
  double t = batches >= 30 ? 2.045 : 2.093;
  return {mean, t * std::sqrt(var / batches)};
}

}  // namespace oracle
