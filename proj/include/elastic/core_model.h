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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace elastic {

using Key = std::uint64_t;
using OperatorId = int;
using ExecutorId = int;
using NodeId = int;

/// FNV-1a 64 over the 8 little-endian bytes of `key`.
std::uint64_t fnv1a64(Key key);

/// Executor tier: fnv1a64(key) mod y.
int hash_key_to_executor(Key key, int y);

/// Shard tier. The key is XORed with a fixed salt before hashing and the
/// hash is folded (h ^ h >> 32) so the shard index does not depend only on
/// the low bits FNV-1a shares with the executor tier.
int hash_key_to_shard(Key key, int z);

inline constexpr std::uint64_t kShardSalt = 0x9e3779b97f4a7c15ULL;

struct OperatorSpec {
  std::string name;
  int executors = 1;            // y
  int shards_per_executor = 256;  // z
  double cpu_cost_per_tuple = 1e-3;
  double output_selectivity = 0.0;
  std::uint64_t output_tuple_bytes = 128;
};

struct EdgeSpec {
  std::string from;
  std::string to;
};

struct TopologySpec {
  std::vector<OperatorSpec> operators;
  std::vector<EdgeSpec> edges;
  double source_rate = 0.0;  // tuples/s entering every root operator
};

struct Tuple {
  Key key = 0;
  std::uint64_t payload_bytes = 0;
  double created_at = 0.0;
  std::uint64_t root_id = 0;  // source tuple this one descends from
  std::uint64_t seq = 0;      // per-key arrival sequence at the source
  std::uint32_t copy = 0;     // output index when selectivity > 1
  double cost = 0.0;          // service demand at the current operator, s
};

/// Static operator-level partition of the key space.
struct KeyPartition {
  OperatorId op = 0;
  int executors = 1;
  int shards = 1;

  int executor_of(Key key) const { return hash_key_to_executor(key, executors); }
  int shard_of(Key key) const { return hash_key_to_shard(key, shards); }
};

/// A validated dataflow graph. Operators and executors get dense ids;
/// executors of operator `o` are [first_executor(o), first_executor(o) + y).
class Topology {
 public:
  const std::vector<OperatorSpec> &operators() const { return ops_; }
  int operator_count() const { return static_cast<int>(ops_.size()); }
  const OperatorSpec &op(OperatorId id) const { return ops_.at(id); }
  std::optional<OperatorId> find(const std::string &name) const;

  const std::vector<OperatorId> &downstream(OperatorId id) const { return down_.at(id); }
  const std::vector<OperatorId> &upstream(OperatorId id) const { return up_.at(id); }
  const std::vector<OperatorId> &topological_order() const { return topo_; }
  std::vector<OperatorId> roots() const;
  std::vector<OperatorId> sinks() const;

  /// m, the number of executors across all operators.
  int executor_count() const { return executor_count_; }
  ExecutorId first_executor(OperatorId id) const { return first_exec_.at(id); }
  OperatorId operator_of(ExecutorId e) const;
  KeyPartition partition(OperatorId id) const;

  double source_rate() const { return source_rate_; }
  const std::vector<std::pair<OperatorId, OperatorId>> &edges() const { return edges_; }

 private:
  friend Topology validate_topology(const TopologySpec &spec);

  std::vector<OperatorSpec> ops_;
  std::vector<std::pair<OperatorId, OperatorId>> edges_;
  std::vector<std::vector<OperatorId>> down_;
  std::vector<std::vector<OperatorId>> up_;
  std::vector<OperatorId> topo_;
  std::vector<ExecutorId> first_exec_;
  int executor_count_ = 0;
  double source_rate_ = 0.0;
};

/// Throws Error{kDanglingEdge | kCycleDetected | kNonPositiveParameter}.
Topology validate_topology(const TopologySpec &spec);

/// JSON mapping is one-to-one with the struct fields:
/// {"source_rate": 1000, "operators": [{"name": "a", "executors": 2,
///  "shards_per_executor": 256, "cpu_cost_per_tuple": 0.001,
///  "output_selectivity": 1, "output_tuple_bytes": 128}],
///  "edges": [{"from": "a", "to": "b"}]}
TopologySpec topology_from_json(const nlohmann::json &doc);
nlohmann::json topology_to_json(const TopologySpec &spec);

}  // namespace elastic
