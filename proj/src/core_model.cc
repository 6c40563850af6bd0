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

#include "elastic/core_model.h"

#include <algorithm>
#include <map>
#include <queue>

#include "elastic/errors.h"

namespace elastic {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kDanglingEdge: return "DanglingEdge";
    case ErrorCode::kNonPositiveParameter: return "NonPositiveParameter";
    case ErrorCode::kNoTasks: return "NoTasks";
    case ErrorCode::kShardInFlight: return "ShardInFlight";
    case ErrorCode::kUnknownTask: return "UnknownTask";
    case ErrorCode::kCoreBusy: return "CoreBusy";
    case ErrorCode::kLastTask: return "LastTask";
    case ErrorCode::kNotOwner: return "NotOwner";
    case ErrorCode::kZeroSourceRate: return "ZeroSourceRate";
    case ErrorCode::kUndefinedDealloc: return "UndefinedDealloc";
    case ErrorCode::kInfeasibleAssignment: return "InfeasibleAssignment";
    case ErrorCode::kWrongPolicy: return "WrongPolicy";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kMissingSeries: return "MissingSeries";
    case ErrorCode::kEventQueueCorruption: return "EventQueueCorruption";
  }
  return "Unknown";
}

std::uint64_t fnv1a64(Key key) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int i = 0; i < 8; ++i) {
    h ^= (key >> (8 * i)) & 0xffU;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int hash_key_to_executor(Key key, int y) {
  return static_cast<int>(fnv1a64(key) % static_cast<std::uint64_t>(y));
}

int hash_key_to_shard(Key key, int z) {
  std::uint64_t h = fnv1a64(key ^ kShardSalt);
  h ^= h >> 32;
  return static_cast<int>(h % static_cast<std::uint64_t>(z));
}

std::optional<OperatorId> Topology::find(const std::string &name) const {
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    if (ops_[i].name == name) return static_cast<OperatorId>(i);
  }
  return std::nullopt;
}

std::vector<OperatorId> Topology::roots() const {
  std::vector<OperatorId> out;
  for (OperatorId o = 0; o < operator_count(); ++o) {
    if (up_[o].empty()) out.push_back(o);
  }
  return out;
}

std::vector<OperatorId> Topology::sinks() const {
  std::vector<OperatorId> out;
  for (OperatorId o = 0; o < operator_count(); ++o) {
    if (down_[o].empty()) out.push_back(o);
  }
  return out;
}

OperatorId Topology::operator_of(ExecutorId e) const {
  auto it = std::upper_bound(first_exec_.begin(), first_exec_.end(), e);
  return static_cast<OperatorId>(it - first_exec_.begin()) - 1;
}

KeyPartition Topology::partition(OperatorId id) const {
  return KeyPartition{id, ops_.at(id).executors, ops_.at(id).shards_per_executor};
}

Topology validate_topology(const TopologySpec &spec) {
  if (!(spec.source_rate >= 0.0)) {
    throw Error(ErrorCode::kNonPositiveParameter, "source_rate must be >= 0");
  }
  Topology t;
  std::map<std::string, OperatorId> ids;
  for (const auto &op : spec.operators) {
    if (op.executors < 1 || op.shards_per_executor < 1 || !(op.cpu_cost_per_tuple > 0.0) ||
        !(op.output_selectivity >= 0.0)) {
      throw Error(ErrorCode::kNonPositiveParameter, "operator '" + op.name + "'");
    }
    if (!ids.emplace(op.name, static_cast<OperatorId>(t.ops_.size())).second) {
      throw Error(ErrorCode::kNonPositiveParameter, "duplicate operator '" + op.name + "'");
    }
    t.ops_.push_back(op);
  }
  const int n = static_cast<int>(t.ops_.size());
  t.down_.assign(n, {});
  t.up_.assign(n, {});
  for (const auto &e : spec.edges) {
    auto from = ids.find(e.from);
    auto to = ids.find(e.to);
    if (from == ids.end()) throw Error(ErrorCode::kDanglingEdge, "unknown operator '" + e.from + "'");
    if (to == ids.end()) throw Error(ErrorCode::kDanglingEdge, "unknown operator '" + e.to + "'");
    t.edges_.emplace_back(from->second, to->second);
    t.down_[from->second].push_back(to->second);
    t.up_[to->second].push_back(from->second);
  }

  // Kahn's algorithm; lowest id first keeps the order deterministic.
  std::vector<int> indeg(n);
  for (int o = 0; o < n; ++o) indeg[o] = static_cast<int>(t.up_[o].size());
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int o = 0; o < n; ++o) {
    if (indeg[o] == 0) ready.push(o);
  }
  while (!ready.empty()) {
    int o = ready.top();
    ready.pop();
    t.topo_.push_back(o);
    for (int d : t.down_[o]) {
      if (--indeg[d] == 0) ready.push(d);
    }
  }
  if (static_cast<int>(t.topo_.size()) != n) {
    throw Error(ErrorCode::kCycleDetected, "topology is not a DAG");
  }

  for (const auto &op : t.ops_) {
    t.first_exec_.push_back(t.executor_count_);
    t.executor_count_ += op.executors;
  }
  t.source_rate_ = spec.source_rate;
  return t;
}

namespace {

template <typename T>
T field(const nlohmann::json &obj, const char *name, const std::string &where, T fallback) {
  if (!obj.contains(name)) return fallback;
  try {
    return obj.at(name).get<T>();
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorCode::kConfigError, where + "." + name + ": " + e.what());
  }
}

}  // namespace

TopologySpec topology_from_json(const nlohmann::json &doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kConfigError, "topology: expected an object");
  TopologySpec spec;
  spec.source_rate = field<double>(doc, "source_rate", "topology", 0.0);
  if (!doc.contains("operators") || !doc["operators"].is_array()) {
    throw Error(ErrorCode::kConfigError, "topology.operators: expected an array");
  }
  int i = 0;
  for (const auto &o : doc["operators"]) {
    std::string where = "topology.operators[" + std::to_string(i++) + "]";
    OperatorSpec op;
    op.name = field<std::string>(o, "name", where, "");
    if (op.name.empty()) throw Error(ErrorCode::kConfigError, where + ".name: required");
    op.executors = field<int>(o, "executors", where, op.executors);
    op.shards_per_executor = field<int>(o, "shards_per_executor", where, op.shards_per_executor);
    op.cpu_cost_per_tuple = field<double>(o, "cpu_cost_per_tuple", where, op.cpu_cost_per_tuple);
    op.output_selectivity = field<double>(o, "output_selectivity", where, op.output_selectivity);
    op.output_tuple_bytes = field<std::uint64_t>(o, "output_tuple_bytes", where, op.output_tuple_bytes);
    spec.operators.push_back(std::move(op));
  }
  i = 0;
  if (doc.contains("edges")) {
    for (const auto &e : doc["edges"]) {
      std::string where = "topology.edges[" + std::to_string(i++) + "]";
      spec.edges.push_back({field<std::string>(e, "from", where, ""), field<std::string>(e, "to", where, "")});
    }
  }
  return spec;
}

nlohmann::json topology_to_json(const TopologySpec &spec) {
  nlohmann::json doc;
  doc["source_rate"] = spec.source_rate;
  doc["operators"] = nlohmann::json::array();
  for (const auto &op : spec.operators) {
    doc["operators"].push_back({{"name", op.name},
                                {"executors", op.executors},
                                {"shards_per_executor", op.shards_per_executor},
                                {"cpu_cost_per_tuple", op.cpu_cost_per_tuple},
                                {"output_selectivity", op.output_selectivity},
                                {"output_tuple_bytes", op.output_tuple_bytes}});
  }
  doc["edges"] = nlohmann::json::array();
  for (const auto &e : spec.edges) doc["edges"].push_back({{"from", e.from}, {"to", e.to}});
  return doc;
}

}  // namespace elastic
