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
#include <limits>
#include <map>
#include <unordered_map>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "elastic/core_model.h"
#include "elastic/elastic_executor.h"
#include "elastic/metrics.h"
#include "elastic/scheduler.h"
#include "elastic/workload.h"

namespace elastic {

enum class PolicyKind { kStatic, kResourceCentric, kExecutorCentric };

std::string_view policy_name(PolicyKind policy);  // "static", "rc", "ec"
std::optional<PolicyKind> parse_policy(std::string_view name);

enum class ServiceModel { kExponential, kDeterministic };

struct CostModel {
  LinkCost link;
  double serialization_per_byte = 1e-9;  // s, added to every remote transfer
  double rc_sync_rtt = 0.05;             // s per upstream pause / routing update
};

struct SimConfig {
  TopologySpec topology;
  WorkloadConfig workload;
  std::vector<int> node_cores = std::vector<int>(8, 8);
  CostModel cost;
  SchedulerConfig scheduler;
  PolicyKind policy = PolicyKind::kExecutorCentric;
  ServiceModel service = ServiceModel::kExponential;
  DispatchMode dispatch = DispatchMode::kShardRouted;
  double theta = kDefaultTheta;
  std::uint64_t shard_state_bytes = kDefaultShardStateBytes;
  double window = 1.0;
  double ewma_alpha = kDefaultEwmaAlpha;
  double bucket = 0.1;              // completion timeline resolution, s
  std::uint64_t max_pending = 0;    // un-completed source tuples; 0 = unbounded
  bool elastic = true;              // run the policy every scheduler period
  double source_stop = std::numeric_limits<double>::infinity();
  bool keep_protocol_events = true;
  bool keep_latencies = false;
  bool keep_emissions = false;
};

struct OperatorCounters {
  std::uint64_t delivered = 0;  // tuples sent to the operator
  std::uint64_t processed = 0;
  std::uint64_t order_violations = 0;
};

struct Trace {
  PolicyKind policy = PolicyKind::kExecutorCentric;
  double end_time = 0.0;
  std::vector<WindowSummary> windows;
  double bucket = 0.1;
  std::vector<std::uint64_t> buckets;  // completions per bucket
  std::vector<double> shuffle_times;
  std::vector<ProtocolEvent> protocol;
  std::vector<std::string> decisions;
  std::vector<double> latencies;       // keep_latencies only
  std::vector<Key> emissions;          // keep_emissions only, in source order
  std::vector<OperatorCounters> operators;

  std::uint64_t emitted = 0;
  std::uint64_t completed = 0;
  std::uint64_t migrated_bytes = 0;
  std::uint64_t intra_process_migrated_bytes = 0;
  std::uint64_t intra_process_moves = 0;
  std::uint64_t inter_process_moves = 0;
  std::uint64_t sync_messages = 0;
  std::uint64_t repartitions = 0;
  std::uint64_t scheduler_ticks = 0;
  std::uint64_t deferred_ticks = 0;

  std::uint64_t order_violations() const;
  /// Completions per second over [from, to), from the bucket timeline.
  double throughput(double from, double to) const;
};

/// window_end_s,policy,throughput_tps,mean_latency_s,p99_latency_s,migrated_bytes,
/// sync_messages,remote_transfer_bytes
void write_trace_csv(const Trace &trace, std::ostream &out);

/// Cores per operator in proportion to expected CPU demand, at least one each.
std::vector<int> demand_split(const Topology &topology, int cores);

/// Deterministic discrete-event simulation of one topology under one policy.
/// Executor-centric runs use one engine per executor; static runs one
/// single-task engine per static executor; resource-centric runs one engine
/// per operator whose tasks are the operator's executors.
class Simulator {
 public:
  explicit Simulator(SimConfig config);
  Simulator(const Simulator &) = delete;
  Simulator &operator=(const Simulator &) = delete;

  const Trace &run_until(double horizon);
  const Trace &trace() const { return trace_; }
  double now() const { return now_; }
  const SimConfig &config() const { return config_; }
  const Topology &topology() const { return topology_; }
  const ClusterSpec &cluster() const { return cluster_; }

  int engine_count() const { return static_cast<int>(engines_.size()); }
  const ElasticExecutor &engine(int e) const { return engines_.at(e).exec; }
  OperatorId engine_operator(int e) const { return engines_.at(e).op; }
  std::vector<int> engines_of(OperatorId op) const;
  /// Active tasks per (node, engine).
  AssignmentMatrix assignment() const;
  int free_cores(NodeId node) const;
  const KeyState *find_state(OperatorId op, Key key) const;

  /// Tuples of `op` that are queued, buffered, in service, held upstream or
  /// on the wire.
  std::uint64_t in_system(OperatorId op) const;
  std::uint64_t outstanding_roots() const { return roots_.size(); }

  /// Executor-centric only. Deferred (empty result) while any engine has a
  /// move in flight or a retiring task.
  std::vector<ProtocolEvent> apply_assignment(const AssignmentMatrix &x);
  /// Resource-centric only: pause upstream, drain, migrate, update upstream.
  std::vector<ProtocolEvent> rc_repartition(OperatorId op, const std::vector<ShardMove> &moves,
                                            const std::vector<TaskId> &retire = {});
  bool repartition_active(OperatorId op) const;

  std::vector<ProtocolEvent> request_move(int engine, ShardMove move);
  std::optional<TaskRef> request_add_task(int engine, NodeId node);
  std::vector<ProtocolEvent> request_remove_task(int engine, TaskId task);
  std::vector<ProtocolEvent> request_rebalance(int engine, double theta);
  void stop_source() { config_.source_stop = now_; }

 private:
  enum class EventKind { kArrival, kDeliver, kWake, kDone, kMigrated, kWindow, kShuffle, kRcPhase };
  struct Event {
    double time = 0.0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::kArrival;
    int engine = -1;
    int aux = -1;  // task, shard, entry node or operator
    Tuple tuple;
  };
  struct Later {
    bool operator()(const Event &a, const Event &b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };
  struct TaskRun {
    bool has_core = true;
    bool busy = false;
    double wake_at = std::numeric_limits<double>::infinity();
  };
  struct Engine {
    OperatorId op = 0;
    ElasticExecutor exec;
    std::map<TaskId, TaskRun> runs;
  };
  struct Slot {
    int engine = -1;
    TaskId task = -1;
    int next_engine = -1;  // waiting for the retiring holder
    TaskId next_task = -1;
  };
  struct Held {
    Tuple tuple;
    NodeId from = 0;
  };
  enum class RcPhase { kIdle, kPausing, kDraining, kMigrating, kUpdating };
  struct RcState {
    RcPhase phase = RcPhase::kIdle;
    bool paused = false;
    double drain_start = 0.0;
    std::vector<ShardMove> moves;
    std::vector<TaskId> retire;
    std::vector<Held> held;
    int upstream = 0;
  };

  void push(Event e);
  void schedule(double time, EventKind kind, int engine = -1, int aux = -1);
  void handle(Event &e);
  void build();
  void place_initial();
  int engine_for(OperatorId op, Key key) const;
  double link(NodeId from, NodeId to, std::uint64_t bytes, double at);
  double sample_cost(OperatorId op);

  void on_arrival();
  void emit(Key key);
  void send(OperatorId op, Tuple tuple, NodeId from, NodeId emitter);
  void route(int e, const Tuple &tuple, NodeId entry);
  void kick(int e, TaskId task);
  void kick_all(int e);
  void on_done(int e, TaskId task, const Tuple &tuple);
  void finish(int e, ShardId shard);
  void settle(int e);
  void complete(std::uint64_t root, double created_at);
  bool source_blocked() const;
  void unblock_source();
  void on_window();
  void policy_tick(const MetricsSnapshot &snap);
  void ec_tick(const MetricsSnapshot &snap);
  void rc_tick(const MetricsSnapshot &snap);
  void rc_step(OperatorId op);
  void rc_check_drain(OperatorId op);
  int upstream_executors(OperatorId op) const;
  TaskRef start_task(int e, NodeId node);
  void log(const std::vector<ProtocolEvent> &events);

  SimConfig config_;
  Topology topology_;
  ClusterSpec cluster_;
  WorkloadGenerator workload_;
  WindowAccumulator metrics_;
  Rng service_rng_;
  Trace trace_;

  std::vector<Engine> engines_;
  std::vector<int> first_engine_;
  std::vector<int> engine_count_;
  std::vector<std::vector<Slot>> slots_;
  std::vector<double> link_free_;
  std::vector<std::uint64_t> in_transit_;
  std::vector<RcState> rc_;
  std::vector<std::vector<std::uint64_t>> last_order_;  // per operator, per key

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;
  std::uint64_t window_index_ = 0;
  std::uint64_t shuffles_done_ = 0;
  std::uint64_t remote_bytes_ = 0;

  std::unordered_map<std::uint64_t, int> roots_;  // root id -> outstanding descendants
  std::vector<std::uint64_t> key_seq_;
  std::uint64_t next_root_ = 0;
  bool source_waiting_ = false;
  bool source_started_ = false;
  Arrival pending_arrival_;
};

}  // namespace elastic
