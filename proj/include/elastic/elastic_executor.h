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
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "elastic/core_model.h"

namespace elastic {

using TaskId = int;
using ShardId = int;

inline constexpr double kDefaultTheta = 1.2;
inline constexpr int kDefaultShardsPerExecutor = 256;
inline constexpr std::uint64_t kDefaultShardStateBytes = 32 * 1024;
inline constexpr double kDefaultEwmaAlpha = 0.5;

struct CoreId {
  NodeId node = 0;
  int slot = 0;
  auto operator<=>(const CoreId &) const = default;
};

struct TaskRef {
  TaskId id = 0;
  NodeId node = 0;
  bool local = true;
  CoreId core;
};

struct ShardMove {
  ShardId shard = 0;
  TaskId source = 0;
  TaskId destination = 0;
  bool requires_migration = false;
};

/// Tier 2 of the routing table; tier 1 is hash_key_to_shard(key, z).
struct RoutingTable {
  int z = 0;
  std::vector<TaskId> shard_task;
  std::vector<bool> paused;
};

struct ShardStats {
  std::vector<double> workload;  // EWMA of CPU-seconds per window
  std::vector<std::uint64_t> state_bytes;
};

struct LoadStats {
  std::vector<double> task_workload;
};

/// max / mean of the task workloads; 1 when the total is zero.
double imbalance(std::span<const double> task_workload);
inline double imbalance(const LoadStats &load) { return imbalance(load.task_workload); }

/// Greedy rounds: move the single shard of the most loaded task to the least
/// loaded task that lowers the imbalance most. Stops at delta <= theta, at a
/// local minimum, or after z rounds. `tasks` lists every eligible task,
/// including ones that currently hold no shard. Shards mapped to a task not
/// in `tasks` are ignored. Ties go to the lowest id. The returned moves have
/// requires_migration unset.
std::vector<ShardMove> plan_rebalance(std::span<const double> shard_load,
                                      std::span<const TaskId> shard_task,
                                      std::span<const TaskId> tasks, double theta);
/// Same, but shards with pinned[s] set count toward their task's load and
/// are never moved.
std::vector<ShardMove> plan_rebalance(std::span<const double> shard_load,
                                      std::span<const TaskId> shard_task,
                                      std::span<const TaskId> tasks, double theta,
                                      const std::vector<bool> &pinned);

/// Reassign every shard of `leaving` to the remaining tasks, heaviest shard
/// first onto the currently least loaded task.
std::vector<ShardMove> plan_evacuation(std::span<const double> shard_load,
                                       std::span<const TaskId> shard_task, TaskId leaving,
                                       std::span<const TaskId> survivors);

struct KeyState {
  std::uint64_t count = 0;
  std::uint64_t checksum = 0;  // order sensitive
  std::uint64_t last_seq = 0;
};

/// Per-process key-value state, grouped by shard so a shard's keys can be
/// handed to another process in one piece.
class StateStore {
 public:
  using ShardState = std::unordered_map<Key, KeyState>;

  bool owns(ShardId shard) const { return shards_.contains(shard); }
  void adopt(ShardId shard, ShardState state = {}) { shards_[shard] = std::move(state); }
  ShardState release(ShardId shard);
  const KeyState *find(ShardId shard, Key key) const;
  ShardState *shard(ShardId shard);
  std::size_t shard_count() const { return shards_.size(); }

 private:
  std::unordered_map<ShardId, ShardState> shards_;
};

/// Counter update: count += 1 and checksum folds in `seq`. Throws NotOwner
/// when the shard's state is not in this store.
const KeyState &state_apply(StateStore &store, ShardId shard, Key key, std::uint64_t seq);

enum class ProtocolEventKind {
  kPauseShard,
  kLabelEnqueued,
  kLabelDequeued,
  kMigrationStart,
  kMigrationSkipped,
  kMigrationDone,
  kRoutingUpdated,
  kResumeShard,
  kTaskAdded,
  kTaskRemoved,
  kProcessCreated,
  kProcessDestroyed,
  // resource-centric repartition, addressed to other executors
  kPauseUpstream,
  kDrainBarrier,
  kRoutingUpdateUpstream,
};

std::string_view protocol_event_name(ProtocolEventKind kind);

struct ProtocolEvent {
  ProtocolEventKind kind;
  double time = 0.0;
  ExecutorId executor = 0;
  ShardId shard = -1;
  TaskId source = -1;
  TaskId destination = -1;
  std::uint64_t bytes = 0;
  double duration = 0.0;
  int peer = -1;  // upstream executor for inter-operator messages

  bool inter_operator() const {
    return kind == ProtocolEventKind::kPauseUpstream ||
           kind == ProtocolEventKind::kRoutingUpdateUpstream;
  }
};

/// One line: kind,time,executor,shard,source,destination,bytes,duration,peer
std::string format_event(const ProtocolEvent &e);

struct LinkCost {
  double latency = 0.5e-3;      // s per message
  double bandwidth = 125.0e6;   // bytes/s
};

/// Given (from, to, bytes, now), returns the arrival time.
using TransferFn = std::function<double(NodeId, NodeId, std::uint64_t, double)>;

enum class DispatchMode {
  kShardRouted,   // tier-2 table decides the task
  kSharedQueue,   // any idle task takes the next tuple; M/M/k validation only
};

struct ExecutorConfig {
  int shards = kDefaultShardsPerExecutor;
  std::uint64_t shard_state_bytes = kDefaultShardStateBytes;
  LinkCost link;
  double ewma_alpha = kDefaultEwmaAlpha;
  DispatchMode dispatch = DispatchMode::kShardRouted;
};

struct WorkItem {
  enum class Kind { kData, kLabel } kind = Kind::kData;
  Tuple tuple;
  ShardId shard = 0;
  double ready_at = 0.0;
};

struct RouteResult {
  enum class Outcome { kTask, kBuffered, kShared } outcome = Outcome::kTask;
  TaskId task = -1;
};

struct LabelOutcome {
  ShardMove move;
  std::uint64_t bytes = 0;  // 0 when migration is skipped
  double done_at = 0.0;     // when finish_move may run
};

/// A key subspace served by a dynamic set of tasks, one per assigned core.
/// Owns the routing table, per-task FIFO pending queues, per-process state
/// stores and the shard move protocol. Time is supplied by the caller.
class ElasticExecutor {
 public:
  ElasticExecutor(ExecutorId id, NodeId local_node, ExecutorConfig config);

  ExecutorId id() const { return id_; }
  NodeId local_node() const { return local_node_; }
  const ExecutorConfig &config() const { return config_; }
  void set_transfer(TransferFn fn) { transfer_ = std::move(fn); }

  TaskRef add_task(CoreId core, double now);
  /// Starts evacuating the task's shards; the task is destroyed once its
  /// moves finish and its queue drains (see reap()).
  std::vector<ProtocolEvent> remove_task(TaskId task, double now);
  /// Retires several tasks at once; their shards only go to survivors.
  std::vector<ProtocolEvent> remove_tasks(const std::vector<TaskId> &tasks, double now);
  /// Destroys drained retiring tasks and empty remote processes.
  std::vector<TaskRef> reap(double now, std::vector<ProtocolEvent> *events = nullptr);

  /// Receiver. `entry` is the node where the tuple enters the executor.
  RouteResult route(const Tuple &tuple, double now);
  RouteResult route_from(const Tuple &tuple, double now, NodeId entry);

  std::vector<ProtocolEvent> begin_move(ShardMove move, double now);
  /// Called when a label reaches the head of the source queue and is popped.
  LabelOutcome on_label(ShardId shard, double now, std::vector<ProtocolEvent> *events);
  std::vector<ProtocolEvent> finish_move(ShardId shard, double now);

  /// Runs the whole move protocol synchronously: pause, label, process the
  /// source task's queue up to the label with `process`, migrate or skip,
  /// switch the table and release buffered tuples to the destination.
  std::vector<ProtocolEvent> execute_shard_move(
      ShardMove move, double now, const std::function<void(TaskId, const Tuple &)> &process);

  /// Plan and start moves that bring delta under theta. Shards already in
  /// flight count toward their destination and are not moved again.
  std::vector<ProtocolEvent> rebalance(double theta, double now);
  std::vector<ShardMove> plan(double theta) const;

  // Task-side access used by the runtime.
  const WorkItem *front(TaskId task) const;
  WorkItem pop_front(TaskId task);
  /// Applies the tuple's state update in the task's process.
  const KeyState &apply(TaskId task, const Tuple &tuple);
  ShardId shard_of(Key key) const { return hash_key_to_shard(key, config_.shards); }

  /// Folds the window's per-shard CPU demand (tuple.cost summed at routing)
  /// into the EWMA and clears it.
  void roll_window();

  // Introspection.
  std::vector<TaskRef> tasks() const;
  std::vector<TaskId> active_task_ids() const;
  bool has_task(TaskId task) const { return tasks_.contains(task); }
  const TaskRef &task(TaskId task) const;
  bool retiring(TaskId task) const;
  int task_count() const { return static_cast<int>(tasks_.size()); }
  int active_task_count() const;
  std::size_t pending(TaskId task) const;
  std::size_t queued_tuples() const;
  std::size_t buffered_tuples() const;
  bool moves_in_flight() const { return !in_flight_.empty(); }
  bool shard_in_flight(ShardId shard) const { return in_flight_.contains(shard); }
  const RoutingTable &routing() const { return table_; }
  const ShardStats &shard_stats() const { return stats_; }
  LoadStats load() const;
  std::uint64_t state_bytes() const;
  std::set<NodeId> process_nodes() const;
  bool process_owns(NodeId node, ShardId shard) const;
  const KeyState *find_state(Key key) const;
  /// Seeds a shard's workload estimate (tests, warm starts).
  void set_shard_load(ShardId shard, double load) { stats_.workload.at(shard) = load; }
  /// Routing-table assignment without the protocol; only valid while the
  /// executor holds no tuples. Used to install an initial layout.
  void assign_shard(ShardId shard, TaskId task);
  /// Moves state between processes directly; used by the resource-centric
  /// repartition after its global drain barrier.
  std::uint64_t reassign_quiesced(ShardId shard, TaskId destination);
  /// True while an in-flight move targets `task`.
  bool is_move_destination(TaskId task) const;
  std::uint64_t migrated_bytes() const { return migrated_bytes_; }
  std::uint64_t intra_process_moves() const { return intra_moves_; }

 private:
  struct Task {
    TaskRef ref;
    std::deque<WorkItem> pending;
    bool retiring = false;
  };
  struct Process {
    NodeId node = 0;
    bool main = false;
    std::set<TaskId> tasks;
    StateStore store;
  };
  struct InFlight {
    ShardMove move;
    std::deque<Tuple> held;
    bool label_seen = false;
  };

  Task &task_mut(TaskId task);
  Process &process_for(NodeId node, double now, std::vector<ProtocolEvent> *events);
  void deliver(TaskId task, WorkItem item, NodeId from, double now);
  double transfer(NodeId from, NodeId to, std::uint64_t bytes, double now) const;
  std::vector<ProtocolEvent> start_moves(std::vector<ShardMove> moves, double now);
  std::uint64_t relocate(ShardId shard, TaskId destination);

  ExecutorId id_;
  NodeId local_node_;
  ExecutorConfig config_;
  TransferFn transfer_;
  RoutingTable table_;
  ShardStats stats_;
  std::vector<double> window_cpu_;
  std::map<TaskId, Task> tasks_;
  std::map<NodeId, Process> processes_;
  std::map<ShardId, InFlight> in_flight_;
  std::deque<WorkItem> shared_;
  TaskId next_task_ = 0;
  std::uint64_t migrated_bytes_ = 0;
  std::uint64_t intra_moves_ = 0;
};

}  // namespace elastic
