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

#include "elastic/elastic_executor.h"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include "elastic/errors.h"

namespace elastic {

double imbalance(std::span<const double> task_workload) {
  if (task_workload.empty()) return 1.0;
  double total = 0.0;
  double peak = 0.0;
  for (double w : task_workload) {
    total += w;
    peak = std::max(peak, w);
  }
  double mean = total / static_cast<double>(task_workload.size());
  if (!(mean > 0.0)) return 1.0;
  return std::max(1.0, peak / mean);
}

namespace {

// Index of the max (or min) load; lowest index wins ties.
std::size_t extreme(const std::vector<double> &load, bool want_max) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < load.size(); ++i) {
    if (want_max ? load[i] > load[best] : load[i] < load[best]) best = i;
  }
  return best;
}

}  // namespace

std::vector<ShardMove> plan_rebalance(std::span<const double> shard_load,
                                      std::span<const TaskId> shard_task,
                                      std::span<const TaskId> tasks, double theta) {
  return plan_rebalance(shard_load, shard_task, tasks, theta, {});
}

std::vector<ShardMove> plan_rebalance(std::span<const double> shard_load,
                                      std::span<const TaskId> shard_task,
                                      std::span<const TaskId> tasks, double theta,
                                      const std::vector<bool> &pinned) {
  std::vector<ShardMove> moves;
  if (tasks.size() < 2) return moves;
  std::vector<TaskId> ids(tasks.begin(), tasks.end());
  std::sort(ids.begin(), ids.end());
  auto slot_of = [&](TaskId t) -> int {
    auto it = std::lower_bound(ids.begin(), ids.end(), t);
    return (it != ids.end() && *it == t) ? static_cast<int>(it - ids.begin()) : -1;
  };

  std::vector<int> owner(shard_task.size(), -1);
  std::vector<double> load(ids.size(), 0.0);
  for (std::size_t s = 0; s < shard_task.size(); ++s) {
    owner[s] = slot_of(shard_task[s]);
    if (owner[s] >= 0) load[owner[s]] += shard_load[s];
  }

  const std::size_t rounds = shard_task.size();
  for (std::size_t round = 0; round < rounds; ++round) {
    double delta = imbalance(load);
    if (delta <= theta) break;
    std::size_t hi = extreme(load, true);
    std::size_t lo = extreme(load, false);
    if (hi == lo) break;

    int best_shard = -1;
    double best_delta = delta;
    for (std::size_t s = 0; s < shard_task.size(); ++s) {
      if (owner[s] != static_cast<int>(hi)) continue;
      if (!pinned.empty() && pinned[s]) continue;
      load[hi] -= shard_load[s];
      load[lo] += shard_load[s];
      double d = imbalance(load);
      load[hi] += shard_load[s];
      load[lo] -= shard_load[s];
      if (d < best_delta) {
        best_delta = d;
        best_shard = static_cast<int>(s);
      }
    }
    if (best_shard < 0) break;  // local minimum
    load[hi] -= shard_load[best_shard];
    load[lo] += shard_load[best_shard];
    owner[best_shard] = static_cast<int>(lo);
    moves.push_back({best_shard, ids[hi], ids[lo], false});
  }
  return moves;
}

std::vector<ShardMove> plan_evacuation(std::span<const double> shard_load,
                                       std::span<const TaskId> shard_task, TaskId leaving,
                                       std::span<const TaskId> survivors) {
  std::vector<ShardMove> moves;
  if (survivors.empty()) return moves;
  std::vector<TaskId> ids(survivors.begin(), survivors.end());
  std::sort(ids.begin(), ids.end());
  std::vector<double> load(ids.size(), 0.0);
  std::vector<ShardId> leaving_shards;
  for (std::size_t s = 0; s < shard_task.size(); ++s) {
    if (shard_task[s] == leaving) {
      leaving_shards.push_back(static_cast<ShardId>(s));
      continue;
    }
    auto it = std::lower_bound(ids.begin(), ids.end(), shard_task[s]);
    if (it != ids.end() && *it == shard_task[s]) load[it - ids.begin()] += shard_load[s];
  }
  std::stable_sort(leaving_shards.begin(), leaving_shards.end(),
                   [&](ShardId a, ShardId b) { return shard_load[a] > shard_load[b]; });
  for (ShardId s : leaving_shards) {
    std::size_t lo = extreme(load, false);
    load[lo] += shard_load[s];
    moves.push_back({s, leaving, ids[lo], false});
  }
  return moves;
}

StateStore::ShardState StateStore::release(ShardId shard) {
  auto it = shards_.find(shard);
  if (it == shards_.end()) throw Error(ErrorCode::kNotOwner, "shard " + std::to_string(shard));
  ShardState out = std::move(it->second);
  shards_.erase(it);
  return out;
}

const KeyState *StateStore::find(ShardId shard, Key key) const {
  auto it = shards_.find(shard);
  if (it == shards_.end()) return nullptr;
  auto kt = it->second.find(key);
  return kt == it->second.end() ? nullptr : &kt->second;
}

StateStore::ShardState *StateStore::shard(ShardId shard) {
  auto it = shards_.find(shard);
  return it == shards_.end() ? nullptr : &it->second;
}

const KeyState &state_apply(StateStore &store, ShardId shard, Key key, std::uint64_t seq) {
  auto *state = store.shard(shard);
  if (state == nullptr) {
    throw Error(ErrorCode::kNotOwner, "shard " + std::to_string(shard) + " is not in this process");
  }
  KeyState &ks = (*state)[key];
  ks.count += 1;
  ks.checksum = ks.checksum * 1099511628211ULL + seq + 1;
  ks.last_seq = seq;
  return ks;
}

std::string_view protocol_event_name(ProtocolEventKind kind) {
  switch (kind) {
    case ProtocolEventKind::kPauseShard: return "pause_shard";
    case ProtocolEventKind::kLabelEnqueued: return "label_enqueued";
    case ProtocolEventKind::kLabelDequeued: return "label_dequeued";
    case ProtocolEventKind::kMigrationStart: return "migration_start";
    case ProtocolEventKind::kMigrationSkipped: return "migration_skipped";
    case ProtocolEventKind::kMigrationDone: return "migration_done";
    case ProtocolEventKind::kRoutingUpdated: return "routing_updated";
    case ProtocolEventKind::kResumeShard: return "resume_shard";
    case ProtocolEventKind::kTaskAdded: return "task_added";
    case ProtocolEventKind::kTaskRemoved: return "task_removed";
    case ProtocolEventKind::kProcessCreated: return "process_created";
    case ProtocolEventKind::kProcessDestroyed: return "process_destroyed";
    case ProtocolEventKind::kPauseUpstream: return "pause_upstream";
    case ProtocolEventKind::kDrainBarrier: return "drain_barrier";
    case ProtocolEventKind::kRoutingUpdateUpstream: return "routing_update_upstream";
  }
  return "unknown";
}

std::string format_event(const ProtocolEvent &e) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.9f,%d,%d,%d,%d,%llu,%.9f,%d",
                std::string(protocol_event_name(e.kind)).c_str(), e.time, e.executor, e.shard,
                e.source, e.destination, static_cast<unsigned long long>(e.bytes), e.duration,
                e.peer);
  return buf;
}

ElasticExecutor::ElasticExecutor(ExecutorId id, NodeId local_node, ExecutorConfig config)
    : id_(id), local_node_(local_node), config_(config) {
  if (config_.shards < 1) throw Error(ErrorCode::kNonPositiveParameter, "shards must be >= 1");
  table_.z = config_.shards;
  table_.shard_task.assign(config_.shards, -1);
  table_.paused.assign(config_.shards, false);
  stats_.workload.assign(config_.shards, 0.0);
  stats_.state_bytes.assign(config_.shards, config_.shard_state_bytes);
  window_cpu_.assign(config_.shards, 0.0);
  processes_[local_node_].node = local_node_;
  processes_[local_node_].main = true;
}

double ElasticExecutor::transfer(NodeId from, NodeId to, std::uint64_t bytes, double now) const {
  if (transfer_) return transfer_(from, to, bytes, now);
  if (from == to) return now;
  return now + config_.link.latency + static_cast<double>(bytes) / config_.link.bandwidth;
}

ElasticExecutor::Task &ElasticExecutor::task_mut(TaskId task) {
  auto it = tasks_.find(task);
  if (it == tasks_.end()) throw Error(ErrorCode::kUnknownTask, "task " + std::to_string(task));
  return it->second;
}

const TaskRef &ElasticExecutor::task(TaskId task) const {
  auto it = tasks_.find(task);
  if (it == tasks_.end()) throw Error(ErrorCode::kUnknownTask, "task " + std::to_string(task));
  return it->second.ref;
}

bool ElasticExecutor::retiring(TaskId task) const {
  auto it = tasks_.find(task);
  return it != tasks_.end() && it->second.retiring;
}

ElasticExecutor::Process &ElasticExecutor::process_for(NodeId node, double now,
                                                       std::vector<ProtocolEvent> *events) {
  auto it = processes_.find(node);
  if (it != processes_.end()) return it->second;
  Process &p = processes_[node];
  p.node = node;
  if (events != nullptr) {
    ProtocolEvent e{ProtocolEventKind::kProcessCreated, now, id_};
    e.peer = node;
    events->push_back(e);
  }
  return p;
}

TaskRef ElasticExecutor::add_task(CoreId core, double now) {
  for (const auto &[tid, t] : tasks_) {
    if (t.ref.core == core) {
      throw Error(ErrorCode::kCoreBusy, "core " + std::to_string(core.node) + ":" +
                                            std::to_string(core.slot) + " already hosts task " +
                                            std::to_string(tid));
    }
  }
  std::vector<ProtocolEvent> ignored;
  TaskRef ref{next_task_++, core.node, core.node == local_node_, core};
  Process &proc = process_for(core.node, now, &ignored);
  proc.tasks.insert(ref.id);
  tasks_[ref.id].ref = ref;
  if (tasks_.size() == 1) {
    // First task: it owns the whole key subspace.
    for (ShardId s = 0; s < table_.z; ++s) {
      table_.shard_task[s] = ref.id;
      proc.store.adopt(s);
    }
  }
  return ref;
}

int ElasticExecutor::active_task_count() const {
  int n = 0;
  for (const auto &[id, t] : tasks_) n += t.retiring ? 0 : 1;
  return n;
}

std::vector<TaskId> ElasticExecutor::active_task_ids() const {
  std::vector<TaskId> out;
  for (const auto &[id, t] : tasks_) {
    if (!t.retiring) out.push_back(id);
  }
  return out;
}

std::vector<TaskRef> ElasticExecutor::tasks() const {
  std::vector<TaskRef> out;
  for (const auto &[id, t] : tasks_) out.push_back(t.ref);
  return out;
}

std::vector<ProtocolEvent> ElasticExecutor::remove_task(TaskId task, double now) {
  return remove_tasks({task}, now);
}

std::vector<ProtocolEvent> ElasticExecutor::remove_tasks(const std::vector<TaskId> &tasks,
                                                         double now) {
  std::set<TaskId> leaving;
  for (TaskId task : tasks) {
    Task &t = task_mut(task);
    if (t.retiring || !leaving.insert(task).second) {
      throw Error(ErrorCode::kUnknownTask, "task already retiring");
    }
    for (const auto &[s, f] : in_flight_) {
      if (f.move.destination == task) {
        throw Error(ErrorCode::kShardInFlight, "shard " + std::to_string(s) + " is moving to the task");
      }
    }
  }
  if (active_task_count() - static_cast<int>(leaving.size()) < 1) {
    throw Error(ErrorCode::kLastTask, "executor needs one task");
  }
  for (TaskId task : leaving) task_mut(task).retiring = true;
  std::vector<TaskId> survivors = active_task_ids();
  std::vector<TaskId> mapping = table_.shard_task;
  for (const auto &[s, f] : in_flight_) mapping[s] = -1;  // already leaving
  std::vector<ShardMove> moves;
  for (TaskId task : leaving) {
    auto part = plan_evacuation(stats_.workload, mapping, task, survivors);
    for (const auto &m : part) mapping[m.shard] = m.destination;
    moves.insert(moves.end(), part.begin(), part.end());
  }
  return start_moves(std::move(moves), now);
}

std::vector<TaskRef> ElasticExecutor::reap(double now, std::vector<ProtocolEvent> *events) {
  std::vector<TaskRef> gone;
  for (auto it = tasks_.begin(); it != tasks_.end();) {
    Task &t = it->second;
    bool idle = t.retiring && t.pending.empty();
    if (idle) {
      for (ShardId s = 0; s < table_.z && idle; ++s) idle = table_.shard_task[s] != t.ref.id;
    }
    if (!idle) {
      ++it;
      continue;
    }
    gone.push_back(t.ref);
    if (events) {
      ProtocolEvent e{ProtocolEventKind::kTaskRemoved, now, id_};
      e.source = t.ref.id;
      events->push_back(e);
    }
    auto pit = processes_.find(t.ref.node);
    pit->second.tasks.erase(t.ref.id);
    if (!pit->second.main && pit->second.tasks.empty()) {
      if (pit->second.store.shard_count() != 0) {
        throw Error(ErrorCode::kNotOwner, "destroying a process that still holds state");
      }
      if (events) {
        ProtocolEvent e{ProtocolEventKind::kProcessDestroyed, now, id_};
        e.peer = pit->first;
        events->push_back(e);
      }
      processes_.erase(pit);
    }
    it = tasks_.erase(it);
  }
  return gone;
}

void ElasticExecutor::deliver(TaskId task, WorkItem item, NodeId from, double now) {
  Task &t = task_mut(task);
  std::uint64_t bytes = item.kind == WorkItem::Kind::kData ? item.tuple.payload_bytes : 0;
  item.ready_at = transfer(from, t.ref.node, bytes, now);
  // Senders on different nodes see different link delays; a key still may not
  // overtake its own earlier tuples.
  for (const WorkItem &w : t.pending) {
    if (w.shard == item.shard) item.ready_at = std::max(item.ready_at, w.ready_at);
  }
  auto pos = t.pending.end();
  while (pos != t.pending.begin() && std::prev(pos)->ready_at > item.ready_at) --pos;
  t.pending.insert(pos, std::move(item));
}

RouteResult ElasticExecutor::route(const Tuple &tuple, double now) {
  return route_from(tuple, now, local_node_);
}

RouteResult ElasticExecutor::route_from(const Tuple &tuple, double now, NodeId entry) {
  if (tasks_.empty()) throw Error(ErrorCode::kNoTasks, "executor " + std::to_string(id_));
  ShardId shard = shard_of(tuple.key);
  window_cpu_[shard] += tuple.cost;
  if (config_.dispatch == DispatchMode::kSharedQueue) {
    shared_.push_back({WorkItem::Kind::kData, tuple, shard, now});
    return {RouteResult::Outcome::kShared, -1};
  }
  if (table_.paused[shard]) {
    in_flight_.at(shard).held.push_back(tuple);
    return {RouteResult::Outcome::kBuffered, -1};
  }
  TaskId t = table_.shard_task[shard];
  deliver(t, {WorkItem::Kind::kData, tuple, shard, now}, entry, now);
  return {RouteResult::Outcome::kTask, t};
}

std::vector<ProtocolEvent> ElasticExecutor::start_moves(std::vector<ShardMove> moves, double now) {
  // A plan may move one shard more than once; only the net move is run.
  std::vector<ShardMove> net;
  for (const ShardMove &m : moves) {
    auto it = std::find_if(net.begin(), net.end(),
                           [&](const ShardMove &n) { return n.shard == m.shard; });
    if (it == net.end()) {
      net.push_back(m);
    } else {
      it->destination = m.destination;
    }
  }
  std::erase_if(net, [](const ShardMove &m) { return m.source == m.destination; });
  std::vector<ProtocolEvent> events;
  for (auto &m : net) {
    auto ev = begin_move(m, now);
    events.insert(events.end(), ev.begin(), ev.end());
  }
  return events;
}

std::vector<ProtocolEvent> ElasticExecutor::begin_move(ShardMove move, double now) {
  if (move.shard < 0 || move.shard >= table_.z) {
    throw Error(ErrorCode::kUnknownTask, "shard " + std::to_string(move.shard) + " out of range");
  }
  if (in_flight_.contains(move.shard)) {
    throw Error(ErrorCode::kShardInFlight, "shard " + std::to_string(move.shard));
  }
  Task &src = task_mut(move.source);
  Task &dst = task_mut(move.destination);
  if (table_.shard_task[move.shard] != move.source) {
    throw Error(ErrorCode::kUnknownTask, "task " + std::to_string(move.source) +
                                             " does not own shard " + std::to_string(move.shard));
  }
  if (move.source == move.destination || dst.retiring) {
    throw Error(ErrorCode::kUnknownTask, "invalid destination " + std::to_string(move.destination));
  }
  move.requires_migration = src.ref.node != dst.ref.node;

  std::vector<ProtocolEvent> events;
  ProtocolEvent pause{ProtocolEventKind::kPauseShard, now, id_, move.shard, move.source,
                      move.destination};
  events.push_back(pause);
  table_.paused[move.shard] = true;
  in_flight_[move.shard] = InFlight{move, {}, false};
  deliver(move.source, {WorkItem::Kind::kLabel, Tuple{}, move.shard, now}, local_node_, now);
  ProtocolEvent label = pause;
  label.kind = ProtocolEventKind::kLabelEnqueued;
  events.push_back(label);
  return events;
}

LabelOutcome ElasticExecutor::on_label(ShardId shard, double now,
                                       std::vector<ProtocolEvent> *events) {
  InFlight &f = in_flight_.at(shard);
  f.label_seen = true;
  LabelOutcome out{f.move, 0, now};
  ProtocolEvent e{ProtocolEventKind::kLabelDequeued, now, id_, shard, f.move.source,
                  f.move.destination};
  if (events) events->push_back(e);
  if (f.move.requires_migration) {
    out.bytes = stats_.state_bytes[shard];
    NodeId from = tasks_.at(f.move.source).ref.node;
    NodeId to = tasks_.at(f.move.destination).ref.node;
    out.done_at = transfer(from, to, out.bytes, now);
    migrated_bytes_ += out.bytes;
    e.kind = ProtocolEventKind::kMigrationStart;
    e.bytes = out.bytes;
    e.duration = out.done_at - now;
  } else {
    ++intra_moves_;
    e.kind = ProtocolEventKind::kMigrationSkipped;
  }
  if (events) events->push_back(e);
  return out;
}

std::vector<ProtocolEvent> ElasticExecutor::finish_move(ShardId shard, double now) {
  auto it = in_flight_.find(shard);
  if (it == in_flight_.end() || !it->second.label_seen) {
    throw Error(ErrorCode::kShardInFlight, "shard " + std::to_string(shard) + " not ready");
  }
  InFlight f = std::move(it->second);
  in_flight_.erase(it);
  std::vector<ProtocolEvent> events;
  ProtocolEvent e{ProtocolEventKind::kMigrationDone, now, id_, shard, f.move.source,
                  f.move.destination};
  NodeId from = tasks_.at(f.move.source).ref.node;
  NodeId to = tasks_.at(f.move.destination).ref.node;
  if (from != to) {
    auto state = processes_.at(from).store.release(shard);
    processes_.at(to).store.adopt(shard, std::move(state));
    e.bytes = stats_.state_bytes[shard];
    events.push_back(e);
  }
  table_.shard_task[shard] = f.move.destination;
  e.kind = ProtocolEventKind::kRoutingUpdated;
  e.bytes = 0;
  events.push_back(e);
  table_.paused[shard] = false;
  e.kind = ProtocolEventKind::kResumeShard;
  events.push_back(e);
  for (const Tuple &t : f.held) {
    deliver(f.move.destination, {WorkItem::Kind::kData, t, shard, now}, local_node_, now);
  }
  return events;
}

std::vector<ProtocolEvent> ElasticExecutor::execute_shard_move(
    ShardMove move, double now, const std::function<void(TaskId, const Tuple &)> &process) {
  auto events = begin_move(move, now);
  Task &src = task_mut(move.source);
  double clock = now;
  while (!src.pending.empty()) {
    WorkItem item = std::move(src.pending.front());
    src.pending.pop_front();
    clock = std::max(clock, item.ready_at);
    if (item.kind == WorkItem::Kind::kData) {
      if (process) process(move.source, item.tuple);
      continue;
    }
    LabelOutcome out = on_label(item.shard, clock, &events);
    auto done = finish_move(item.shard, out.done_at);
    events.insert(events.end(), done.begin(), done.end());
    if (item.shard == move.shard) break;
  }
  return events;
}

std::vector<ShardMove> ElasticExecutor::plan(double theta) const {
  auto active = active_task_ids();
  if (in_flight_.empty()) return plan_rebalance(stats_.workload, table_.shard_task, active, theta);
  std::vector<TaskId> mapping = table_.shard_task;
  std::vector<bool> pinned(mapping.size(), false);
  for (const auto &[s, f] : in_flight_) {
    mapping[s] = f.move.destination;
    pinned[s] = true;
  }
  return plan_rebalance(stats_.workload, mapping, active, theta, pinned);
}

std::vector<ProtocolEvent> ElasticExecutor::rebalance(double theta, double now) {
  return start_moves(plan(theta), now);
}

const WorkItem *ElasticExecutor::front(TaskId task) const {
  const Task &t = tasks_.at(task);
  if (!t.pending.empty()) return &t.pending.front();
  if (config_.dispatch == DispatchMode::kSharedQueue && !shared_.empty()) return &shared_.front();
  return nullptr;
}

WorkItem ElasticExecutor::pop_front(TaskId task) {
  Task &t = task_mut(task);
  WorkItem item;
  if (!t.pending.empty()) {
    item = std::move(t.pending.front());
    t.pending.pop_front();
  } else {
    item = std::move(shared_.front());
    shared_.pop_front();
  }
  return item;
}

const KeyState &ElasticExecutor::apply(TaskId task, const Tuple &tuple) {
  const Task &t = tasks_.at(task);
  ShardId shard = shard_of(tuple.key);
  return state_apply(processes_.at(t.ref.node).store, shard, tuple.key, tuple.seq);
}

void ElasticExecutor::roll_window() {
  const double a = config_.ewma_alpha;
  for (std::size_t s = 0; s < window_cpu_.size(); ++s) {
    stats_.workload[s] = a * window_cpu_[s] + (1.0 - a) * stats_.workload[s];
    window_cpu_[s] = 0.0;
  }
}

std::size_t ElasticExecutor::pending(TaskId task) const { return tasks_.at(task).pending.size(); }

std::size_t ElasticExecutor::queued_tuples() const {
  std::size_t n = shared_.size();
  for (const auto &[id, t] : tasks_) {
    for (const auto &item : t.pending) n += item.kind == WorkItem::Kind::kData ? 1 : 0;
  }
  return n;
}

std::size_t ElasticExecutor::buffered_tuples() const {
  std::size_t n = 0;
  for (const auto &[s, f] : in_flight_) n += f.held.size();
  return n;
}

LoadStats ElasticExecutor::load() const {
  LoadStats out;
  auto active = active_task_ids();
  out.task_workload.assign(active.size(), 0.0);
  for (ShardId s = 0; s < table_.z; ++s) {
    auto it = std::lower_bound(active.begin(), active.end(), table_.shard_task[s]);
    if (it != active.end() && *it == table_.shard_task[s]) {
      out.task_workload[it - active.begin()] += stats_.workload[s];
    }
  }
  return out;
}

std::uint64_t ElasticExecutor::state_bytes() const {
  return std::accumulate(stats_.state_bytes.begin(), stats_.state_bytes.end(), std::uint64_t{0});
}

std::set<NodeId> ElasticExecutor::process_nodes() const {
  std::set<NodeId> out;
  for (const auto &[n, p] : processes_) out.insert(n);
  return out;
}

bool ElasticExecutor::process_owns(NodeId node, ShardId shard) const {
  auto it = processes_.find(node);
  return it != processes_.end() && it->second.store.owns(shard);
}

const KeyState *ElasticExecutor::find_state(Key key) const {
  ShardId shard = shard_of(key);
  for (const auto &[n, p] : processes_) {
    if (const KeyState *ks = p.store.find(shard, key)) return ks;
  }
  return nullptr;
}

void ElasticExecutor::assign_shard(ShardId shard, TaskId task) { relocate(shard, task); }

std::uint64_t ElasticExecutor::relocate(ShardId shard, TaskId destination) {
  if (in_flight_.contains(shard)) throw Error(ErrorCode::kShardInFlight, std::to_string(shard));
  const Task &dst = task_mut(destination);
  TaskId src = table_.shard_task.at(shard);
  if (src == destination) return 0;
  NodeId from = tasks_.at(src).ref.node;
  std::uint64_t bytes = 0;
  if (from != dst.ref.node) {
    auto state = processes_.at(from).store.release(shard);
    processes_.at(dst.ref.node).store.adopt(shard, std::move(state));
    bytes = stats_.state_bytes[shard];
  }
  table_.shard_task[shard] = destination;
  return bytes;
}

std::uint64_t ElasticExecutor::reassign_quiesced(ShardId shard, TaskId destination) {
  if (table_.shard_task.at(shard) == destination) return 0;
  std::uint64_t bytes = relocate(shard, destination);
  if (bytes > 0) {
    migrated_bytes_ += bytes;
  } else {
    ++intra_moves_;
  }
  return bytes;
}

bool ElasticExecutor::is_move_destination(TaskId task) const {
  for (const auto &[s, f] : in_flight_) {
    if (f.move.destination == task) return true;
  }
  return false;
}

}  // namespace elastic
