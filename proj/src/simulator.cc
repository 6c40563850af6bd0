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
#include "elastic/simulator.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "elastic/errors.h"

namespace elastic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint32_t kCopyRadix = 32;

std::uint64_t order_code(const Tuple &t) { return ((t.seq + 1) << 20) | (t.copy & 0xFFFFF); }

std::string join(const std::vector<int> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

std::string_view policy_name(PolicyKind policy) {
  switch (policy) {
    case PolicyKind::kStatic: return "static";
    case PolicyKind::kResourceCentric: return "rc";
    case PolicyKind::kExecutorCentric: return "ec";
  }
  return "unknown";
}

std::optional<PolicyKind> parse_policy(std::string_view name) {
  if (name == "static") return PolicyKind::kStatic;
  if (name == "rc" || name == "resource_centric") return PolicyKind::kResourceCentric;
  if (name == "ec" || name == "executor_centric") return PolicyKind::kExecutorCentric;
  return std::nullopt;
}

std::uint64_t Trace::order_violations() const {
  std::uint64_t n = 0;
  for (const auto &op : operators) n += op.order_violations;
  return n;
}

double Trace::throughput(double from, double to) const {
  if (!(to > from)) return 0.0;
  auto first = static_cast<std::size_t>(std::llround(from / bucket));
  auto last = static_cast<std::size_t>(std::llround(to / bucket));
  std::uint64_t n = 0;
  for (std::size_t b = first; b < last && b < buckets.size(); ++b) n += buckets[b];
  return static_cast<double>(n) / (to - from);
}

void write_trace_csv(const Trace &trace, std::ostream &out) {
  out << "window_end_s,policy,throughput_tps,mean_latency_s,p99_latency_s,migrated_bytes,"
         "sync_messages,remote_transfer_bytes\n";
  const std::string policy(policy_name(trace.policy));
  char buf[256];
  for (const auto &w : trace.windows) {
    std::snprintf(buf, sizeof(buf), "%.3f,%s,%.3f,%.9f,%.9f,%llu,%llu,%llu\n", w.window_end,
                  policy.c_str(), w.throughput, w.mean_latency, w.p99_latency,
                  static_cast<unsigned long long>(w.migrated_bytes),
                  static_cast<unsigned long long>(w.sync_messages),
                  static_cast<unsigned long long>(w.remote_bytes));
    out << buf;
  }
}

std::vector<int> demand_split(const Topology &topology, int cores) {
  const int ops = topology.operator_count();
  if (cores < ops) {
    throw Error(ErrorCode::kConfigError, "need at least one core per operator (" +
                                             std::to_string(ops) + " operators, " +
                                             std::to_string(cores) + " cores)");
  }
  std::vector<double> rate(ops, 0.0);
  for (OperatorId o : topology.topological_order()) {
    if (topology.upstream(o).empty()) rate[o] = 1.0;
    for (OperatorId u : topology.upstream(o)) rate[o] += rate[u] * topology.op(u).output_selectivity;
  }
  std::vector<double> demand(ops);
  for (int o = 0; o < ops; ++o) demand[o] = rate[o] * topology.op(o).cpu_cost_per_tuple;
  double total = std::accumulate(demand.begin(), demand.end(), 0.0);

  // One core each, the rest by largest remainder.
  std::vector<int> out(ops, 1);
  int spare = cores - ops;
  if (total <= 0.0 || spare == 0) return out;
  std::vector<double> share(ops);
  int given = 0;
  for (int o = 0; o < ops; ++o) {
    share[o] = spare * demand[o] / total;
    out[o] += static_cast<int>(std::floor(share[o]));
    given += static_cast<int>(std::floor(share[o]));
  }
  std::vector<int> order(ops);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return share[a] - std::floor(share[a]) > share[b] - std::floor(share[b]);
  });
  for (int i = 0; given < spare; ++i, ++given) out[order[i % ops]] += 1;
  return out;
}

Simulator::Simulator(SimConfig config)
    : config_(std::move(config)),
      topology_(validate_topology(config_.topology)),
      cluster_{config_.node_cores, config_.cost.link},
      workload_(config_.workload, config_.topology.source_rate),
      metrics_(0, config_.window, config_.ewma_alpha, config_.workload.seed ^ 0x7f4a7c15ULL),
      service_rng_(config_.workload.seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL) {
  if (cluster_.nodes() < 1) throw Error(ErrorCode::kConfigError, "cluster has no nodes");
  for (int c : cluster_.cores) {
    if (c < 1) throw Error(ErrorCode::kNonPositiveParameter, "every node needs >= 1 core");
  }
  if (!(config_.window > 0.0) || !(config_.bucket > 0.0)) {
    throw Error(ErrorCode::kNonPositiveParameter, "window and bucket must be > 0");
  }
  if (config_.workload.source_executors < 1) {
    throw Error(ErrorCode::kNonPositiveParameter, "source_executors must be >= 1");
  }
  trace_.policy = config_.policy;
  trace_.bucket = config_.bucket;
  trace_.operators.resize(topology_.operator_count());
  link_free_.assign(cluster_.nodes(), 0.0);
  in_transit_.assign(topology_.operator_count(), 0);
  rc_.resize(topology_.operator_count());
  key_seq_.assign(std::max(config_.workload.keys, 1), 0);
  last_order_.assign(topology_.operator_count(), std::vector<std::uint64_t>(key_seq_.size(), 0));
  slots_.resize(cluster_.nodes());
  for (int n = 0; n < cluster_.nodes(); ++n) slots_[n].resize(cluster_.cores[n]);
  build();
  place_initial();
  metrics_.resize(engine_count());
}

void Simulator::build() {
  const int ops = topology_.operator_count();
  const int nodes = cluster_.nodes();
  std::vector<int> per_op(ops);
  std::vector<int> shards(ops);
  for (int o = 0; o < ops; ++o) {
    const OperatorSpec &spec = topology_.op(o);
    shards[o] = spec.shards_per_executor;
    per_op[o] = spec.executors;
  }
  if (config_.policy == PolicyKind::kStatic) {
    per_op = demand_split(topology_, cluster_.total_cores());
  } else if (config_.policy == PolicyKind::kResourceCentric) {
    for (int o = 0; o < ops; ++o) {
      shards[o] = topology_.op(o).executors * topology_.op(o).shards_per_executor;
      per_op[o] = 1;
    }
  }
  first_engine_.assign(ops, 0);
  engine_count_ = per_op;
  int e = 0;
  for (int o = 0; o < ops; ++o) {
    first_engine_[o] = e;
    for (int i = 0; i < per_op[o]; ++i, ++e) {
      ExecutorConfig ec;
      ec.shards = shards[o];
      ec.shard_state_bytes = config_.shard_state_bytes;
      ec.link = config_.cost.link;
      ec.ewma_alpha = config_.ewma_alpha;
      ec.dispatch = config_.dispatch;
      engines_.push_back(Engine{o, ElasticExecutor(e, e % nodes, ec), {}});
    }
  }
  for (auto &eng : engines_) {
    eng.exec.set_transfer([this](NodeId from, NodeId to, std::uint64_t bytes, double at) {
      return link(from, to, bytes, at);
    });
  }
}

TaskRef Simulator::start_task(int e, NodeId node) {
  auto &row = slots_.at(node);
  int chosen = -1;
  for (int s = 0; s < static_cast<int>(row.size()) && chosen < 0; ++s) {
    if (row[s].engine < 0) chosen = s;
  }
  bool waits = false;
  if (chosen < 0) {
    for (int s = 0; s < static_cast<int>(row.size()) && chosen < 0; ++s) {
      const Slot &slot = row[s];
      if (slot.next_engine < 0 && slot.engine != e &&
          engines_[slot.engine].exec.retiring(slot.task)) {
        chosen = s;
      }
    }
    waits = true;
  }
  if (chosen < 0) {
    throw Error(ErrorCode::kInfeasibleAssignment, "no core available on node " + std::to_string(node));
  }
  TaskRef ref = engines_[e].exec.add_task(CoreId{node, chosen}, now_);
  TaskRun run;
  run.has_core = !waits;
  engines_[e].runs[ref.id] = run;
  if (waits) {
    row[chosen].next_engine = e;
    row[chosen].next_task = ref.id;
  } else {
    row[chosen].engine = e;
    row[chosen].task = ref.id;
  }
  return ref;
}

void Simulator::place_initial() {
  const int nodes = cluster_.nodes();
  std::vector<std::vector<TaskId>> created(engines_.size());
  if (config_.policy == PolicyKind::kExecutorCentric) {
    if (engine_count() > cluster_.total_cores()) {
      throw Error(ErrorCode::kConfigError, "more executors (" + std::to_string(engine_count()) +
                                               ") than cores (" +
                                               std::to_string(cluster_.total_cores()) + ")");
    }
    // Each node's cores go round-robin to the executors local to it.
    for (int n = 0; n < nodes; ++n) {
      std::vector<int> local;
      for (int e = 0; e < engine_count(); ++e) {
        if (engines_[e].exec.local_node() == n) local.push_back(e);
      }
      if (local.empty()) continue;
      int cores = std::max(cluster_.cores[n], static_cast<int>(local.size()));
      for (int i = 0; i < cores; ++i) {
        int e = local[i % local.size()];
        if (free_cores(n) > 0) {
          created[e].push_back(start_task(e, n).id);
        }
      }
    }
    for (int e = 0; e < engine_count(); ++e) {
      for (int n = 0; created[e].empty() && n < nodes; ++n) {
        if (free_cores(n) > 0) created[e].push_back(start_task(e, n).id);
      }
    }
  } else {
    // One core per static executor / resource-centric executor, spread over
    // nodes round-robin.
    std::vector<std::pair<NodeId, int>> order;
    int widest = *std::max_element(cluster_.cores.begin(), cluster_.cores.end());
    for (int s = 0; s < widest; ++s) {
      for (int n = 0; n < nodes; ++n) {
        if (s < cluster_.cores[n]) order.push_back({n, s});
      }
    }
    std::vector<int> wanted(engine_count(), 1);
    if (config_.policy == PolicyKind::kResourceCentric) {
      auto split = demand_split(topology_, cluster_.total_cores());
      for (int o = 0; o < topology_.operator_count(); ++o) wanted[first_engine_[o]] = split[o];
    }
    std::size_t next = 0;
    for (int e = 0; e < engine_count(); ++e) {
      for (int i = 0; i < wanted[e]; ++i) {
        if (next >= order.size()) throw Error(ErrorCode::kConfigError, "not enough cores");
        created[e].push_back(start_task(e, order[next++].first).id);
      }
    }
  }
  for (int e = 0; e < engine_count(); ++e) {
    const auto &ids = created[e];
    const int z = engines_[e].exec.routing().z;
    for (ShardId s = 0; s < z; ++s) engines_[e].exec.assign_shard(s, ids[s % ids.size()]);
  }
}

std::vector<int> Simulator::engines_of(OperatorId op) const {
  std::vector<int> out(engine_count_.at(op));
  std::iota(out.begin(), out.end(), first_engine_.at(op));
  return out;
}

AssignmentMatrix Simulator::assignment() const {
  std::vector<NodeId> local;
  for (const auto &eng : engines_) local.push_back(eng.exec.local_node());
  AssignmentMatrix x(cluster_.nodes(), engine_count(), local);
  for (int e = 0; e < engine_count(); ++e) {
    for (const TaskRef &t : engines_[e].exec.tasks()) {
      if (!engines_[e].exec.retiring(t.id)) x.at(t.node, e) += 1;
    }
  }
  return x;
}

int Simulator::free_cores(NodeId node) const {
  int n = 0;
  for (const Slot &s : slots_.at(node)) n += s.engine < 0 ? 1 : 0;
  return n;
}

int Simulator::engine_for(OperatorId op, Key key) const {
  int count = engine_count_[op];
  return first_engine_[op] + (count == 1 ? 0 : hash_key_to_executor(key, count));
}

const KeyState *Simulator::find_state(OperatorId op, Key key) const {
  return engines_.at(engine_for(op, key)).exec.find_state(key);
}

std::uint64_t Simulator::in_system(OperatorId op) const {
  std::uint64_t n = in_transit_.at(op) + rc_.at(op).held.size();
  for (int e : engines_of(op)) {
    const Engine &eng = engines_[e];
    n += eng.exec.queued_tuples() + eng.exec.buffered_tuples();
    for (const auto &[id, run] : eng.runs) n += run.busy ? 1 : 0;
  }
  return n;
}

double Simulator::link(NodeId from, NodeId to, std::uint64_t bytes, double at) {
  if (from == to) return at;
  double start = std::max(at, link_free_[from]);
  double finish = start + static_cast<double>(bytes) / config_.cost.link.bandwidth +
                  static_cast<double>(bytes) * config_.cost.serialization_per_byte;
  link_free_[from] = finish;
  remote_bytes_ += bytes;
  return finish + config_.cost.link.latency;
}

double Simulator::sample_cost(OperatorId op) {
  double mean = topology_.op(op).cpu_cost_per_tuple;
  if (config_.service == ServiceModel::kDeterministic) return mean;
  return service_rng_.exponential(1.0 / mean);
}

void Simulator::schedule(double time, EventKind kind, int engine, int aux) {
  Event e;
  e.time = time;
  e.kind = kind;
  e.engine = engine;
  e.aux = aux;
  push(std::move(e));
}

void Simulator::push(Event e) {
  e.seq = next_seq_++;
  queue_.push(std::move(e));
}

void Simulator::log(const std::vector<ProtocolEvent> &events) {
  if (!config_.keep_protocol_events) return;
  trace_.protocol.insert(trace_.protocol.end(), events.begin(), events.end());
}

const Trace &Simulator::run_until(double horizon) {
  if (!source_started_) {
    source_started_ = true;
    pending_arrival_ = workload_.next(0.0);
    schedule(0.0, EventKind::kArrival);
    schedule(config_.window, EventKind::kWindow);
    if (config_.workload.shuffles_per_minute > 0.0) {
      schedule(config_.workload.shuffle_start, EventKind::kShuffle);
    }
  }
  while (!queue_.empty() && queue_.top().time <= horizon) {
    Event e = queue_.top();
    queue_.pop();
    if (e.time < now_) throw Error(ErrorCode::kEventQueueCorruption, "event in the past");
    now_ = e.time;
    handle(e);
  }
  now_ = std::max(now_, horizon);
  trace_.end_time = now_;
  return trace_;
}

void Simulator::handle(Event &e) {
  switch (e.kind) {
    case EventKind::kArrival:
      on_arrival();
      break;
    case EventKind::kDeliver: {
      in_transit_[engines_[e.engine].op] -= 1;
      route(e.engine, e.tuple, e.aux);
      settle(e.engine);
      break;
    }
    case EventKind::kWake: {
      auto it = engines_[e.engine].runs.find(e.aux);
      if (it == engines_[e.engine].runs.end()) break;
      if (e.time >= it->second.wake_at) it->second.wake_at = kInf;
      kick(e.engine, e.aux);
      settle(e.engine);
      break;
    }
    case EventKind::kDone:
      on_done(e.engine, e.aux, e.tuple);
      break;
    case EventKind::kMigrated:
      finish(e.engine, e.aux);
      settle(e.engine);
      break;
    case EventKind::kWindow:
      on_window();
      break;
    case EventKind::kShuffle:
      workload_.shuffle();
      trace_.shuffle_times.push_back(now_);
      ++shuffles_done_;
      schedule(config_.workload.shuffle_start +
                   static_cast<double>(shuffles_done_) * 60.0 / config_.workload.shuffles_per_minute,
               EventKind::kShuffle);
      break;
    case EventKind::kRcPhase:
      rc_step(e.aux);
      break;
  }
}

bool Simulator::source_blocked() const {
  if (config_.max_pending > 0 && roots_.size() >= config_.max_pending) return true;
  for (OperatorId o : topology_.roots()) {
    if (rc_[o].paused) return true;
  }
  return false;
}

void Simulator::unblock_source() {
  if (!source_waiting_ || source_blocked()) return;
  source_waiting_ = false;
  schedule(now_, EventKind::kArrival);
}

void Simulator::on_arrival() {
  if (now_ >= config_.source_stop) return;
  if (source_blocked()) {
    source_waiting_ = true;
    return;
  }
  double rate = workload_.rate_at(now_);
  if (!(rate > 0.0)) {
    // Idle period of a rate trace: poll once per window.
    schedule(now_ + config_.window, EventKind::kArrival);
    return;
  }
  emit(pending_arrival_.key);
  pending_arrival_ = workload_.next(now_);
  schedule(now_ + pending_arrival_.gap, EventKind::kArrival);
}

void Simulator::emit(Key key) {
  if (key >= key_seq_.size()) {
    key_seq_.resize(key + 1, 0);
    for (auto &v : last_order_) v.resize(key + 1, 0);
  }
  Tuple t;
  t.key = key;
  t.payload_bytes = config_.workload.payload_bytes;
  t.created_at = now_;
  t.root_id = next_root_++;
  t.seq = key_seq_[key]++;
  const auto roots = topology_.roots();
  roots_[t.root_id] = static_cast<int>(roots.size());
  ++trace_.emitted;
  if (config_.keep_emissions) trace_.emissions.push_back(key);
  metrics_.record({MetricEvent::Kind::kSourceEmit, -1, 0.0});
  const int spout = static_cast<int>(key % config_.workload.source_executors);
  const NodeId node = spout % cluster_.nodes();
  for (OperatorId o : roots) send(o, t, node, node);
}

void Simulator::send(OperatorId op, Tuple tuple, NodeId from, NodeId emitter) {
  tuple.cost = sample_cost(op);
  trace_.operators[op].delivered += 1;
  const int e = engine_for(op, tuple.key);
  if (config_.policy == PolicyKind::kExecutorCentric) {
    // Task -> its executor's emitter -> the receiver on the target's local node.
    NodeId receiver = engines_[e].exec.local_node();
    double t1 = link(from, emitter, tuple.payload_bytes, now_);
    double t2 = link(emitter, receiver, tuple.payload_bytes, t1);
    if (t2 <= now_) {
      route(e, tuple, receiver);
      return;
    }
    in_transit_[op] += 1;
    Event ev;
    ev.time = t2;
    ev.kind = EventKind::kDeliver;
    ev.engine = e;
    ev.aux = receiver;
    ev.tuple = tuple;
    push(std::move(ev));
    return;
  }
  if (rc_[op].paused) {
    rc_[op].held.push_back({tuple, from});
    return;
  }
  route(e, tuple, from);
}

void Simulator::route(int e, const Tuple &tuple, NodeId entry) {
  Engine &eng = engines_[e];
  metrics_.record({MetricEvent::Kind::kArrival, e, static_cast<double>(tuple.payload_bytes)});
  RouteResult r = eng.exec.route_from(tuple, now_, entry);
  if (r.outcome == RouteResult::Outcome::kTask) {
    kick(e, r.task);
  } else if (r.outcome == RouteResult::Outcome::kShared) {
    kick_all(e);
  }
}

void Simulator::kick_all(int e) {
  std::vector<TaskId> ids;
  for (const auto &[id, run] : engines_[e].runs) ids.push_back(id);
  for (TaskId id : ids) kick(e, id);
}

void Simulator::kick(int e, TaskId task) {
  Engine &eng = engines_[e];
  auto it = eng.runs.find(task);
  if (it == eng.runs.end()) return;
  TaskRun &run = it->second;
  while (!run.busy && run.has_core) {
    const WorkItem *w = eng.exec.front(task);
    if (w == nullptr) break;
    if (w->ready_at > now_) {
      if (w->ready_at < run.wake_at) {
        run.wake_at = w->ready_at;
        schedule(w->ready_at, EventKind::kWake, e, task);
      }
      break;
    }
    WorkItem item = eng.exec.pop_front(task);
    if (item.kind == WorkItem::Kind::kData) {
      run.busy = true;
      Event done;
      done.time = now_ + item.tuple.cost;
      done.kind = EventKind::kDone;
      done.engine = e;
      done.aux = task;
      done.tuple = item.tuple;
      push(std::move(done));
      break;
    }
    std::vector<ProtocolEvent> events;
    LabelOutcome out = eng.exec.on_label(item.shard, now_, &events);
    log(events);
    NodeId src = eng.exec.task(out.move.source).node;
    NodeId dst = eng.exec.task(out.move.destination).node;
    if (src == dst) {
      ++trace_.intra_process_moves;
      trace_.intra_process_migrated_bytes += out.bytes;
    } else {
      ++trace_.inter_process_moves;
    }
    if (out.bytes > 0) {
      trace_.migrated_bytes += out.bytes;
      remote_bytes_ -= std::min(remote_bytes_, out.bytes);
      metrics_.record({MetricEvent::Kind::kMigration, e, static_cast<double>(out.bytes)});
      schedule(out.done_at, EventKind::kMigrated, e, item.shard);
    } else {
      finish(e, item.shard);
    }
  }
}

void Simulator::finish(int e, ShardId shard) {
  Engine &eng = engines_[e];
  log(eng.exec.finish_move(shard, now_));
  TaskId dst = eng.exec.routing().shard_task[shard];
  kick(e, dst);
}

void Simulator::settle(int e) {
  Engine &eng = engines_[e];
  if (eng.exec.task_count() == eng.exec.active_task_count()) return;
  std::vector<ProtocolEvent> events;
  auto gone = eng.exec.reap(now_, &events);
  log(events);
  for (const TaskRef &t : gone) {
    eng.runs.erase(t.id);
    Slot &slot = slots_[t.core.node][t.core.slot];
    slot.engine = slot.next_engine;
    slot.task = slot.next_task;
    slot.next_engine = -1;
    slot.next_task = -1;
    if (slot.engine >= 0) {
      engines_[slot.engine].runs.at(slot.task).has_core = true;
      kick(slot.engine, slot.task);
    }
  }
}

void Simulator::on_done(int e, TaskId task, const Tuple &tuple) {
  Engine &eng = engines_[e];
  TaskRun &run = eng.runs.at(task);
  run.busy = false;
  const OperatorId op = eng.op;
  const OperatorSpec &spec = topology_.op(op);
  eng.exec.apply(task, tuple);
  metrics_.record({MetricEvent::Kind::kProcessed, e, tuple.cost});

  OperatorCounters &counters = trace_.operators[op];
  counters.processed += 1;
  if (topology_.upstream(op).size() <= 1 && config_.dispatch == DispatchMode::kShardRouted) {
    std::uint64_t code = order_code(tuple);
    std::uint64_t &last = last_order_[op][tuple.key];
    if (code <= last) {
      counters.order_violations += 1;
    } else {
      last = code;
    }
  }

  const NodeId node = eng.exec.task(task).node;
  const NodeId emitter = eng.exec.local_node();
  int outputs = 0;
  for (OperatorId d : topology_.downstream(op)) {
    double sel = spec.output_selectivity;
    int copies = static_cast<int>(std::floor(sel));
    if (service_rng_.uniform() < sel - copies) ++copies;
    for (int c = 0; c < copies; ++c) {
      Tuple out = tuple;
      out.payload_bytes = spec.output_tuple_bytes;
      out.copy = tuple.copy * kCopyRadix + static_cast<std::uint32_t>(c);
      metrics_.record({MetricEvent::Kind::kOutput, e, static_cast<double>(out.payload_bytes)});
      ++outputs;
      roots_[tuple.root_id] += 1;
      send(d, out, node, emitter);
    }
  }
  auto it = roots_.find(tuple.root_id);
  if (--it->second == 0) {
    roots_.erase(it);
    complete(tuple.root_id, tuple.created_at);
  }
  (void)outputs;
  kick(e, task);
  settle(e);
  if (rc_[op].phase == RcPhase::kDraining) rc_check_drain(op);
}

void Simulator::complete(std::uint64_t, double created_at) {
  double latency = now_ - created_at;
  ++trace_.completed;
  metrics_.record({MetricEvent::Kind::kCompletion, -1, latency});
  if (config_.keep_latencies) trace_.latencies.push_back(latency);
  auto b = static_cast<std::size_t>(now_ / config_.bucket);
  if (b >= trace_.buckets.size()) trace_.buckets.resize(b + 1, 0);
  trace_.buckets[b] += 1;
  unblock_source();
}

void Simulator::on_window() {
  ++window_index_;
  if (remote_bytes_ > 0) {
    metrics_.record({MetricEvent::Kind::kRemoteBytes, -1, static_cast<double>(remote_bytes_)});
    remote_bytes_ = 0;
  }
  std::vector<int> cores;
  std::vector<double> state;
  for (const auto &eng : engines_) {
    cores.push_back(eng.exec.active_task_count());
    state.push_back(static_cast<double>(eng.exec.state_bytes()));
  }
  MetricsSnapshot snap = metrics_.snapshot(cores, state);
  trace_.windows.push_back(metrics_.close(now_));
  for (auto &eng : engines_) eng.exec.roll_window();

  auto period = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::llround(config_.scheduler.period / config_.window)));
  if (config_.elastic && config_.policy != PolicyKind::kStatic && window_index_ % period == 0) {
    policy_tick(snap);
  }
  schedule(now_ + config_.window, EventKind::kWindow);
}

void Simulator::policy_tick(const MetricsSnapshot &snap) {
  ++trace_.scheduler_ticks;
  if (config_.policy == PolicyKind::kExecutorCentric) {
    ec_tick(snap);
  } else if (config_.policy == PolicyKind::kResourceCentric) {
    rc_tick(snap);
  }
}

void Simulator::ec_tick(const MetricsSnapshot &snap) {
  std::ostringstream line;
  line.setf(std::ios::fixed);
  line.precision(3);
  line << "t=" << now_ << " policy=ec";
  std::vector<bool> fed(engines_.size(), false);
  bool quiet = snap.source_rate > 0.0;
  for (const auto &eng : engines_) {
    quiet = quiet && !eng.exec.moves_in_flight() &&
            eng.exec.task_count() == eng.exec.active_task_count();
  }
  if (!quiet) {
    ++trace_.deferred_ticks;
    line << " deferred=1";
  } else {
    AllocationResult alloc = allocate(snap, config_.scheduler, cluster_.total_cores());
    AssignmentMatrix current = assignment();
    line << " k=[" << join(alloc.k) << "] overload=" << alloc.overload;
    try {
      AdaptiveAssignment next =
          assign_adaptive(alloc.k, current, cluster_, config_.scheduler.phi_base, snap);
      std::vector<double> state;
      for (const auto &m : snap.executors) state.push_back(m.state_bytes);
      line << " phi=" << next.phi << " iterations=" << next.iterations
           << " cost=" << transition_cost(current, next.x, state);
      for (int e = 0; e < engine_count(); ++e) {
        for (int n = 0; n < cluster_.nodes(); ++n) {
          if (next.x.at(n, e) > current.at(n, e)) fed[e] = true;
        }
      }
      auto events = apply_assignment(next.x);
      line << " protocol_events=" << events.size();
    } catch (const Error &err) {
      if (err.code() != ErrorCode::kInfeasibleAssignment) throw;
      line << " infeasible=1";
    }
  }
  std::size_t moves = 0;
  for (int e = 0; e < engine_count(); ++e) {
    if (fed[e]) continue;
    auto events = engines_[e].exec.rebalance(config_.theta, now_);
    for (const auto &ev : events) moves += ev.kind == ProtocolEventKind::kPauseShard ? 1 : 0;
    log(events);
    kick_all(e);
  }
  line << " rebalance_moves=" << moves;
  trace_.decisions.push_back(line.str());
}

std::vector<ProtocolEvent> Simulator::apply_assignment(const AssignmentMatrix &x) {
  if (config_.policy != PolicyKind::kExecutorCentric) {
    throw Error(ErrorCode::kWrongPolicy, "apply_assignment needs the executor-centric policy");
  }
  if (x.nodes() != cluster_.nodes() || x.executors() != engine_count()) {
    throw Error(ErrorCode::kInfeasibleAssignment, "assignment has the wrong shape");
  }
  for (int n = 0; n < x.nodes(); ++n) {
    if (x.row_sum(n) > cluster_.cores[n]) {
      throw Error(ErrorCode::kInfeasibleAssignment, "node " + std::to_string(n) + " oversubscribed");
    }
    for (int e = 0; e < x.executors(); ++e) {
      if (x.at(n, e) < 0) throw Error(ErrorCode::kInfeasibleAssignment, "negative cell");
    }
  }
  for (int e = 0; e < x.executors(); ++e) {
    if (x.column_sum(e) < 1) {
      throw Error(ErrorCode::kInfeasibleAssignment, "executor " + std::to_string(e) + " has no core");
    }
  }
  for (const auto &eng : engines_) {
    if (eng.exec.moves_in_flight() || eng.exec.task_count() != eng.exec.active_task_count()) {
      ++trace_.deferred_ticks;
      return {};
    }
  }

  const AssignmentMatrix current = assignment();
  std::vector<ProtocolEvent> events;
  std::vector<bool> fed(engines_.size(), false);
  // Releases first so their cores can be handed over.
  std::vector<std::vector<TaskId>> leaving(engines_.size());
  for (int e = 0; e < engine_count(); ++e) {
    for (int n = 0; n < cluster_.nodes(); ++n) {
      int surplus = current.at(n, e) - x.at(n, e);
      if (surplus <= 0) continue;
      std::vector<TaskId> candidates;
      for (const TaskRef &t : engines_[e].exec.tasks()) {
        if (t.node == n && !engines_[e].exec.retiring(t.id)) candidates.push_back(t.id);
      }
      std::sort(candidates.rbegin(), candidates.rend());
      leaving[e].insert(leaving[e].end(), candidates.begin(), candidates.begin() + surplus);
    }
  }
  for (int e = 0; e < engine_count(); ++e) {
    if (leaving[e].empty()) continue;
    auto ev = engines_[e].exec.remove_tasks(leaving[e], now_);
    events.insert(events.end(), ev.begin(), ev.end());
  }
  for (int e = 0; e < engine_count(); ++e) {
    for (int n = 0; n < cluster_.nodes(); ++n) {
      int deficit = x.at(n, e) - current.at(n, e);
      for (int i = 0; i < deficit; ++i) {
        TaskRef ref = start_task(e, n);
        ProtocolEvent add{ProtocolEventKind::kTaskAdded, now_, e};
        add.destination = ref.id;
        add.peer = n;
        events.push_back(add);
        fed[e] = true;
      }
    }
  }
  // A new task gets shards by balancing to the local minimum.
  for (int e = 0; e < engine_count(); ++e) {
    if (fed[e]) {
      auto ev = engines_[e].exec.rebalance(1.0, now_);
      events.insert(events.end(), ev.begin(), ev.end());
    }
  }
  log(events);
  for (int e = 0; e < engine_count(); ++e) {
    kick_all(e);
    settle(e);
  }
  return events;
}

int Simulator::upstream_executors(OperatorId op) const {
  const auto &ups = topology_.upstream(op);
  if (ups.empty()) return config_.workload.source_executors;
  int n = 0;
  for (OperatorId u : ups) {
    for (int e : engines_of(u)) n += engines_[e].exec.active_task_count();
  }
  return n;
}

bool Simulator::repartition_active(OperatorId op) const {
  return rc_.at(op).phase != RcPhase::kIdle;
}

std::vector<ProtocolEvent> Simulator::rc_repartition(OperatorId op,
                                                     const std::vector<ShardMove> &moves,
                                                     const std::vector<TaskId> &retire) {
  if (config_.policy != PolicyKind::kResourceCentric) {
    throw Error(ErrorCode::kWrongPolicy, "rc_repartition needs the resource-centric policy");
  }
  RcState &rc = rc_.at(op);
  if (rc.phase != RcPhase::kIdle) {
    throw Error(ErrorCode::kShardInFlight, "operator " + std::to_string(op) + " is repartitioning");
  }
  const int e = first_engine_[op];
  rc.phase = RcPhase::kPausing;
  rc.paused = true;
  rc.moves = moves;
  rc.retire = retire;
  rc.upstream = upstream_executors(op);
  const double rtt = config_.cost.rc_sync_rtt;
  std::vector<ProtocolEvent> events;
  for (int i = 0; i < rc.upstream; ++i) {
    ProtocolEvent ev{ProtocolEventKind::kPauseUpstream, now_ + (i + 1) * rtt, e};
    ev.duration = rtt;
    ev.peer = i;
    events.push_back(ev);
  }
  trace_.sync_messages += rc.upstream;
  metrics_.record({MetricEvent::Kind::kSync, e, static_cast<double>(rc.upstream)});
  log(events);
  schedule(now_ + rc.upstream * rtt, EventKind::kRcPhase, e, op);
  return events;
}

void Simulator::rc_step(OperatorId op) {
  RcState &rc = rc_[op];
  const int e = first_engine_[op];
  const double rtt = config_.cost.rc_sync_rtt;
  switch (rc.phase) {
    case RcPhase::kPausing:
      rc.phase = RcPhase::kDraining;
      rc.drain_start = now_;
      rc_check_drain(op);
      break;
    case RcPhase::kMigrating: {
      rc.phase = RcPhase::kUpdating;
      std::vector<ProtocolEvent> events;
      for (int i = 0; i < rc.upstream; ++i) {
        ProtocolEvent ev{ProtocolEventKind::kRoutingUpdateUpstream, now_ + (i + 1) * rtt, e};
        ev.duration = rtt;
        ev.peer = i;
        events.push_back(ev);
      }
      trace_.sync_messages += rc.upstream;
      metrics_.record({MetricEvent::Kind::kSync, e, static_cast<double>(rc.upstream)});
      log(events);
      schedule(now_ + rc.upstream * rtt, EventKind::kRcPhase, e, op);
      break;
    }
    case RcPhase::kUpdating: {
      rc.phase = RcPhase::kIdle;
      rc.paused = false;
      ++trace_.repartitions;
      auto held = std::move(rc.held);
      rc.held.clear();
      for (const Held &h : held) route(e, h.tuple, h.from);
      Engine &eng = engines_[e];
      for (TaskId t : rc.retire) {
        if (eng.exec.has_task(t) && !eng.exec.retiring(t) && eng.exec.active_task_count() > 1) {
          log(eng.exec.remove_task(t, now_));
        }
      }
      rc.retire.clear();
      rc.moves.clear();
      settle(e);
      unblock_source();
      break;
    }
    default:
      break;
  }
}

void Simulator::rc_check_drain(OperatorId op) {
  RcState &rc = rc_[op];
  const int e = first_engine_[op];
  Engine &eng = engines_[e];
  if (eng.exec.queued_tuples() > 0 || in_transit_[op] > 0) return;
  for (const auto &[id, run] : eng.runs) {
    if (run.busy) return;
  }
  ProtocolEvent barrier{ProtocolEventKind::kDrainBarrier, now_, e};
  barrier.duration = now_ - rc.drain_start;
  std::vector<ProtocolEvent> events{barrier};
  double done = now_;
  for (const ShardMove &m : rc.moves) {
    NodeId from = eng.exec.task(m.source).node;
    NodeId to = eng.exec.task(m.destination).node;
    if (eng.exec.routing().shard_task[m.shard] != m.source) continue;
    std::uint64_t bytes = eng.exec.reassign_quiesced(m.shard, m.destination);
    ProtocolEvent ev{ProtocolEventKind::kMigrationDone, now_, e, m.shard, m.source, m.destination};
    ev.bytes = bytes;
    if (bytes > 0) {
      double arrive = link(from, to, bytes, now_);
      remote_bytes_ -= std::min(remote_bytes_, bytes);
      ev.duration = arrive - now_;
      ev.time = arrive;
      done = std::max(done, arrive);
      trace_.migrated_bytes += bytes;
      ++trace_.inter_process_moves;
      metrics_.record({MetricEvent::Kind::kMigration, e, static_cast<double>(bytes)});
    } else {
      ++trace_.intra_process_moves;
    }
    events.push_back(ev);
  }
  log(events);
  rc.phase = RcPhase::kMigrating;
  schedule(done, EventKind::kRcPhase, e, op);
}

void Simulator::rc_tick(const MetricsSnapshot &snap) {
  std::ostringstream line;
  line.setf(std::ios::fixed);
  line.precision(3);
  line << "t=" << now_ << " policy=rc";
  if (!(snap.source_rate > 0.0)) {
    trace_.decisions.push_back(line.str() + " idle=1");
    return;
  }
  AllocationResult alloc = allocate(snap, config_.scheduler, cluster_.total_cores());
  line << " k=[" << join(alloc.k) << "] overload=" << alloc.overload;
  for (OperatorId op = 0; op < topology_.operator_count(); ++op) {
    if (rc_[op].phase != RcPhase::kIdle) continue;
    const int e = first_engine_[op];
    Engine &eng = engines_[e];
    std::vector<TaskId> active = eng.exec.active_task_ids();
    const int have = static_cast<int>(active.size());
    const int want = alloc.k[e];
    std::vector<TaskId> retire;
    bool added = false;
    if (want < have) {
      retire.assign(active.end() - (have - want), active.end());
    } else {
      for (int i = have; i < want; ++i) {
        NodeId best = -1;
        for (NodeId n = 0; n < cluster_.nodes(); ++n) {
          if (free_cores(n) > 0 && (best < 0 || free_cores(n) > free_cores(best))) best = n;
        }
        if (best < 0) break;
        TaskRef ref = start_task(e, best);
        ProtocolEvent ev{ProtocolEventKind::kTaskAdded, now_, e};
        ev.destination = ref.id;
        ev.peer = best;
        log({ev});
        added = true;
      }
    }
    std::vector<TaskId> survivors = eng.exec.active_task_ids();
    std::erase_if(survivors, [&](TaskId t) {
      return std::find(retire.begin(), retire.end(), t) != retire.end();
    });
    const auto &load = eng.exec.shard_stats().workload;
    std::vector<TaskId> mapping = eng.exec.routing().shard_task;
    for (TaskId t : retire) {
      for (const ShardMove &m : plan_evacuation(load, mapping, t, survivors)) {
        mapping[m.shard] = m.destination;
      }
    }
    double theta = added ? 1.0 : config_.theta;
    for (const ShardMove &m : plan_rebalance(load, mapping, survivors, theta)) {
      mapping[m.shard] = m.destination;
    }
    std::vector<ShardMove> moves;
    const auto &before = eng.exec.routing().shard_task;
    for (ShardId s = 0; s < static_cast<ShardId>(mapping.size()); ++s) {
      if (mapping[s] != before[s]) moves.push_back({s, before[s], mapping[s], false});
    }
    if (moves.empty() && retire.empty()) continue;
    line << " op" << op << "_moves=" << moves.size() << " op" << op << "_retire=" << retire.size();
    rc_repartition(op, moves, retire);
  }
  trace_.decisions.push_back(line.str());
}

std::vector<ProtocolEvent> Simulator::request_move(int e, ShardMove move) {
  auto events = engines_.at(e).exec.begin_move(move, now_);
  log(events);
  kick_all(e);
  settle(e);
  return events;
}

std::optional<TaskRef> Simulator::request_add_task(int e, NodeId node) {
  if (free_cores(node) == 0) return std::nullopt;
  TaskRef ref = start_task(e, node);
  ProtocolEvent ev{ProtocolEventKind::kTaskAdded, now_, e};
  ev.destination = ref.id;
  ev.peer = node;
  log({ev});
  return ref;
}

std::vector<ProtocolEvent> Simulator::request_remove_task(int e, TaskId task) {
  auto events = engines_.at(e).exec.remove_task(task, now_);
  log(events);
  kick_all(e);
  settle(e);
  return events;
}

std::vector<ProtocolEvent> Simulator::request_rebalance(int e, double theta) {
  auto events = engines_.at(e).exec.rebalance(theta, now_);
  log(events);
  kick_all(e);
  settle(e);
  return events;
}

}  // namespace elastic
