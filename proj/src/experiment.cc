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
#include "elastic/experiment.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "elastic/errors.h"
#include "elastic/sweep_runner.h"

namespace elastic {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string &path, const std::string &what) {
  throw Error(ErrorCode::kConfigError, path + ": " + what);
}

void allow(const json &obj, const std::string &path, std::initializer_list<const char *> keys) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto &[k, v] : obj.items()) {
    bool known = std::any_of(keys.begin(), keys.end(), [&](const char *x) { return k == x; });
    if (!known) fail(path.empty() ? k : path + "." + k, "unknown field");
  }
}

template <typename T>
void read(const json &obj, const std::string &path, const char *key, T &out) {
  if (!obj.contains(key)) return;
  const json &v = obj.at(key);
  std::string where = path.empty() ? key : path + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) fail(where, "expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) fail(where, "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.get<long long>() < 0) fail(where, "must be >= 0");
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) fail(where, "expected a number");
  } else {
    if (!v.is_string()) fail(where, "expected a string");
  }
  out = v.get<T>();
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// Line and column of a byte offset, both 1-based.
std::pair<int, int> locate(const std::string &text, std::size_t offset) {
  int line = 1;
  int col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

void apply_sweep(SimConfig &sim, const std::string &parameter, double value) {
  auto as_int = [&](double v) {
    if (v != std::floor(v)) fail("sweep.values", parameter + " needs integer values");
    return static_cast<int>(v);
  };
  if (parameter == "omega") {
    sim.workload.shuffles_per_minute = value;
  } else if (parameter == "skew") {
    sim.workload.skew = value;
  } else if (parameter == "source_rate") {
    sim.topology.source_rate = value;
    sim.workload.source_rate = 0.0;
  } else if (parameter == "keys") {
    sim.workload.keys = as_int(value);
  } else if (parameter == "executors") {
    for (auto &op : sim.topology.operators) op.executors = as_int(value);
  } else if (parameter == "shards") {
    for (auto &op : sim.topology.operators) op.shards_per_executor = as_int(value);
  } else if (parameter == "payload_bytes") {
    sim.workload.payload_bytes = static_cast<std::uint64_t>(as_int(value));
  } else if (parameter == "tuple_bytes") {
    sim.workload.payload_bytes = static_cast<std::uint64_t>(as_int(value));
    for (auto &op : sim.topology.operators) op.output_tuple_bytes = sim.workload.payload_bytes;
  } else if (parameter == "state_bytes") {
    sim.shard_state_bytes = static_cast<std::uint64_t>(as_int(value));
  } else if (parameter == "upstream") {
    sim.workload.source_executors = as_int(value);
  } else if (parameter == "rc_sync_rtt") {
    sim.cost.rc_sync_rtt = value;
  } else if (parameter == "theta") {
    sim.theta = value;
  } else {
    fail("sweep.parameter", "unknown parameter '" + parameter + "'");
  }
}

}  // namespace

ExperimentConfig default_experiment() {
  ExperimentConfig c;
  c.base.topology = micro_benchmark_topology(8, kDefaultShardsPerExecutor, 1.0e-3, 96000.0);
  c.base.node_cores = std::vector<int>(8, 8);
  c.base.workload.keys = 10000;
  c.base.workload.skew = 0.5;
  c.base.workload.payload_bytes = 128;
  c.base.max_pending = 4000;
  c.base.scheduler.latency_target = 0.5e-3;
  c.base.keep_protocol_events = false;
  c.policies = {PolicyKind::kStatic, PolicyKind::kResourceCentric, PolicyKind::kExecutorCentric};
  c.seeds = {1};
  return c;
}

ExperimentConfig experiment_from_json(const json &doc) {
  allow(doc, "", {"name", "duration", "warmup", "policies", "seeds", "sweep", "topology",
                  "micro_benchmark", "exchange", "workload", "cluster", "scheduler", "cost",
                  "simulation", "output_dir"});
  ExperimentConfig c = default_experiment();
  read(doc, "", "name", c.name);
  read(doc, "", "duration", c.duration);
  read(doc, "", "warmup", c.warmup);
  read(doc, "", "output_dir", c.output_dir);
  if (!(c.duration > 0.0)) fail("duration", "must be > 0");
  if (c.warmup < 0.0 || c.warmup >= c.duration) fail("warmup", "must be in [0, duration)");

  if (doc.contains("policies")) {
    const json &p = doc["policies"];
    if (!p.is_array()) fail("policies", "expected an array");
    c.policies.clear();
    for (std::size_t i = 0; i < p.size(); ++i) {
      std::string where = "policies[" + std::to_string(i) + "]";
      if (!p[i].is_string()) fail(where, "expected a string");
      auto kind = parse_policy(p[i].get<std::string>());
      if (!kind) fail(where, "unknown policy '" + p[i].get<std::string>() + "'");
      c.policies.push_back(*kind);
    }
  }
  if (c.policies.empty()) fail("policies", "must not be empty");
  if (doc.contains("seeds")) {
    const json &s = doc["seeds"];
    if (!s.is_array()) fail("seeds", "expected an array");
    c.seeds.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_number_integer() || s[i].get<std::int64_t>() < 0) {
        fail("seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
      }
      c.seeds.push_back(s[i].get<std::uint64_t>());
    }
  }
  if (c.seeds.empty()) fail("seeds", "must not be empty");

  int topologies = doc.contains("topology") + doc.contains("micro_benchmark") + doc.contains("exchange");
  if (topologies > 1) fail("topology", "give only one of topology, micro_benchmark, exchange");
  if (doc.contains("topology")) {
    c.base.topology = topology_from_json(doc["topology"]);
  } else if (doc.contains("micro_benchmark")) {
    const json &m = doc["micro_benchmark"];
    allow(m, "micro_benchmark", {"executors", "shards", "cpu_cost", "source_rate"});
    int y = 8, z = kDefaultShardsPerExecutor;
    double cost = 1.0e-3, rate = 96000.0;
    read(m, "micro_benchmark", "executors", y);
    read(m, "micro_benchmark", "shards", z);
    read(m, "micro_benchmark", "cpu_cost", cost);
    read(m, "micro_benchmark", "source_rate", rate);
    c.base.topology = micro_benchmark_topology(y, z, cost, rate);
  } else if (doc.contains("exchange")) {
    const json &m = doc["exchange"];
    allow(m, "exchange", {"executors", "shards", "source_rate"});
    int y = 4, z = kDefaultShardsPerExecutor;
    double rate = 40000.0;
    read(m, "exchange", "executors", y);
    read(m, "exchange", "shards", z);
    read(m, "exchange", "source_rate", rate);
    c.base.topology = exchange_topology(y, z, rate);
  }

  if (doc.contains("workload")) {
    const json &w = doc["workload"];
    const std::string p = "workload";
    allow(w, p, {"keys", "skew", "source_rate", "payload_bytes", "shuffles_per_minute",
                 "shuffle_start", "source_executors", "rate_trace"});
    WorkloadConfig &wl = c.base.workload;
    read(w, p, "keys", wl.keys);
    read(w, p, "skew", wl.skew);
    read(w, p, "source_rate", wl.source_rate);
    read(w, p, "payload_bytes", wl.payload_bytes);
    read(w, p, "shuffles_per_minute", wl.shuffles_per_minute);
    read(w, p, "shuffle_start", wl.shuffle_start);
    read(w, p, "source_executors", wl.source_executors);
    std::string trace;
    read(w, p, "rate_trace", trace);
    if (!trace.empty()) wl.rate_trace = read_rate_trace(trace);
    if (wl.keys < 1) fail("workload.keys", "must be >= 1");
    if (wl.skew < 0.0) fail("workload.skew", "must be >= 0");
    if (wl.shuffles_per_minute < 0.0) fail("workload.shuffles_per_minute", "must be >= 0");
    if (wl.source_executors < 1) fail("workload.source_executors", "must be >= 1");
  }
  if (doc.contains("cluster")) {
    const json &cl = doc["cluster"];
    allow(cl, "cluster", {"nodes", "cores_per_node", "node_cores"});
    if (cl.contains("node_cores")) {
      if (cl.contains("nodes") || cl.contains("cores_per_node")) {
        fail("cluster", "node_cores excludes nodes/cores_per_node");
      }
      const json &nc = cl["node_cores"];
      if (!nc.is_array() || nc.empty()) fail("cluster.node_cores", "expected a non-empty array");
      c.base.node_cores.clear();
      for (const auto &v : nc) {
        if (!v.is_number_integer() || v.get<int>() < 1) {
          fail("cluster.node_cores", "entries must be integers >= 1");
        }
        c.base.node_cores.push_back(v.get<int>());
      }
    } else {
      int nodes = static_cast<int>(c.base.node_cores.size());
      int cores = c.base.node_cores.empty() ? 8 : c.base.node_cores.front();
      read(cl, "cluster", "nodes", nodes);
      read(cl, "cluster", "cores_per_node", cores);
      if (nodes < 1) fail("cluster.nodes", "must be >= 1");
      if (cores < 1) fail("cluster.cores_per_node", "must be >= 1");
      c.base.node_cores.assign(nodes, cores);
    }
  }
  if (doc.contains("scheduler")) {
    const json &s = doc["scheduler"];
    allow(s, "scheduler", {"latency_target", "phi_base", "period", "core_budget"});
    read(s, "scheduler", "latency_target", c.base.scheduler.latency_target);
    read(s, "scheduler", "phi_base", c.base.scheduler.phi_base);
    read(s, "scheduler", "period", c.base.scheduler.period);
    read(s, "scheduler", "core_budget", c.base.scheduler.core_budget);
    if (!(c.base.scheduler.period > 0.0)) fail("scheduler.period", "must be > 0");
    if (!(c.base.scheduler.phi_base > 0.0)) fail("scheduler.phi_base", "must be > 0");
  }
  if (doc.contains("cost")) {
    const json &s = doc["cost"];
    allow(s, "cost", {"latency", "bandwidth", "serialization_per_byte", "rc_sync_rtt"});
    read(s, "cost", "latency", c.base.cost.link.latency);
    read(s, "cost", "bandwidth", c.base.cost.link.bandwidth);
    read(s, "cost", "serialization_per_byte", c.base.cost.serialization_per_byte);
    read(s, "cost", "rc_sync_rtt", c.base.cost.rc_sync_rtt);
    if (c.base.cost.link.latency < 0.0) fail("cost.latency", "must be >= 0");
    if (!(c.base.cost.link.bandwidth > 0.0)) fail("cost.bandwidth", "must be > 0");
    if (c.base.cost.serialization_per_byte < 0.0) fail("cost.serialization_per_byte", "must be >= 0");
    if (c.base.cost.rc_sync_rtt < 0.0) fail("cost.rc_sync_rtt", "must be >= 0");
  }
  if (doc.contains("simulation")) {
    const json &s = doc["simulation"];
    const std::string p = "simulation";
    allow(s, p, {"theta", "shard_state_bytes", "window", "ewma_alpha", "bucket", "max_pending",
                 "service", "elastic"});
    SimConfig &b = c.base;
    read(s, p, "theta", b.theta);
    read(s, p, "shard_state_bytes", b.shard_state_bytes);
    read(s, p, "window", b.window);
    read(s, p, "ewma_alpha", b.ewma_alpha);
    read(s, p, "bucket", b.bucket);
    read(s, p, "max_pending", b.max_pending);
    read(s, p, "elastic", b.elastic);
    std::string service = "exponential";
    read(s, p, "service", service);
    if (service == "exponential") {
      b.service = ServiceModel::kExponential;
    } else if (service == "deterministic") {
      b.service = ServiceModel::kDeterministic;
    } else {
      fail("simulation.service", "expected exponential or deterministic");
    }
    if (!(b.theta >= 1.0)) fail("simulation.theta", "must be >= 1");
    if (!(b.window > 0.0)) fail("simulation.window", "must be > 0");
    if (!(b.bucket > 0.0)) fail("simulation.bucket", "must be > 0");
    if (!(b.ewma_alpha > 0.0 && b.ewma_alpha <= 1.0)) fail("simulation.ewma_alpha", "must be in (0, 1]");
  }
  if (doc.contains("sweep")) {
    const json &s = doc["sweep"];
    allow(s, "sweep", {"parameter", "values"});
    SweepAxis axis;
    read(s, "sweep", "parameter", axis.parameter);
    if (axis.parameter.empty()) fail("sweep.parameter", "required");
    if (!s.contains("values") || !s["values"].is_array() || s["values"].empty()) {
      fail("sweep.values", "expected a non-empty array");
    }
    for (const auto &v : s["values"]) {
      if (!v.is_number()) fail("sweep.values", "expected numbers");
      axis.values.push_back(v.get<double>());
    }
    SimConfig probe = c.base;
    for (double v : axis.values) apply_sweep(probe, axis.parameter, v);
    c.sweep = axis;
  }
  try {
    validate_topology(c.base.topology);
  } catch (const Error &e) {
    fail("topology", e.detail());
  }
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    auto [line, col] = locate(text, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(ErrorCode::kConfigError, path.string() + ":" + std::to_string(line) + ":" +
                                             std::to_string(col) + ": invalid JSON");
  }
  try {
    return experiment_from_json(doc);
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

json experiment_to_json(const ExperimentConfig &c) {
  json doc;
  doc["name"] = c.name;
  doc["duration"] = c.duration;
  doc["warmup"] = c.warmup;
  doc["output_dir"] = c.output_dir;
  doc["policies"] = json::array();
  for (PolicyKind p : c.policies) doc["policies"].push_back(std::string(policy_name(p)));
  doc["seeds"] = c.seeds;
  doc["topology"] = topology_to_json(c.base.topology);
  const WorkloadConfig &w = c.base.workload;
  doc["workload"] = {{"keys", w.keys},
                     {"skew", w.skew},
                     {"source_rate", w.source_rate},
                     {"payload_bytes", w.payload_bytes},
                     {"shuffles_per_minute", w.shuffles_per_minute},
                     {"shuffle_start", w.shuffle_start},
                     {"source_executors", w.source_executors}};
  doc["cluster"] = {{"node_cores", c.base.node_cores}};
  doc["scheduler"] = {{"latency_target", c.base.scheduler.latency_target},
                      {"phi_base", c.base.scheduler.phi_base},
                      {"period", c.base.scheduler.period},
                      {"core_budget", c.base.scheduler.core_budget}};
  doc["cost"] = {{"latency", c.base.cost.link.latency},
                 {"bandwidth", c.base.cost.link.bandwidth},
                 {"serialization_per_byte", c.base.cost.serialization_per_byte},
                 {"rc_sync_rtt", c.base.cost.rc_sync_rtt}};
  doc["simulation"] = {
      {"theta", c.base.theta},
      {"shard_state_bytes", c.base.shard_state_bytes},
      {"window", c.base.window},
      {"ewma_alpha", c.base.ewma_alpha},
      {"bucket", c.base.bucket},
      {"max_pending", c.base.max_pending},
      {"elastic", c.base.elastic},
      {"service", c.base.service == ServiceModel::kExponential ? "exponential" : "deterministic"}};
  if (c.sweep) doc["sweep"] = {{"parameter", c.sweep->parameter}, {"values", c.sweep->values}};
  return doc;
}

std::vector<ExperimentPoint> expand_points(const ExperimentConfig &config) {
  std::vector<std::optional<double>> values;
  if (config.sweep) {
    for (double v : config.sweep->values) values.push_back(v);
  } else {
    values.push_back(std::nullopt);
  }
  std::vector<ExperimentPoint> out;
  for (const auto &v : values) {
    for (PolicyKind p : config.policies) {
      for (std::uint64_t s : config.seeds) out.push_back({p, v, s});
    }
  }
  return out;
}

SimConfig point_config(const ExperimentConfig &config, const ExperimentPoint &point) {
  SimConfig sim = config.base;
  sim.policy = point.policy;
  sim.workload.seed = point.seed;
  if (config.sweep && point.sweep_value) apply_sweep(sim, config.sweep->parameter, *point.sweep_value);
  return sim;
}

SummaryRow summarize(const Trace &trace, double warmup) {
  SummaryRow row;
  row.policy = trace.policy;
  std::uint64_t completions = 0;
  double latency_sum = 0.0;
  double p99_sum = 0.0;
  int windows = 0;
  double first = -1.0;
  double last = warmup;
  for (const auto &w : trace.windows) {
    if (w.window_end <= warmup + 1e-9) continue;
    if (first < 0.0) first = w.window_end - (trace.windows.size() > 1 ? trace.windows[1].window_end - trace.windows[0].window_end : 1.0);
    last = w.window_end;
    completions += w.completions;
    latency_sum += w.mean_latency * static_cast<double>(w.completions);
    p99_sum += w.p99_latency;
    ++windows;
    row.migrated_bytes += w.migrated_bytes;
    row.sync_messages += w.sync_messages;
    row.remote_bytes += w.remote_bytes;
  }
  if (windows > 0) {
    row.throughput = static_cast<double>(completions) / (last - first);
    row.mean_latency = completions > 0 ? latency_sum / static_cast<double>(completions) : 0.0;
    row.p99_latency = p99_sum / windows;
  }
  return row;
}

std::string trace_file_name(const ExperimentConfig &config, const ExperimentPoint &point) {
  std::string sweep = "base";
  if (config.sweep && point.sweep_value) sweep = config.sweep->parameter + format_value(*point.sweep_value);
  return "trace_" + std::string(policy_name(point.policy)) + "_" + sweep + "_" +
         std::to_string(point.seed) + ".csv";
}

PointResult run_point(const ExperimentConfig &config, const ExperimentPoint &point) {
  Simulator sim(point_config(config, point));
  PointResult r;
  r.point = point;
  r.trace = sim.run_until(config.duration);
  r.summary = summarize(r.trace, config.warmup);
  r.summary.seed = point.seed;
  r.summary.sweep_value = point.sweep_value;
  if (config.sweep) r.summary.sweep_parameter = config.sweep->parameter;
  std::ostringstream csv;
  write_trace_csv(r.trace, csv);
  r.trace_csv = csv.str();
  std::string log;
  for (const auto &line : r.trace.decisions) log += line + "\n";
  r.decisions = std::move(log);
  return r;
}

void write_summary_csv(const std::vector<SummaryRow> &rows, std::ostream &out) {
  out << "policy,sweep_parameter,sweep_value,seed,throughput_tps,mean_latency_s,p99_latency_s,"
         "migrated_bytes,sync_messages,remote_transfer_bytes\n";
  char buf[512];
  for (const auto &r : rows) {
    std::string value = r.sweep_value ? format_value(*r.sweep_value) : "";
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%llu,%.3f,%.9f,%.9f,%llu,%llu,%llu\n",
                  std::string(policy_name(r.policy)).c_str(), r.sweep_parameter.c_str(),
                  value.c_str(), static_cast<unsigned long long>(r.seed), r.throughput,
                  r.mean_latency, r.p99_latency, static_cast<unsigned long long>(r.migrated_bytes),
                  static_cast<unsigned long long>(r.sync_messages),
                  static_cast<unsigned long long>(r.remote_bytes));
    out << buf;
  }
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingSeries, "no summary at " + path.string());
  std::vector<SummaryRow> rows;
  std::string line;
  std::getline(in, line);  // header
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    auto bad = [&] {
      return Error(ErrorCode::kConfigError, path.string() + ":" + std::to_string(lineno) + ": bad row");
    };
    if (cells.size() != 10) throw bad();
    SummaryRow r;
    auto policy = parse_policy(cells[0]);
    if (!policy) throw bad();
    try {
      r.policy = *policy;
      r.sweep_parameter = cells[1];
      if (!cells[2].empty()) r.sweep_value = std::stod(cells[2]);
      r.seed = std::stoull(cells[3]);
      r.throughput = std::stod(cells[4]);
      r.mean_latency = std::stod(cells[5]);
      r.p99_latency = std::stod(cells[6]);
      r.migrated_bytes = std::stoull(cells[7]);
      r.sync_messages = std::stoull(cells[8]);
      r.remote_bytes = std::stoull(cells[9]);
    } catch (const std::exception &) {
      throw bad();
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<PointResult> run_experiment(const ExperimentConfig &config, int jobs) {
  auto points = expand_points(config);
  std::vector<PointResult> results = jobs > 1 ? run_points_parallel(config, points, jobs)
                                              : run_points_serial(config, points);
  std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  std::vector<SummaryRow> rows;
  for (const auto &r : results) {
    std::string name = trace_file_name(config, r.point);
    std::ofstream(dir / name, std::ios::binary) << r.trace_csv;
    std::string log = "decisions" + name.substr(5, name.size() - 9) + ".log";
    std::ofstream(dir / log, std::ios::binary) << r.decisions;
    rows.push_back(r.summary);
  }
  std::ofstream summary(dir / "summary.csv", std::ios::binary);
  write_summary_csv(rows, summary);
  return results;
}

std::vector<double> instantaneous_throughput(const Trace &trace, double window) {
  const auto span = static_cast<std::size_t>(std::max(1LL, std::llround(window / trace.bucket)));
  const auto total = static_cast<std::size_t>(std::llround(trace.end_time / trace.bucket));
  std::vector<double> out(total, 0.0);
  std::uint64_t running = 0;
  for (std::size_t i = 0; i < total; ++i) {
    running += i < trace.buckets.size() ? trace.buckets[i] : 0;
    if (i >= span) running -= i - span < trace.buckets.size() ? trace.buckets[i - span] : 0;
    out[i] = static_cast<double>(running) / (static_cast<double>(std::min(i + 1, span)) * trace.bucket);
  }
  return out;
}

std::vector<TransientEpisode> transient_episodes(const Trace &trace, double threshold,
                                                 double baseline, double window) {
  std::vector<TransientEpisode> out;
  auto inst = instantaneous_throughput(trace, window);
  const double b = trace.bucket;
  const auto index = [&](double t) { return static_cast<std::size_t>(std::llround(t / b)); };
  for (std::size_t k = 0; k < trace.shuffle_times.size(); ++k) {
    double t = trace.shuffle_times[k];
    if (t < baseline + window || t + window > trace.end_time) continue;
    double end = k + 1 < trace.shuffle_times.size() ? trace.shuffle_times[k + 1] : trace.end_time;
    TransientEpisode ep;
    ep.shuffle_time = t;
    // Buckets whose sliding window lies entirely in [t - baseline, t).
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = index(t - baseline + window) - 1; i < index(t); ++i) {
      sum += inst[i];
      ++n;
    }
    ep.steady_throughput = n > 0 ? sum / static_cast<double>(n) : 0.0;
    for (std::size_t i = index(t); i < index(end) && i < inst.size(); ++i) {
      if (inst[i] < threshold * ep.steady_throughput) ep.below_seconds += b;
    }
    out.push_back(ep);
  }
  return out;
}

std::string compare_policies(const std::filesystem::path &results_dir) {
  auto rows = read_summary_csv(results_dir / "summary.csv");
  std::set<PolicyKind> policies;
  for (const auto &r : rows) policies.insert(r.policy);
  if (policies.size() < 2) {
    throw Error(ErrorCode::kMissingSeries, "need summary rows for at least two policies");
  }
  // Seed-averaged throughput and latency per (sweep value, policy).
  struct Cell {
    double throughput = 0.0;
    double latency = 0.0;
    int n = 0;
  };
  std::map<std::optional<double>, std::map<PolicyKind, Cell>> table;
  std::string parameter;
  for (const auto &r : rows) {
    Cell &c = table[r.sweep_value][r.policy];
    c.throughput += r.throughput;
    c.latency += r.mean_latency;
    c.n += 1;
    if (!r.sweep_parameter.empty()) parameter = r.sweep_parameter;
  }
  for (auto &[v, cells] : table) {
    for (auto &[p, c] : cells) {
      c.throughput /= c.n;
      c.latency /= c.n;
    }
  }

  auto ratio = [](double a, double b) -> std::string {
    if (!(b > 0.0)) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", a / b);
    return buf;
  };
  std::ostringstream md;
  md << "# Policy comparison\n\n";
  md << "| " << (parameter.empty() ? "point" : parameter) << " |";
  for (PolicyKind p : policies) md << " " << policy_name(p) << " tput (tuples/s) |";
  for (PolicyKind p : policies) md << " " << policy_name(p) << " latency (ms) |";
  const bool has_ec = policies.contains(PolicyKind::kExecutorCentric);
  std::vector<PolicyKind> others;
  for (PolicyKind p : policies) {
    if (p != PolicyKind::kExecutorCentric) others.push_back(p);
  }
  if (has_ec) {
    for (PolicyKind p : others) md << " ec/" << policy_name(p) << " tput | ec/" << policy_name(p) << " latency |";
  }
  md << "\n|---|";
  std::size_t cols = policies.size() * 2 + (has_ec ? others.size() * 2 : 0);
  for (std::size_t i = 0; i < cols; ++i) md << "---|";
  md << "\n";
  char buf[64];
  for (const auto &[v, cells] : table) {
    md << "| " << (v ? format_value(*v) : "base") << " |";
    for (PolicyKind p : policies) {
      auto it = cells.find(p);
      if (it == cells.end()) {
        md << " - |";
      } else {
        std::snprintf(buf, sizeof(buf), " %.0f |", it->second.throughput);
        md << buf;
      }
    }
    for (PolicyKind p : policies) {
      auto it = cells.find(p);
      if (it == cells.end()) {
        md << " - |";
      } else {
        std::snprintf(buf, sizeof(buf), " %.2f |", it->second.latency * 1e3);
        md << buf;
      }
    }
    if (has_ec) {
      for (PolicyKind p : others) {
        auto ec = cells.find(PolicyKind::kExecutorCentric);
        auto it = cells.find(p);
        if (ec == cells.end() || it == cells.end()) {
          md << " - | - |";
          continue;
        }
        md << " " << ratio(ec->second.throughput, it->second.throughput) << " | "
           << ratio(ec->second.latency, it->second.latency) << " |";
      }
    }
    md << "\n";
  }

  // Trend checks for an omega sweep that covers 0 and 16.
  if (parameter == "omega" && table.contains(0.0) && table.contains(16.0)) {
    md << "\n## Dynamics trend\n\n";
    auto tput = [&](double v, PolicyKind p) -> std::optional<double> {
      auto it = table[v].find(p);
      if (it == table[v].end()) return std::nullopt;
      return it->second.throughput;
    };
    auto check = [&](const std::string &what, bool ok) {
      md << "- " << what << ": " << (ok ? "PASS" : "FAIL") << "\n";
    };
    auto ec0 = tput(0.0, PolicyKind::kExecutorCentric);
    auto ec16 = tput(16.0, PolicyKind::kExecutorCentric);
    auto rc0 = tput(0.0, PolicyKind::kResourceCentric);
    auto rc16 = tput(16.0, PolicyKind::kResourceCentric);
    if (ec0 && ec16) check("ec throughput at omega=16 >= 70% of omega=0 (" + ratio(*ec16, *ec0) + ")", *ec16 >= 0.7 * *ec0);
    if (rc0 && rc16) check("rc throughput at omega=16 <= 50% of omega=0 (" + ratio(*rc16, *rc0) + ")", *rc16 <= 0.5 * *rc0);
    if (has_ec && policies.contains(PolicyKind::kStatic)) {
      bool ok = true;
      for (const auto &[v, cells] : table) {
        if (!v || *v < 1.0) continue;
        auto st = tput(*v, PolicyKind::kStatic);
        auto ec = tput(*v, PolicyKind::kExecutorCentric);
        if (st && ec) ok = ok && *st <= *ec;
      }
      check("static throughput <= ec throughput for every omega >= 1", ok);
    }
  }
  std::string text = md.str();
  std::ofstream(results_dir / "report.md", std::ios::binary) << text;
  return text;
}

}  // namespace elastic
