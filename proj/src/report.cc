/*
 * Copyright 2026 The htsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "htsim/report.hh"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

namespace htsim::report {

namespace {

std::uint64_t asCount(const nlohmann::json& v, const std::string& key, std::uint64_t min, std::uint64_t max) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError("config: '" + key + "' must be a non-negative integer");
  auto n = v.get<std::uint64_t>();
  if (n < min || n > max)
    throw ConfigError("config: '" + key + "' must be in [" + std::to_string(min) + ", " + std::to_string(max) + "]");
  return n;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace

SimConfig parseConfig(std::string_view json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  constexpr std::uint64_t u32 = 0xFFFFFFFFull;
  constexpr std::uint64_t big = ~0ull;
  const auto catalog = accel::defaultCatalog();
  SimConfig c;
  using Setter = std::function<void(const nlohmann::json&, const std::string&)>;
  const std::map<std::string, Setter, std::less<>> setters{
      {"dispatch_width", [&](auto& v, auto& k) { c.hts.dispatchWidth = static_cast<unsigned>(asCount(v, k, 1, 1024)); }},
      {"rs_entries", [&](auto& v, auto& k) { c.hts.rsEntries = static_cast<unsigned>(asCount(v, k, 1, 1 << 20)); }},
      {"gpr_count", [&](auto& v, auto& k) { c.hts.gprCount = static_cast<unsigned>(asCount(v, k, 1, 0x10000)); }},
      {"tlb_entries", [&](auto& v, auto& k) { c.hts.tlbEntries = static_cast<unsigned>(asCount(v, k, 1, 1 << 20)); }},
      {"tm_base", [&](auto& v, auto& k) { c.hts.tmBase = static_cast<std::uint32_t>(asCount(v, k, 0, u32)); }},
      {"tm_size", [&](auto& v, auto& k) { c.hts.tmSize = static_cast<std::uint32_t>(asCount(v, k, 1, u32)); }},
      {"mem_read_latency", [&](auto& v, auto& k) { c.hts.memReadLatency = asCount(v, k, 1, big); }},
      {"copy_cycles_per_block", [&](auto& v, auto& k) { c.hts.copyCyclesPerBlock = asCount(v, k, 0, u32); }},
      {"deadlock_horizon", [&](auto& v, auto& k) { c.hts.deadlockHorizon = asCount(v, k, 1, big); }},
      {"interrupt_latency", [&](auto& v, auto& k) { c.cost.interruptLatency = asCount(v, k, 0, u32); }},
      {"l2_hit_latency", [&](auto& v, auto& k) { c.cost.l2HitLatency = asCount(v, k, 0, u32); }},
      {"sw_accesses_per_task", [&](auto& v, auto& k) { c.cost.swAccessesPerTask = asCount(v, k, 0, u32); }},
      {"trace", [&](auto& v, auto& k) {
         if (!v.is_boolean()) throw ConfigError("config: '" + k + "' must be a boolean");
         c.trace = v.template get<bool>();
       }},
  };

  for (const auto& [key, value] : j.items()) {
    if (auto it = setters.find(key); it != setters.end()) {
      it->second(value, key);
      continue;
    }
    auto dot = key.find('.');
    std::string group = key.substr(0, dot);
    std::string fn = dot == std::string::npos ? "" : key.substr(dot + 1);
    if ((group == "latency" || group == "instances") && catalog.indexOf(fn)) {
      if (group == "latency")
        c.latency[fn] = asCount(value, key, 1, u32);
      else
        c.instances[fn] = static_cast<unsigned>(asCount(value, key, 1, 4096));
      continue;
    }
    throw ConfigError("config: unknown key '" + key + "'");
  }
  c.hts.validate();
  return c;
}

SimConfig loadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parseConfig(ss.str());
}

accel::AcceleratorCatalog buildCatalog(const SimConfig& cfg) {
  auto c = accel::defaultCatalog();
  for (const auto& [fn, lat] : cfg.latency) c.setLatency(fn, lat);
  for (const auto& [fn, n] : cfg.instances) c.setInstances(fn, n);
  return c;
}

std::string applyFus(accel::AcceleratorCatalog& catalog, std::string_view spec) {
  auto parseCount = [](std::string_view s) -> unsigned {
    if (s.empty() || s.size() > 5 || s.find_first_not_of("0123456789") != std::string_view::npos)
      throw ConfigError("fus: '" + std::string(s) + "' is not a count");
    unsigned n = static_cast<unsigned>(std::stoul(std::string(s)));
    if (n < 1 || n > 4096) throw ConfigError("fus: count must be in [1, 4096]");
    return n;
  };
  if (spec.find('=') == std::string_view::npos) {
    unsigned n = parseCount(spec);
    catalog.setAllInstances(n);
    return "all=" + std::to_string(n);
  }
  std::map<std::string, unsigned> counts;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    auto comma = spec.find(',', pos);
    auto item = spec.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("fus: expected name=count, got '" + std::string(item) + "'");
    std::string name(item.substr(0, eq));
    if (!catalog.indexOf(name)) throw ConfigError("fus: unknown function '" + name + "'");
    counts[name] = parseCount(item.substr(eq + 1));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  std::string summary;
  for (const auto& [name, n] : counts) {
    catalog.setInstances(name, n);
    if (!summary.empty()) summary += ',';
    summary += name + "=" + std::to_string(n);
  }
  return summary;
}

nlohmann::ordered_json statsJson(const core::SimStats& s) {
  nlohmann::ordered_json j;
  j["makespan"] = s.makespan;
  j["tasks_dispatched"] = s.tasksDispatched;
  j["tasks_issued"] = s.tasksIssued;
  j["tasks_completed"] = s.tasksCompleted;
  j["scalar_ops"] = s.scalarOps;
  j["branches"] = s.branches;
  j["branches_taken"] = s.branchesTaken;
  j["dependencies"] = {{"raw", s.rawEdges}, {"waw", s.wawEdges}, {"war", s.warEdges}};
  j["stalls"] = {
      {"rs_full", s.stalls.rsFull},
      {"branch_wait", s.stalls.branchWait},
      {"nested_speculation", s.stalls.nestedSpeculation},
      {"tlb_copy", s.stalls.tlbCopy},
      {"tlb_wait", s.stalls.tlbWait},
      {"software_overhead", s.stalls.softwareOverhead},
  };
  j["speculation"] = {
      {"entered", s.spec.entered},
      {"committed", s.spec.committed},
      {"squashed", s.spec.squashed},
      {"tasks_aborted", s.spec.tasksAborted},
      {"tlb_evictions", s.spec.tlbEvictions},
      {"evicted_blocks", s.spec.evictedBlocks},
      {"tm_exhausted", s.spec.tmExhausted},
  };
  auto fns = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < s.functionNames.size(); ++f) {
    nlohmann::ordered_json e;
    e["name"] = s.functionNames[f];
    e["instances"] = f < s.functionInstances.size() ? s.functionInstances[f] : 0;
    e["utilization"] = nlohmann::ordered_json::parse(f < s.utilization.size() ? fmt(s.utilization[f]) : "0");
    fns.push_back(e);
  }
  j["functions"] = fns;
  j["unit_busy"] = s.unitBusy;
  j["busy_breakdown"] = {{"completed_latency", s.completedLatency}, {"cdb_wait", s.cdbWait}, {"aborted", s.abortedBusy}};
  return j;
}

std::string csvHeader(const std::vector<std::string>& functionNames) {
  std::string h =
      "benchmark,policy,fus,status,makespan,tasks_dispatched,tasks_issued,tasks_completed,scalar_ops,branches,"
      "branches_taken,raw_edges,waw_edges,war_edges,stall_rs_full,stall_branch_wait,stall_nested_speculation,"
      "stall_tlb_copy,stall_tlb_wait,stall_software_overhead,spec_entered,spec_committed,spec_squashed,"
      "spec_tasks_aborted,tlb_evictions,evicted_blocks,tm_exhausted";
  for (const auto& f : functionNames) h += ",util_" + f;
  return h + "\n";
}

std::string csvRow(const ReportRow& row, const std::vector<std::string>& functionNames) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  std::string r = quote(row.benchmark) + "," + quote(row.policy) + "," + quote(row.fus) + "," + quote(row.status);
  if (!row.stats) {
    for (int k = 0; k < 23; ++k) r += ",";
    for (std::size_t k = 0; k < functionNames.size(); ++k) r += ",";
    return r + "\n";
  }
  const auto& s = *row.stats;
  for (std::uint64_t v : {s.makespan, s.tasksDispatched, s.tasksIssued, s.tasksCompleted, s.scalarOps, s.branches,
                          s.branchesTaken, s.rawEdges, s.wawEdges, s.warEdges, s.stalls.rsFull, s.stalls.branchWait,
                          s.stalls.nestedSpeculation, s.stalls.tlbCopy, s.stalls.tlbWait, s.stalls.softwareOverhead,
                          s.spec.entered, s.spec.committed, s.spec.squashed, s.spec.tasksAborted, s.spec.tlbEvictions,
                          s.spec.evictedBlocks, s.spec.tmExhausted})
    r += "," + std::to_string(v);
  for (const auto& name : functionNames) {
    double u = 0;
    for (std::size_t f = 0; f < s.functionNames.size(); ++f)
      if (s.functionNames[f] == name && f < s.utilization.size()) u = s.utilization[f];
    r += "," + fmt(u);
  }
  return r + "\n";
}

std::vector<ReportRow> runSweep(const std::vector<SweepCell>& cells, const SimConfig& cfg, unsigned threads) {
  std::vector<ReportRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      const auto& cell = cells[k];
      ReportRow& row = rows[k];
      row.benchmark = cell.benchmark;
      row.policy = std::string(policies::toString(cell.policy));
      row.fus = "all=" + std::to_string(cell.fus);
      try {
        auto catalog = buildCatalog(cfg);
        catalog.setAllInstances(cell.fus);
        auto program = isa::assemble(cell.source, catalog.keymap());
        row.stats = policies::runPolicy(cell.policy, program, catalog, cfg.cost, cfg.hts, cell.data).stats;
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
        row.exitCode = exitCodeFor(e);
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells.size())));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  return rows;
}

unsigned sweepThreads() {
  if (const char* env = std::getenv("HTSIM_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace htsim::report
