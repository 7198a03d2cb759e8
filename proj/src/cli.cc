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


#include "htsim/cli.hh"

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "htsim/report.hh"
#include "htsim/workloads.hh"

namespace htsim::cli {

namespace {

constexpr const char* kVersion = "1.0.0";

namespace fs = std::filesystem;

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write '" + path + "'");
}

bool isBinary(const std::string& path) { return fs::path(path).extension() == ".htsbin"; }

isa::Program loadProgram(const std::string& path, const isa::KeynameMap& keymap) {
  if (isBinary(path)) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    return isa::readBinary(in);
  }
  return isa::assemble(readFile(path), keymap);
}

std::vector<std::string> splitList(const std::string& s) {
  std::vector<std::string> items;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) items.push_back(item);
  return items;
}

std::string timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json configJson(const report::SimConfig& c) {
  nlohmann::ordered_json j;
  j["dispatch_width"] = c.hts.dispatchWidth;
  j["rs_entries"] = c.hts.rsEntries;
  j["gpr_count"] = c.hts.gprCount;
  j["tlb_entries"] = c.hts.tlbEntries;
  j["tm_base"] = c.hts.tmBase;
  j["tm_size"] = c.hts.tmSize;
  j["mem_read_latency"] = c.hts.memReadLatency;
  j["copy_cycles_per_block"] = c.hts.copyCyclesPerBlock;
  j["deadlock_horizon"] = c.hts.deadlockHorizon;
  j["interrupt_latency"] = c.cost.interruptLatency;
  j["l2_hit_latency"] = c.cost.l2HitLatency;
  j["sw_accesses_per_task"] = c.cost.swAccessesPerTask;
  for (const auto& [fn, v] : c.latency) j["latency." + fn] = v;
  for (const auto& [fn, v] : c.instances) j["instances." + fn] = v;
  return j;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-")
    out << text;
  else
    writeFile(path, text);
}

struct RunArgs {
  std::string input;
  std::string policy = "hts-spec";
  std::string fus;
  std::string config;
  std::string data;
  std::string json;
  std::string csv;
  std::string trace;
  bool deterministic = false;
};

int cmdRun(const RunArgs& a, std::ostream& out) {
  auto policy = policies::parsePolicy(a.policy);
  if (!policy) throw ConfigError("unknown policy '" + a.policy + "'");
  report::SimConfig cfg = a.config.empty() ? report::SimConfig{} : report::loadConfig(a.config);
  auto catalog = report::buildCatalog(cfg);
  std::string fus = a.fus.empty() ? "default" : report::applyFus(catalog, a.fus);
  auto program = loadProgram(a.input, catalog.keymap());
  if (program.empty()) throw ProgramError(ProgramErrorKind::EmptyProgram, "empty program");
  core::WorkloadData data = a.data.empty() ? core::WorkloadData{} : workloads::parseSidecar(readFile(a.data));

  std::string tracePath = a.trace.empty() && cfg.trace ? a.input + ".trace.jsonl" : a.trace;
  std::ofstream traceFile;
  std::ostream* trace = nullptr;
  if (!tracePath.empty()) {
    if (tracePath == "-") {
      trace = &out;
    } else {
      traceFile.open(tracePath, std::ios::binary);
      if (!traceFile) throw IoError("cannot write '" + tracePath + "'");
      trace = &traceFile;
    }
  }
  if (trace && *policy == policies::Policy::Naive) throw ConfigError("the naive policy has no cycle trace");

  auto result = policies::runPolicy(*policy, program, catalog, cfg.cost, cfg.hts, data, trace);
  const auto& s = result.stats;

  nlohmann::ordered_json doc;
  doc["tool"] = "htsim";
  doc["version"] = kVersion;
  if (!a.deterministic) doc["generated_at"] = timestamp();
  doc["input"] = a.input;
  doc["policy"] = a.policy;
  doc["fus"] = fus;
  doc["config"] = configJson(cfg);
  doc["stats"] = report::statsJson(s);
  if (!a.json.empty()) emit(a.json, doc.dump(2) + "\n", out);

  if (!a.csv.empty()) {
    report::ReportRow row{fs::path(a.input).stem().string(), a.policy, fus, s};
    emit(a.csv, report::csvHeader(s.functionNames) + report::csvRow(row, s.functionNames), out);
  }

  if (a.json != "-" && a.csv != "-" && tracePath != "-") {
    out << "policy      " << a.policy << "\n";
    out << "makespan    " << s.makespan << " cycles\n";
    out << "tasks       " << s.tasksDispatched << " dispatched, " << s.tasksCompleted << " completed\n";
    out << "branches    " << s.branches << " (" << s.branchesTaken << " taken)\n";
    out << "stalls      " << s.stalls.total() << " cycles\n";
    out << "speculation " << s.spec.entered << " entered, " << s.spec.committed << " committed, " << s.spec.squashed
        << " squashed\n";
  }
  return 0;
}

struct SweepArgs {
  std::string benchmarks = "all";
  std::string policies = "naive,software,hts,hts-spec";
  std::string fus = "1,2,4,8";
  std::string bands = "4";
  unsigned tasks = 30;
  std::uint64_t seed = 1;
  std::string config;
  std::string csv = "-";
  std::string json;
  std::string plotData;
  bool deterministic = false;
};

void writePlotData(const std::string& dir, const std::vector<report::ReportRow>& rows) {
  fs::create_directories(dir);
  std::vector<std::string> benches, pols, fus;
  auto note = [](std::vector<std::string>& v, const std::string& x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
  };
  std::map<std::tuple<std::string, std::string, std::string>, std::string> cell;
  for (const auto& r : rows) {
    note(benches, r.benchmark);
    note(pols, r.policy);
    note(fus, r.fus);
    cell[{r.benchmark, r.policy, r.fus}] = r.stats ? std::to_string(r.stats->makespan) : "";
  }
  // Makespan per benchmark and policy, one file per FU count.
  for (const auto& f : fus) {
    std::string t = "benchmark";
    for (const auto& p : pols) t += "," + p;
    t += "\n";
    for (const auto& b : benches) {
      t += b;
      for (const auto& p : pols) t += "," + cell[{b, p, f}];
      t += "\n";
    }
    std::string name = f.substr(f.find('=') + 1);
    writeFile((fs::path(dir) / ("makespan_by_policy_fus" + name + ".csv")).string(), t);
  }
  // Makespan against FU count for every benchmark and policy.
  std::string t = "benchmark,policy";
  for (const auto& f : fus) t += "," + f.substr(f.find('=') + 1);
  t += "\n";
  for (const auto& b : benches)
    for (const auto& p : pols) {
      t += b + "," + p;
      for (const auto& f : fus) t += "," + cell[{b, p, f}];
      t += "\n";
    }
  writeFile((fs::path(dir) / "makespan_by_fus.csv").string(), t);
}

int cmdSweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  report::SimConfig cfg = a.config.empty() ? report::SimConfig{} : report::loadConfig(a.config);

  std::vector<policies::Policy> pols;
  for (const auto& name : splitList(a.policies)) {
    auto p = policies::parsePolicy(name);
    if (!p) throw ConfigError("unknown policy '" + name + "'");
    pols.push_back(*p);
  }
  auto counts = [](const std::string& list, const char* what) {
    std::vector<unsigned> v;
    for (const auto& item : splitList(list)) {
      unsigned n = 0;
      auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), n);
      if (ec != std::errc() || end != item.data() + item.size() || n < 1 || n > 4096)
        throw ConfigError(std::string(what) + ": '" + item + "' is not a count in [1, 4096]");
      v.push_back(n);
    }
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto fus = counts(a.fus, "fus");
  const auto bands = counts(a.bands, "bands");
  if (pols.empty() || fus.empty()) throw ConfigError("sweep needs at least one policy and one FU count");

  std::vector<workloads::Workload> benches;
  for (const auto& name : splitList(a.benchmarks)) {
    if (name == "all") {
      for (auto k : workloads::allBenchmarks()) benches.push_back(workloads::generate({k, a.tasks, a.seed}));
    } else if (name == "audio-freq" || name == "audio-time") {
      for (unsigned b : bands) {
        auto w = workloads::generateAudio({b, name == "audio-time", a.seed});
        w.name += "-b" + std::to_string(b);
        benches.push_back(std::move(w));
      }
    } else if (auto k = workloads::parseBenchmarkKind(name)) {
      benches.push_back(workloads::generate({*k, a.tasks, a.seed}));
    } else {
      throw InvalidSpec("unknown benchmark '" + name + "'");
    }
  }

  std::vector<report::SweepCell> cells;
  for (const auto& w : benches)
    for (auto p : pols)
      for (unsigned f : fus) cells.push_back({w.name, w.source, w.data, p, f});
  auto rows = report::runSweep(cells, cfg, report::sweepThreads());

  std::vector<std::string> names;
  const auto catalog = report::buildCatalog(cfg);
  for (const auto& f : catalog.functions()) names.push_back(f.keyname);
  std::string csv = report::csvHeader(names);
  for (const auto& r : rows) csv += report::csvRow(r, names);
  emit(a.csv, csv, out);

  if (!a.json.empty()) {
    nlohmann::ordered_json doc;
    doc["tool"] = "htsim";
    doc["version"] = kVersion;
    if (!a.deterministic) doc["generated_at"] = timestamp();
    doc["config"] = configJson(cfg);
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json e;
      e["benchmark"] = r.benchmark;
      e["policy"] = r.policy;
      e["fus"] = r.fus;
      e["status"] = r.status;
      if (r.stats) e["stats"] = report::statsJson(*r.stats);
      arr.push_back(e);
    }
    doc["rows"] = arr;
    emit(a.json, doc.dump(2) + "\n", out);
  }
  if (!a.plotData.empty()) writePlotData(a.plotData, rows);

  int code = 0;
  for (const auto& r : rows) {
    if (r.exitCode == 0) continue;
    err << "htsim: cell " << r.benchmark << "/" << r.policy << "/" << r.fus << ": " << r.status << "\n";
    if (code == 0) code = r.exitCode;
  }
  return code;
}

struct GenArgs {
  std::string kind;
  unsigned tasks = 30;
  std::uint64_t seed = 1;
  std::string function = "real_fir";
  unsigned trips = 4;
  std::uint64_t threshold = 3;
  unsigned bands = 4;
  bool time = false;
  bool freq = false;
  std::string output;
};

int cmdGen(const GenArgs& a, std::ostream& out) {
  workloads::Workload w;
  if (a.kind == "audio") {
    if (a.time && a.freq) throw InvalidSpec("--time and --freq are exclusive");
    w = workloads::generateAudio({a.bands, a.time, a.seed});
  } else {
    auto kind = workloads::parseBenchmarkKind(a.kind);
    if (!kind) throw InvalidSpec("unknown benchmark '" + a.kind + "'");
    workloads::BenchmarkSpec spec;
    spec.kind = *kind;
    spec.nTasks = a.tasks;
    spec.seed = a.seed;
    spec.function = a.function;
    spec.tripCount = a.trips;
    spec.threshold = a.threshold;
    w = workloads::generate(spec);
  }
  if (a.output.empty() || a.output == "-") {
    out << w.source;
    return 0;
  }
  fs::path asmPath(a.output);
  fs::path dataPath = asmPath;
  dataPath.replace_extension(".data.json");
  writeFile(asmPath.string(), w.source);
  writeFile(dataPath.string(), workloads::sidecarJson(w.data));
  out << asmPath.string() << "\n" << dataPath.string() << "\n";
  return 0;
}

int cmdAsm(const std::string& input, const std::string& output, std::ostream& out) {
  const auto keymap = accel::defaultCatalog().keymap();
  auto program = loadProgram(input, keymap);
  if (!output.empty() && output != "-" && isBinary(output)) {
    std::ofstream o(output, std::ios::binary);
    if (!o) throw IoError("cannot write '" + output + "'");
    isa::writeBinary(o, program);
    if (!o) throw IoError("cannot write '" + output + "'");
    return 0;
  }
  emit(output.empty() ? "-" : output, isa::disassemble(program, keymap), out);
  return 0;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hardware task scheduler simulator", "htsim"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunArgs run;
  auto* runCmd = app.add_subcommand("run", "Simulate one program");
  runCmd->add_option("program", run.input, "Assembly (.asm) or binary (.htsbin) program")->required();
  runCmd->add_option("--policy", run.policy, "naive, software, hts or hts-spec")->check(CLI::IsMember({"naive", "software", "hts", "hts-spec"}));
  runCmd->add_option("--fus", run.fus, "Instances per function: name=count,... or a single count");
  runCmd->add_option("--config", run.config, "Flat JSON config file");
  runCmd->add_option("--data", run.data, "Sidecar JSON with preloaded memory and result tokens");
  runCmd->add_option("--json", run.json, "Write JSON stats to this path ('-' for stdout)");
  runCmd->add_option("--csv", run.csv, "Write a one-row CSV report ('-' for stdout)");
  runCmd->add_option("--trace", run.trace, "Write a JSON-lines cycle trace ('-' for stdout)");
  runCmd->add_flag("--deterministic", run.deterministic, "Omit the timestamp from reports");

  SweepArgs sweep;
  auto* sweepCmd = app.add_subcommand("sweep", "Run benchmarks across policies and FU counts");
  sweepCmd->add_option("--benchmarks", sweep.benchmarks, "Comma list: all, benchmark names, audio-freq, audio-time");
  sweepCmd->add_option("--policies", sweep.policies, "Comma list of policies");
  sweepCmd->add_option("--fus", sweep.fus, "Comma list of per-function instance counts");
  sweepCmd->add_option("--bands", sweep.bands, "Comma list of band counts for audio benchmarks");
  sweepCmd->add_option("--tasks", sweep.tasks, "Tasks per synthetic benchmark");
  sweepCmd->add_option("--seed", sweep.seed, "Generator seed");
  sweepCmd->add_option("--config", sweep.config, "Flat JSON config file");
  sweepCmd->add_option("--csv", sweep.csv, "CSV output path ('-' for stdout)");
  sweepCmd->add_option("--json", sweep.json, "JSON output path ('-' for stdout)");
  sweepCmd->add_option("--plot-data", sweep.plotData, "Directory for pivoted per-figure CSV files");
  sweepCmd->add_flag("--deterministic", sweep.deterministic, "Omit the timestamp from reports");

  GenArgs gen;
  bool genDeterministic = false;
  auto* genCmd = app.add_subcommand("gen", "Generate a benchmark program and its sidecar");
  genCmd->add_option("kind", gen.kind, "Benchmark name or 'audio'")->required();
  genCmd->add_option("--tasks", gen.tasks, "Number of tasks");
  genCmd->add_option("--seed", gen.seed, "Generator seed");
  genCmd->add_option("--function", gen.function, "Function of the same-dep chain");
  genCmd->add_option("--trips", gen.trips, "Loop iterations");
  genCmd->add_option("--threshold", gen.threshold, "Branch threshold register value");
  genCmd->add_option("--bands", gen.bands, "Audio bands");
  genCmd->add_flag("--time", gen.time, "Audio: take the time-domain path");
  genCmd->add_flag("--freq", gen.freq, "Audio: take the frequency-domain path (default)");
  genCmd->add_option("-o,--output", gen.output, "Output .asm path; the sidecar goes next to it");
  genCmd->add_flag("--deterministic", genDeterministic, "Accepted for symmetry; output is always deterministic");

  std::string asmIn, asmOut;
  bool asmDeterministic = false;
  auto* asmCmd = app.add_subcommand("asm", "Assemble to .htsbin or disassemble to canonical text");
  asmCmd->add_option("input", asmIn, "Input .asm or .htsbin")->required();
  asmCmd->add_option("-o,--output", asmOut, "Output path; .htsbin selects binary");
  asmCmd->add_flag("--deterministic", asmDeterministic, "Accepted for symmetry; output is always deterministic");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "htsim: " << e.what() << "\n";
    return 3;
  }

  try {
    if (runCmd->parsed()) return cmdRun(run, out);
    if (sweepCmd->parsed()) return cmdSweep(sweep, out, err);
    if (genCmd->parsed()) return cmdGen(gen, out);
    if (asmCmd->parsed()) return cmdAsm(asmIn, asmOut, out);
  } catch (const AsmError& e) {
    err << "htsim: ";
    if (e.line()) err << "line " << e.line() << ": ";
    err << e.what() << "\n";
    return exitCodeFor(e);
  } catch (const std::exception& e) {
    err << "htsim: " << e.what() << "\n";
    return exitCodeFor(e);
  }
  return 3;
}

}  // namespace htsim::cli
