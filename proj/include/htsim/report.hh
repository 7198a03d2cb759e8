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


/**
 * @file report.hh
 * @brief Simulation config files, statistics serialization (JSON and CSV)
 * and sweep execution.
 */

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "htsim/policies.hh"
#include "json.hpp"

namespace htsim::report {

/// Everything a config file may set. Keys are flat; per-function settings
/// use `latency.<keyname>` and `instances.<keyname>`.
struct SimConfig {
  core::HtsConfig hts;
  policies::CostModel cost;
  std::map<std::string, Cycle> latency;
  std::map<std::string, unsigned> instances;
  bool trace = false;
};

/// Throws ConfigError on syntax errors, unknown keys or out-of-range values.
SimConfig parseConfig(std::string_view json);
/// Throws IoError when the file cannot be read.
SimConfig loadConfig(const std::string& path);

/// Default catalog with the config's overrides applied.
accel::AcceleratorCatalog buildCatalog(const SimConfig& cfg);

/// Applies "name=count,..." (or a bare count for every function) and returns
/// a canonical summary such as "all=2" or "fft_256=4,real_fir=2".
std::string applyFus(accel::AcceleratorCatalog& catalog, std::string_view spec);

nlohmann::ordered_json statsJson(const core::SimStats& stats);

struct ReportRow {
  std::string benchmark;
  std::string policy;
  std::string fus;
  std::optional<core::SimStats> stats;
  std::string status = "ok";
  int exitCode = 0;  ///< nonzero for a failed cell
};

std::string csvHeader(const std::vector<std::string>& functionNames);
std::string csvRow(const ReportRow& row, const std::vector<std::string>& functionNames);

struct SweepCell {
  std::string benchmark;
  std::string source;
  core::WorkloadData data;
  policies::Policy policy = policies::Policy::HtsSpec;
  unsigned fus = 1;
};

/// Runs every cell, in parallel up to `threads` workers. Rows come back in
/// cell order; a failing cell yields a row with an error status.
std::vector<ReportRow> runSweep(const std::vector<SweepCell>& cells, const SimConfig& cfg, unsigned threads);

/// Worker count: HTSIM_THREADS if set and positive, else the hardware count.
unsigned sweepThreads();

}  // namespace htsim::report
