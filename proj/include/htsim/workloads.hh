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
 * @file workloads.hh
 * @brief Generators for the synthetic benchmark suite and the audio
 * compression pipeline. Each generator returns assembly text plus the
 * preloaded memory and result tokens that drive its branches.
 */

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "htsim/core.hh"

namespace htsim::workloads {

enum class BenchmarkKind {
  NoDep,
  SameDep,
  DiffDep,
  RandomDep,
  LoopNoDep,
  LoopDep,
  BranchTakenNoDep,
  BranchNotTakenNoDep,
  BranchTakenDep,
};

/// Kebab-case names used on the command line, e.g. "no-dep".
std::string_view toString(BenchmarkKind k);
std::optional<BenchmarkKind> parseBenchmarkKind(std::string_view name);
const std::array<BenchmarkKind, 9>& allBenchmarks();

struct BenchmarkSpec {
  BenchmarkKind kind = BenchmarkKind::NoDep;
  unsigned nTasks = 30;
  std::uint64_t seed = 1;
  std::string function = "real_fir";  ///< SameDep chain function
  unsigned tripCount = 4;             ///< Loop* iterations
  std::uint64_t threshold = 3;        ///< Branch* comparison register value
};

struct AudioCompressionSpec {
  unsigned bands = 4;
  bool timeDomain = false;
  std::uint64_t seed = 1;
};

struct Workload {
  std::string name;
  std::string source;  ///< assembly text
  core::WorkloadData data;
};

/// Throws InvalidSpec.
Workload generate(const BenchmarkSpec& spec);
Workload generateAudio(const AudioCompressionSpec& spec);

/// Sidecar JSON: {"memory":[{"block":b,"value":v}],"result_tokens":[{"pc":p,"value":v}]}.
std::string sidecarJson(const core::WorkloadData& data);
/// Throws ConfigError on malformed input.
core::WorkloadData parseSidecar(std::string_view json);

}  // namespace htsim::workloads
