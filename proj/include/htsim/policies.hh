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
 * @file policies.hh
 * @brief The comparison schedulers: a naive in-order CPU loop, a software
 * runtime that emulates out-of-order scheduling with memory-resident
 * structures, and the hardware scheduler with or without speculation.
 */

#pragma once

#include <optional>
#include <string_view>

#include "htsim/core.hh"

namespace htsim::policies {

enum class Policy { Naive, SoftwareRuntime, HtsNoSpec, HtsSpec };

/// CLI spelling: naive, software, hts, hts-spec.
std::string_view toString(Policy p);
std::optional<Policy> parsePolicy(std::string_view name);

struct CostModel {
  Cycle interruptLatency = 300;
  Cycle l2HitLatency = 25;
  Cycle swAccessesPerTask = 4;

  Cycle taskDispatchOverhead() const { return l2HitLatency * swAccessesPerTask; }
};

/// One task at a time, each charged its latency plus an interrupt; every
/// scalar or loop instruction costs one cycle and branches are free. Uses
/// `cfg` only for the register count, the reserved TM window and the
/// deadlock horizon (counted in instructions executed without a task).
core::SimResult runNaive(const isa::Program& program, const accel::AcceleratorCatalog& catalog, const CostModel& cost,
                         const core::HtsConfig& cfg = {}, const core::WorkloadData& data = {});

/// The hardware engine with speculation off, a per-task dispatch charge and a
/// delayed completion notification.
core::SimResult runSoftware(const isa::Program& program, const accel::AcceleratorCatalog& catalog, const CostModel& cost,
                            const core::HtsConfig& cfg = {}, const core::WorkloadData& data = {},
                            std::ostream* trace = nullptr);

core::SimResult runPolicy(Policy policy, const isa::Program& program, const accel::AcceleratorCatalog& catalog,
                          const CostModel& cost, const core::HtsConfig& cfg = {}, const core::WorkloadData& data = {},
                          std::ostream* trace = nullptr);

}  // namespace htsim::policies
