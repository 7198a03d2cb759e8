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
 * @file accel.hh
 * @brief Function-level accelerator pool: catalog of functions with fixed
 * latencies, unit instances with busy state, and the status register the
 * scheduler consults before issuing.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "htsim/isa.hh"

namespace htsim {

using Cycle = std::uint64_t;
using Seq = std::uint64_t;
using SpecId = std::uint32_t;

namespace accel {

struct FunctionSpec {
  std::string keyname;
  std::uint8_t accelId = 0;
  Cycle latency = 1;
  std::uint32_t dataframeSize = 0;  ///< informational only
};

class AcceleratorCatalog {
 public:
  /// Throws std::invalid_argument for duplicate names/IDs or latency 0.
  void addFunction(FunctionSpec spec, unsigned instances = 1);

  void setLatency(std::string_view keyname, Cycle latency);
  void setInstances(std::string_view keyname, unsigned count);
  void setAllInstances(unsigned count);

  const std::vector<FunctionSpec>& functions() const { return functions_; }
  std::size_t size() const { return functions_.size(); }

  /// Throws std::out_of_range for unknown names.
  const FunctionSpec& lookup(std::string_view keyname) const;
  std::optional<std::size_t> indexOf(std::string_view keyname) const;
  std::optional<std::size_t> indexOfAccel(std::uint8_t accelId) const;
  unsigned instances(std::size_t functionIndex) const { return instances_.at(functionIndex); }

  isa::KeynameMap keymap() const;

 private:
  std::size_t checkedIndex(std::string_view keyname) const;

  std::vector<FunctionSpec> functions_;
  std::vector<unsigned> instances_;
};

/// The ten DSP functions with their reference cycle counts, one unit each.
AcceleratorCatalog defaultCatalog();

struct CompletionEvent {
  Seq seq = 0;
  std::size_t unit = 0;
  friend bool operator==(const CompletionEvent&, const CompletionEvent&) = default;
};

/// One accelerator instance. A unit that finished stays occupied until its
/// completion is broadcast; an aborted unit frees at the next cycle boundary.
class AcceleratorUnit {
 public:
  enum class State { Idle, Running, Finished, Aborting };

  AcceleratorUnit(std::size_t index, std::size_t functionIndex, Cycle latency)
      : index_(index), functionIndex_(functionIndex), latency_(latency) {}

  /// Starts a task at cycle `now`; the completion is raised at now + latency.
  /// Throws ProgramError(UnitBusy) if the unit is occupied.
  void deliver(Seq seq, Cycle now, std::optional<SpecId> spec);
  /// Advances one cycle. Returns true when the running task just finished.
  bool tick();
  /// Advances a running unit by `cycles`, which must be fewer than remaining().
  void advance(Cycle cycles);
  /// Completion has been broadcast.
  void release();
  void abort();

  State state() const { return state_; }
  bool busy() const { return state_ != State::Idle; }
  std::size_t index() const { return index_; }
  std::size_t functionIndex() const { return functionIndex_; }
  Cycle latency() const { return latency_; }
  Seq seq() const { return seq_; }
  Cycle remaining() const { return remaining_; }
  Cycle readyAt() const { return readyAt_; }
  Cycle deliveredAt() const { return deliveredAt_; }
  const std::optional<SpecId>& spec() const { return spec_; }

 private:
  std::size_t index_;
  std::size_t functionIndex_;
  Cycle latency_;
  State state_ = State::Idle;
  Seq seq_ = 0;
  Cycle remaining_ = 0;
  Cycle readyAt_ = 0;
  Cycle deliveredAt_ = 0;
  std::optional<SpecId> spec_;
};

/// Per-unit busy bits. Written on delivery, completion broadcast and abort
/// release; read by the issue stage.
class AcceleratorStatusRegister {
 public:
  explicit AcceleratorStatusRegister(std::size_t units = 0) : bits_(units, false) {}
  bool busy(std::size_t unit) const { return bits_.at(unit); }
  void set(std::size_t unit) { bits_.at(unit) = true; }
  void clear(std::size_t unit) { bits_.at(unit) = false; }
  std::size_t size() const { return bits_.size(); }

 private:
  std::vector<bool> bits_;
};

class AcceleratorPool {
 public:
  explicit AcceleratorPool(const AcceleratorCatalog& catalog);

  /// Lowest-index unit of the function whose ASR bit is clear.
  std::optional<std::size_t> idleUnit(std::size_t functionIndex) const;
  void deliver(std::size_t unit, Seq seq, Cycle now, std::optional<SpecId> spec);
  /// Frees units aborted in the previous cycle, advances running units and
  /// returns their completions ordered by unit index.
  std::vector<CompletionEvent> tick();
  void release(std::size_t unit);
  void abort(std::size_t unit);

  /// Adds `cycles` to the busy counter of every unit whose ASR bit is set.
  void accountBusy(Cycle cycles);
  /// Advances every running unit by `cycles` without raising completions.
  /// Caller guarantees no unit finishes and none is aborting.
  void skip(Cycle cycles);

  const std::vector<AcceleratorUnit>& units() const { return units_; }
  const AcceleratorUnit& unit(std::size_t u) const { return units_.at(u); }
  const AcceleratorStatusRegister& asr() const { return asr_; }
  const std::vector<Cycle>& busyCycles() const { return busyCycles_; }
  /// ASR bit equals unit occupancy for every unit.
  bool asrConsistent() const;
  bool allIdle() const;

 private:
  std::vector<AcceleratorUnit> units_;
  std::vector<std::vector<std::size_t>> byFunction_;
  AcceleratorStatusRegister asr_;
  std::vector<Cycle> busyCycles_;
};

}  // namespace accel
}  // namespace htsim
