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
 * @file core.hh
 * @brief Cycle-accurate out-of-order, speculative hardware task scheduler.
 *
 * Every cycle runs five stages in a fixed order:
 * ```
 *   1. tick      accelerators and the memory-read port count down
 *   2. CDB       at most one completion is broadcast (ticket order)
 *   3. issue     every ready RS entry with an idle unit is released
 *   4. dispatch  up to dispatchWidth instructions enter the scheduler
 *   5. account   busy/stall counters, invariant checks, trace
 * ```
 * Scalar and control instructions (mov/add/mul/jump/lbeg/lend/if) execute in
 * the dispatch stage and occupy it for the whole cycle. Task instructions are
 * dispatched up to dispatchWidth per cycle.
 */

#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "htsim/accel.hh"
#include "htsim/error.hh"
#include "htsim/isa.hh"
#include "htsim/memory.hh"

namespace htsim::core {

struct HtsConfig {
  unsigned dispatchWidth = 2;
  unsigned rsEntries = 16;
  unsigned gprCount = 16;
  unsigned tlbEntries = 32;
  std::uint32_t tmBase = 0xF000;
  std::uint32_t tmSize = 256;
  Cycle memReadLatency = 200;
  Cycle copyCyclesPerBlock = 4;
  Cycle deadlockHorizon = 1'000'000;
  bool speculation = true;

  /// Software-runtime emulation: cycles charged before each task dispatch,
  /// and delay between a completion and its dependents clearing.
  Cycle taskDispatchOverhead = 0;
  Cycle completionNotifyDelay = 0;

  /// Verify structural invariants after every cycle (throws std::logic_error).
  bool checkInvariants = false;

  /// Throws ConfigError when a structural count is zero or the TM window
  /// does not fit the block address space.
  void validate() const;
};

/// Preloaded memory and per-instruction result tokens. A completing task
/// writes its token to the base block of its output region and zero to the
/// remaining blocks; branches compare these values.
struct WorkloadData {
  std::map<std::uint32_t, std::uint64_t> memory;
  std::map<std::size_t, std::uint64_t> resultTokens;  ///< keyed by PC

  std::uint64_t tokenFor(std::size_t pc) const;
};

enum class TaskKind : std::uint8_t { Accelerator, MemoryRead };
enum class TaskState : std::uint8_t { Waiting, Ready, Running, Done, Aborted };

const char* toString(TaskState s);

struct TaskRecord {
  Seq seq = 0;
  std::size_t pc = 0;
  TaskKind kind = TaskKind::Accelerator;
  isa::Instruction instr;
  std::size_t function = 0;
  Region logicalIn;
  Region logicalOut;
  std::vector<Region> effIn;   ///< physical pieces after TLB remapping
  std::vector<Region> effOut;
  std::vector<Seq> deps;       ///< outstanding producers
  std::vector<Seq> waiters;    ///< tasks whose deps contain this seq
  std::optional<SpecId> spec;
  TaskState state = TaskState::Waiting;
  std::optional<std::size_t> unit;
  Cycle dispatched = 0;
  Cycle issued = 0;
  Cycle completed = 0;
  bool notified = false;  ///< completion visible to dependents
  std::uint64_t token = 0;
};

/// One architecturally executed task, in program order.
struct CommittedTask {
  Seq seq = 0;
  std::size_t pc = 0;
  std::uint8_t accelId = 0;
  Region in;
  Region out;
  std::uint64_t token = 0;
  Cycle dispatched = 0;
  Cycle issued = 0;
  Cycle completed = 0;

  friend bool operator==(const CommittedTask&, const CommittedTask&) = default;
};

enum class StallReason : std::uint8_t { None, RsFull, BranchWait, NestedSpeculation, TlbCopy, TlbWait, SoftwareOverhead };
const char* toString(StallReason r);

struct StallCounters {
  Cycle rsFull = 0;
  Cycle branchWait = 0;
  Cycle nestedSpeculation = 0;
  Cycle tlbCopy = 0;
  Cycle tlbWait = 0;
  Cycle softwareOverhead = 0;

  Cycle& operator[](StallReason r);
  Cycle total() const { return rsFull + branchWait + nestedSpeculation + tlbCopy + tlbWait + softwareOverhead; }
  friend bool operator==(const StallCounters&, const StallCounters&) = default;
};

struct SpeculationCounters {
  std::uint64_t entered = 0;
  std::uint64_t committed = 0;
  std::uint64_t squashed = 0;
  std::uint64_t tasksAborted = 0;
  std::uint64_t tlbEvictions = 0;
  std::uint64_t evictedBlocks = 0;
  std::uint64_t tmExhausted = 0;  ///< stall episodes with TM/TLB full of uncommitted mappings
  friend bool operator==(const SpeculationCounters&, const SpeculationCounters&) = default;
};

struct SimStats {
  Cycle makespan = 0;
  std::uint64_t tasksDispatched = 0;
  std::uint64_t tasksIssued = 0;
  std::uint64_t tasksCompleted = 0;
  std::uint64_t scalarOps = 0;
  std::uint64_t branches = 0;
  std::uint64_t branchesTaken = 0;
  std::uint64_t rawEdges = 0;
  std::uint64_t wawEdges = 0;
  std::uint64_t warEdges = 0;
  StallCounters stalls;
  SpeculationCounters spec;

  /// Accounting identity terms: sum(unitBusy) ==
  /// completedLatency + cdbWait + abortedBusy.
  std::vector<Cycle> unitBusy;
  Cycle completedLatency = 0;
  Cycle cdbWait = 0;
  Cycle abortedBusy = 0;

  std::vector<std::string> functionNames;
  std::vector<unsigned> functionInstances;
  std::vector<double> utilization;  ///< per function: busy / (instances * makespan)

  friend bool operator==(const SimStats&, const SimStats&) = default;
};

struct ArchState {
  std::vector<std::uint64_t> gprs;
  std::map<std::uint32_t, std::uint64_t> memory;  ///< logical view, zero entries omitted

  friend bool operator==(const ArchState&, const ArchState&) = default;
};

struct SimResult {
  SimStats stats;
  std::vector<CommittedTask> commits;
  ArchState arch;
};

class Engine {
 public:
  /// Throws ConfigError for an invalid config and ProgramError(UnknownFunction)
  /// when a task opcode has no catalog entry.
  Engine(isa::Program program, accel::AcceleratorCatalog catalog, HtsConfig config, WorkloadData data = {});

  /// Advances exactly one cycle.
  void step();
  bool finished() const;
  /// Steps to completion, skipping cycles in which only countdowns advance.
  SimResult run();
  SimResult result() const;

  /// Emits one JSON object per cycle with events.
  void setTrace(std::ostream* out) { trace_ = out; }

  /// Throws std::logic_error naming the first violated invariant.
  void verifyInvariants() const;

  Cycle cycle() const { return cycle_; }
  std::size_t pc() const { return pc_; }
  bool speculating() const { return spec_.has_value(); }
  const std::vector<TaskRecord>& tasks() const { return tasks_; }
  const std::vector<Seq>& reservationStations() const { return rs_; }
  const MemoryTracker& tracker() const { return tracker_; }
  const TaskLookupBuffer& tlb() const { return tlb_; }
  const accel::AcceleratorPool& pool() const { return pool_; }
  const std::vector<std::uint64_t>& gprs() const { return gpr_; }
  const SimStats& stats() const { return stats_; }
  const HtsConfig& config() const { return cfg_; }

 private:
  struct LoopFrame {
    std::size_t bodyStart = 0;
    std::size_t counterReg = 0;
    std::uint64_t remaining = 0;
  };

  struct PendingBranch {
    std::size_t ifPc = 0;
    isa::BranchClass cls = isa::BranchClass::RegisterRead;
    std::int64_t takenPc = 0;
    std::size_t notTakenPc = 0;
    std::uint64_t threshold = 0;
    Seq waitSeq = 0;  ///< memory-read task or producing task
    bool speculative = false;
  };

  struct Snapshot {
    std::vector<std::uint64_t> gpr;
    std::vector<LoopFrame> loops;
    std::array<std::optional<Seq>, 16> lastByTaskId;
  };

  struct Speculation {
    SpecId id = 0;
    Seq firstSeq = 0;
    Snapshot snapshot;
  };

  struct CdbTicket {
    std::uint64_t ticket = 0;
    Seq seq = 0;
    std::size_t unit = 0;
  };

  struct CycleEvents {
    std::vector<Seq> dispatched;
    std::vector<std::pair<Seq, std::size_t>> issued;
    std::optional<Seq> broadcast;
    std::vector<std::string> spec;
    StallReason stall = StallReason::None;
    std::uint64_t scalar = 0;
  };

  // Stages.
  void tickStage();
  void cdbStage();
  void issueStage();
  void dispatchStage();
  void accountStage();

  void broadcast(Seq seq);
  void notify(Seq seq);

  // Dispatch helpers.
  void dispatchTask(const isa::Instruction& ins);
  bool needsMapping(const isa::Instruction& ins) const;
  bool mappingAvailable(const isa::Instruction& ins) const;
  void executeScalar(const isa::Instruction& ins);
  /// Returns false when the branch could not be dispatched this cycle.
  bool dispatchBranch(const isa::Instruction& ins);
  Region resolveRegion(std::uint16_t base, std::uint8_t size, bool indirect) const;
  std::uint64_t readGpr(std::size_t reg) const;
  void writeGpr(std::size_t reg, std::uint64_t value);
  void setPc(std::int64_t target);
  std::size_t matchingLEnd(std::size_t lbegPc) const;

  // Speculation.
  void enterSpeculation();
  void resolveBranch(std::uint64_t value);
  void commitSpeculation();
  void squashSpeculation(std::int64_t takenPc);
  /// Makes room for one speculative mapping. Returns None once an entry was
  /// evicted (dispatch may retry), otherwise the stall reason.
  StallReason drainStep();
  void finishEviction();

  void writeTaskOutput(const TaskRecord& t);
  /// Number of upcoming cycles in which nothing but countdowns would happen.
  Cycle quietCycles() const;
  void skipCycles(Cycle n);
  void emitTrace();

  isa::Program program_;
  accel::AcceleratorCatalog catalog_;
  HtsConfig cfg_;
  WorkloadData data_;

  accel::AcceleratorPool pool_;
  MemoryTracker tracker_;
  TaskLookupBuffer tlb_;
  std::map<std::uint32_t, std::uint64_t> mem_;  ///< physical, zero entries omitted

  std::vector<TaskRecord> tasks_;
  std::vector<Seq> rs_;
  std::deque<CdbTicket> cdb_;
  std::uint64_t nextTicket_ = 0;
  std::deque<std::pair<Cycle, Seq>> notifyQueue_;

  // Memory-read port used by MR branches.
  std::optional<Seq> memRead_;
  bool memReadRunning_ = false;
  Cycle memReadRemaining_ = 0;

  std::vector<std::uint64_t> gpr_;
  std::vector<LoopFrame> loops_;
  std::array<std::optional<Seq>, 16> lastByTaskId_{};
  std::size_t pc_ = 0;

  std::optional<PendingBranch> branch_;
  std::optional<Speculation> spec_;
  SpecId nextSpecId_ = 1;
  std::optional<std::string> specFault_;  ///< error reached on the speculative path
  ProgramErrorKind specFaultKind_ = ProgramErrorKind::PcOutOfRange;

  Cycle copyRemaining_ = 0;
  std::optional<TlbEntry> evicting_;
  bool tmExhaustedEpisode_ = false;
  Cycle swRemaining_ = 0;
  bool swArmed_ = false;
  unsigned lastDispatchUsed_ = 0;
  StallReason lastStall_ = StallReason::None;

  Cycle cycle_ = 0;
  Cycle lastActivity_ = 0;
  Cycle lastProgress_ = 0;
  bool progress_ = false;
  CycleEvents events_;
  std::ostream* trace_ = nullptr;
  SimStats stats_;
};

}  // namespace htsim::core
