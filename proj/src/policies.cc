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


#include "htsim/policies.hh"

#include <array>
#include <set>

namespace htsim::policies {

using core::Region;
using isa::OpKind;

std::string_view toString(Policy p) {
  switch (p) {
    case Policy::Naive: return "naive";
    case Policy::SoftwareRuntime: return "software";
    case Policy::HtsNoSpec: return "hts";
    case Policy::HtsSpec: return "hts-spec";
  }
  return "?";
}

std::optional<Policy> parsePolicy(std::string_view name) {
  for (Policy p : {Policy::Naive, Policy::SoftwareRuntime, Policy::HtsNoSpec, Policy::HtsSpec})
    if (toString(p) == name) return p;
  return std::nullopt;
}

namespace {

class NaiveMachine {
 public:
  NaiveMachine(const isa::Program& program, const accel::AcceleratorCatalog& catalog, const CostModel& cost,
               const core::HtsConfig& cfg, const core::WorkloadData& data)
      : program_(program), catalog_(catalog), cost_(cost), cfg_(cfg), data_(data), gpr_(cfg.gprCount, 0) {
    for (const auto& [block, value] : data.memory)
      if (value) mem_[block] = value;
    for (std::size_t pc = 0; pc < program.size(); ++pc)
      if (program[pc].opcode.isTask() && !catalog.indexOfAccel(program[pc].opcode.accelId))
        throw ProgramError(ProgramErrorKind::UnknownFunction, "pc " + std::to_string(pc) + ": unknown accelerator ID");
    busy_.assign(catalog.size(), 0);
  }

  core::SimResult run() {
    Cycle idle = 0;
    while (pc_ < program_.size()) {
      const auto& ins = program_[pc_];
      if (ins.opcode.isTask()) {
        task(ins);
        idle = 0;
      } else {
        control(ins);
        if (++idle >= cfg_.deadlockHorizon) throw DeadlockError(clock_, "naive: no task executed for " + std::to_string(idle) + " instructions");
      }
    }
    return result();
  }

 private:
  struct Loop {
    std::size_t bodyStart;
    std::size_t counterReg;
    std::uint64_t remaining;
  };

  std::uint64_t reg(std::size_t r) const {
    if (r >= gpr_.size()) throw ProgramError(ProgramErrorKind::BadRegister, "pc " + std::to_string(pc_) + ": no register R" + std::to_string(r));
    return gpr_[r];
  }

  void setReg(std::size_t r, std::uint64_t v) {
    reg(r);
    gpr_[r] = v;
  }

  Region region(std::uint16_t base, std::uint8_t size, bool indirect) const {
    if (!indirect) return {base, size};
    std::uint64_t v = reg(base);
    if (v > 0xFFFF) throw ProgramError(ProgramErrorKind::BadRegister, "pc " + std::to_string(pc_) + ": indirect base exceeds 16 bits");
    return {static_cast<std::uint32_t>(v), size};
  }

  void jumpTo(std::int64_t target) {
    if (target < 0) throw ProgramError(ProgramErrorKind::PcOutOfRange, "pc " + std::to_string(pc_) + ": jump target is negative");
    pc_ = std::min<std::size_t>(static_cast<std::size_t>(target), program_.size());
  }

  void task(const isa::Instruction& ins) {
    const bool indirect = ins.control & isa::kCtrlIndirect;
    Region in = region(ins.inBase, ins.inSize, indirect);
    Region out = region(ins.outBase, ins.outSize, indirect);
    Region tm{cfg_.tmBase, cfg_.tmSize};
    if (in.overlaps(tm) || out.overlaps(tm))
      throw ProgramError(ProgramErrorKind::ReservedRegion, "pc " + std::to_string(pc_) + ": region overlaps transactional memory");
    std::size_t f = *catalog_.indexOfAccel(ins.opcode.accelId);
    Cycle latency = catalog_.functions()[f].latency;

    core::CommittedTask c;
    c.seq = commits_.size();
    c.pc = pc_;
    c.accelId = ins.opcode.accelId;
    c.in = in;
    c.out = out;
    c.token = data_.tokenFor(pc_);
    c.dispatched = clock_ + 1;
    c.issued = clock_ + 1;
    c.completed = clock_ + latency;
    commits_.push_back(c);

    for (std::uint64_t b = out.base; b < out.end(); ++b) {
      auto block = static_cast<std::uint32_t>(b);
      std::uint64_t v = b == out.base ? c.token : 0;
      if (v)
        mem_[block] = v;
      else
        mem_.erase(block);
      written_.insert(block);
    }
    lastByTaskId_[ins.taskId & 0xF] = c.token;
    busy_[f] += latency;
    completedLatency_ += latency;
    clock_ += latency + cost_.interruptLatency;
    ++pc_;
  }

  void control(const isa::Instruction& ins) {
    switch (ins.opcode.kind) {
      case OpKind::Mov:
        setReg(ins.outBase, ins.inBase);
        ++pc_;
        break;
      case OpKind::Add:
        setReg(ins.outBase, reg(ins.inBase) + reg(ins.inSize));
        ++pc_;
        break;
      case OpKind::Mul:
        setReg(ins.outBase, reg(ins.inBase) * reg(ins.inSize));
        ++pc_;
        break;
      case OpKind::Jump:
        jumpTo(static_cast<std::int64_t>(pc_) + static_cast<std::int16_t>(ins.inBase));
        break;
      case OpKind::LBeg: {
        std::size_t ctr = ins.inBase;
        std::uint64_t n = ins.inSize == 0 ? reg(ctr) : ins.inBase;
        reg(ctr);
        if (n == 0) {
          skipLoop();
        } else {
          gpr_[ctr] = n;
          loops_.push_back({pc_ + 1, ctr, n});
          ++pc_;
        }
        break;
      }
      case OpKind::LEnd: {
        if (loops_.empty()) throw ProgramError(ProgramErrorKind::LEndWithoutLBeg, "pc " + std::to_string(pc_) + ": lend without an open loop");
        auto& l = loops_.back();
        gpr_[l.counterReg] = --l.remaining;
        if (l.remaining > 0) {
          pc_ = l.bodyStart;
        } else {
          loops_.pop_back();
          ++pc_;
        }
        break;
      }
      case OpKind::If:
        branch(ins);
        return;
      case OpKind::Task:
        return;
    }
    ++clock_;
    ++scalarOps_;
  }

  void skipLoop() {
    int depth = 0;
    for (std::size_t p = pc_ + 1; p < program_.size(); ++p) {
      auto k = program_[p].opcode.kind;
      if (k == OpKind::LBeg) ++depth;
      if (k == OpKind::LEnd && depth-- == 0) {
        pc_ = p + 1;
        return;
      }
    }
    pc_ = program_.size();
  }

  void branch(const isa::Instruction& ins) {
    auto cls = ins.branchClass();
    if (!cls) throw ProgramError(ProgramErrorKind::MalformedBranch, "pc " + std::to_string(pc_) + ": invalid branch class");
    std::uint64_t threshold = reg(ins.inSize);
    std::uint64_t value = 0;
    switch (*cls) {
      case isa::BranchClass::RegisterRead:
        value = reg(ins.inBase);
        break;
      case isa::BranchClass::MemoryRead: {
        Region r = region(ins.inBase, 1, ins.control & isa::kCtrlIndirect);
        auto it = mem_.find(r.base);
        value = it == mem_.end() ? 0 : it->second;
        break;
      }
      case isa::BranchClass::BusRead:
        if (ins.inBase > 15 || !lastByTaskId_[ins.inBase])
          throw ProgramError(ProgramErrorKind::MalformedBranch, "pc " + std::to_string(pc_) + ": no producing task");
        value = *lastByTaskId_[ins.inBase];
        break;
    }
    ++branches_;
    if (value > threshold) {
      ++taken_;
      jumpTo(static_cast<std::int64_t>(pc_) + static_cast<std::int16_t>(ins.outBase));
    } else {
      ++pc_;
    }
  }

  core::SimResult result() const {
    core::SimResult r;
    auto& s = r.stats;
    s.makespan = clock_;
    s.tasksDispatched = s.tasksIssued = s.tasksCompleted = commits_.size();
    s.scalarOps = scalarOps_;
    s.branches = branches_;
    s.branchesTaken = taken_;
    s.completedLatency = completedLatency_;
    for (std::size_t f = 0; f < catalog_.size(); ++f) {
      s.functionNames.push_back(catalog_.functions()[f].keyname);
      s.functionInstances.push_back(catalog_.instances(f));
      for (unsigned k = 0; k < catalog_.instances(f); ++k) s.unitBusy.push_back(k == 0 ? busy_[f] : 0);
      s.utilization.push_back(clock_ ? static_cast<double>(busy_[f]) / (static_cast<double>(catalog_.instances(f)) * static_cast<double>(clock_)) : 0.0);
    }
    r.commits = commits_;
    r.arch.gprs = gpr_;
    std::set<std::uint32_t> blocks(written_);
    for (const auto& [block, value] : data_.memory) blocks.insert(block);
    for (auto b : blocks)
      if (auto it = mem_.find(b); it != mem_.end()) r.arch.memory[b] = it->second;
    return r;
  }

  const isa::Program& program_;
  const accel::AcceleratorCatalog& catalog_;
  CostModel cost_;
  core::HtsConfig cfg_;
  const core::WorkloadData& data_;

  std::vector<std::uint64_t> gpr_;
  std::map<std::uint32_t, std::uint64_t> mem_;
  std::set<std::uint32_t> written_;
  std::vector<Loop> loops_;
  std::array<std::optional<std::uint64_t>, 16> lastByTaskId_{};
  std::vector<core::CommittedTask> commits_;
  std::vector<Cycle> busy_;
  std::size_t pc_ = 0;
  Cycle clock_ = 0;
  Cycle completedLatency_ = 0;
  std::uint64_t scalarOps_ = 0;
  std::uint64_t branches_ = 0;
  std::uint64_t taken_ = 0;
};

}  // namespace

core::SimResult runNaive(const isa::Program& program, const accel::AcceleratorCatalog& catalog, const CostModel& cost,
                         const core::HtsConfig& cfg, const core::WorkloadData& data) {
  cfg.validate();
  return NaiveMachine(program, catalog, cost, cfg, data).run();
}

core::SimResult runSoftware(const isa::Program& program, const accel::AcceleratorCatalog& catalog, const CostModel& cost,
                            const core::HtsConfig& cfg, const core::WorkloadData& data, std::ostream* trace) {
  core::HtsConfig sw = cfg;
  sw.speculation = false;
  sw.taskDispatchOverhead = cost.taskDispatchOverhead();
  sw.completionNotifyDelay = cost.interruptLatency;
  core::Engine engine(program, catalog, sw, data);
  engine.setTrace(trace);
  return engine.run();
}

core::SimResult runPolicy(Policy policy, const isa::Program& program, const accel::AcceleratorCatalog& catalog,
                          const CostModel& cost, const core::HtsConfig& cfg, const core::WorkloadData& data,
                          std::ostream* trace) {
  switch (policy) {
    case Policy::Naive:
      return runNaive(program, catalog, cost, cfg, data);
    case Policy::SoftwareRuntime:
      return runSoftware(program, catalog, cost, cfg, data, trace);
    case Policy::HtsNoSpec:
    case Policy::HtsSpec: {
      core::HtsConfig hw = cfg;
      hw.speculation = policy == Policy::HtsSpec;
      hw.taskDispatchOverhead = 0;
      hw.completionNotifyDelay = 0;
      core::Engine engine(program, catalog, hw, data);
      engine.setTrace(trace);
      return engine.run();
    }
  }
  throw std::logic_error("unknown policy");
}

}  // namespace htsim::policies
