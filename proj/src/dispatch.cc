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

// Dispatch stage of the engine: task insertion, scalar and loop control,
// branch handling, speculation and TLB draining.

#include <algorithm>

#include "htsim/core.hh"

namespace htsim::core {

using isa::OpKind;

void Engine::dispatchStage() {
  unsigned used = 0;
  StallReason stall = StallReason::None;

  if (copyRemaining_ > 0) {
    stall = drainStep();
    progress_ = true;
  } else {
    while (used < cfg_.dispatchWidth) {
      if (specFault_ || (branch_ && !branch_->speculative)) {
        stall = StallReason::BranchWait;
        break;
      }
      if (pc_ >= program_.size()) {
        if (spec_) stall = StallReason::BranchWait;
        break;
      }
      const isa::Instruction& ins = program_[pc_];
      if (!ins.opcode.isTask()) {
        if (used > 0) break;
        try {
          if (ins.opcode.kind == OpKind::If) {
            if (!dispatchBranch(ins)) {
              stall = StallReason::NestedSpeculation;
              break;
            }
          } else {
            executeScalar(ins);
            ++stats_.scalarOps;
          }
        } catch (const ProgramError& e) {
          if (!spec_) throw;
          specFault_ = e.what();
          specFaultKind_ = e.kind();
          stall = StallReason::BranchWait;
          break;
        }
        ++events_.scalar;
        lastActivity_ = cycle_;
        used = cfg_.dispatchWidth;
        break;
      }

      if (rs_.size() >= cfg_.rsEntries) {
        stall = StallReason::RsFull;
        break;
      }
      if (needsMapping(ins) && !mappingAvailable(ins)) {
        if (used > 0) break;
        StallReason r = drainStep();
        if (r != StallReason::None) {
          stall = r;
          if (r == StallReason::TlbCopy) progress_ = true;
          break;
        }
        continue;
      }
      if (cfg_.taskDispatchOverhead > 0) {
        if (!swArmed_) {
          swRemaining_ = cfg_.taskDispatchOverhead;
          swArmed_ = true;
        }
        if (swRemaining_ > 0) {
          --swRemaining_;
          stall = StallReason::SoftwareOverhead;
          progress_ = true;
          break;
        }
      }
      try {
        dispatchTask(ins);
      } catch (const ProgramError& e) {
        if (!spec_) throw;
        specFault_ = e.what();
        specFaultKind_ = e.kind();
        stall = StallReason::BranchWait;
        break;
      }
      ++used;
      if (cfg_.taskDispatchOverhead > 0) {
        swArmed_ = false;
        break;
      }
    }
  }

  lastDispatchUsed_ = used;
  lastStall_ = stall;
  events_.stall = stall;
  if (stall != StallReason::None) ++stats_.stalls[stall];
}

Region Engine::resolveRegion(std::uint16_t base, std::uint8_t size, bool indirect) const {
  if (!indirect) return {base, size};
  std::uint64_t v = readGpr(base);
  if (v > 0xFFFF)
    throw ProgramError(ProgramErrorKind::BadRegister,
                       "pc " + std::to_string(pc_) + ": indirect base in R" + std::to_string(base) + " exceeds 16 bits");
  return {static_cast<std::uint32_t>(v), size};
}

std::uint64_t Engine::readGpr(std::size_t reg) const {
  if (reg >= gpr_.size())
    throw ProgramError(ProgramErrorKind::BadRegister, "pc " + std::to_string(pc_) + ": register R" + std::to_string(reg) + " does not exist");
  return gpr_[reg];
}

void Engine::writeGpr(std::size_t reg, std::uint64_t value) {
  readGpr(reg);
  gpr_[reg] = value;
}

void Engine::setPc(std::int64_t target) {
  if (target < 0) throw ProgramError(ProgramErrorKind::PcOutOfRange, "pc " + std::to_string(pc_) + ": jump target is negative");
  pc_ = std::min<std::size_t>(static_cast<std::size_t>(target), program_.size());
}

bool Engine::needsMapping(const isa::Instruction& ins) const { return spec_ && ins.opcode.isTask() && ins.outSize > 0; }

bool Engine::mappingAvailable(const isa::Instruction& ins) const { return !tlb_.full() && tlb_.allocate(ins.outSize).has_value(); }

void Engine::dispatchTask(const isa::Instruction& ins) {
  const bool indirect = ins.control & isa::kCtrlIndirect;
  const Region in = resolveRegion(ins.inBase, ins.inSize, indirect);
  const Region out = resolveRegion(ins.outBase, ins.outSize, indirect);
  const Region tm = tlb_.window();
  if (in.overlaps(tm) || out.overlaps(tm))
    throw ProgramError(ProgramErrorKind::ReservedRegion, "pc " + std::to_string(pc_) + ": region overlaps transactional memory");

  TaskRecord t;
  t.seq = tasks_.size();
  t.pc = pc_;
  t.kind = TaskKind::Accelerator;
  t.instr = ins;
  t.function = *catalog_.indexOfAccel(ins.opcode.accelId);
  t.logicalIn = in;
  t.logicalOut = out;
  t.effIn = tlb_.translate(in);
  if (spec_ && !out.empty()) {
    Region mapped = *tlb_.allocate(out.size);
    tlb_.insert(out, mapped, spec_->id);
    t.effOut = {mapped};
  } else {
    t.effOut = tlb_.translate(out);
  }
  if (spec_) t.spec = spec_->id;

  Hazards h = tracker_.scan(t.effIn, t.effOut);
  stats_.rawEdges += h.raw.size();
  stats_.wawEdges += h.waw.size();
  stats_.warEdges += h.war.size();
  t.deps = h.all();
  for (const auto& r : t.effIn) tracker_.recordRead(r, t.seq);
  for (const auto& r : t.effOut) tracker_.recordWrite(r, t.seq);
  for (Seq d : t.deps) tasks_[d].waiters.push_back(t.seq);

  t.state = t.deps.empty() ? TaskState::Ready : TaskState::Waiting;
  t.dispatched = cycle_;
  t.token = data_.tokenFor(pc_);
  lastByTaskId_[ins.taskId & 0xF] = t.seq;
  rs_.push_back(t.seq);
  events_.dispatched.push_back(t.seq);
  tasks_.push_back(std::move(t));

  ++stats_.tasksDispatched;
  ++pc_;
  lastActivity_ = cycle_;
  progress_ = true;
}

std::size_t Engine::matchingLEnd(std::size_t lbegPc) const {
  int depth = 0;
  for (std::size_t p = lbegPc + 1; p < program_.size(); ++p) {
    auto k = program_[p].opcode.kind;
    if (k == OpKind::LBeg) ++depth;
    if (k == OpKind::LEnd) {
      if (depth == 0) return p;
      --depth;
    }
  }
  return program_.size();
}

void Engine::executeScalar(const isa::Instruction& ins) {
  switch (ins.opcode.kind) {
    case OpKind::Mov:
      writeGpr(ins.outBase, ins.inBase);
      ++pc_;
      break;
    case OpKind::Add:
      writeGpr(ins.outBase, readGpr(ins.inBase) + readGpr(ins.inSize));
      ++pc_;
      break;
    case OpKind::Mul:
      writeGpr(ins.outBase, readGpr(ins.inBase) * readGpr(ins.inSize));
      ++pc_;
      break;
    case OpKind::Jump:
      setPc(static_cast<std::int64_t>(pc_) + static_cast<std::int16_t>(ins.inBase));
      break;
    case OpKind::LBeg: {
      std::size_t ctr = ins.inBase;
      std::uint64_t iterations = ins.inSize == 0 ? readGpr(ctr) : ins.inBase;
      readGpr(ctr);
      if (iterations == 0) {
        pc_ = std::min(matchingLEnd(pc_) + 1, program_.size());
        break;
      }
      gpr_[ctr] = iterations;
      loops_.push_back({pc_ + 1, ctr, iterations});
      ++pc_;
      break;
    }
    case OpKind::LEnd: {
      if (loops_.empty())
        throw ProgramError(ProgramErrorKind::LEndWithoutLBeg, "pc " + std::to_string(pc_) + ": lend without an open loop");
      auto& f = loops_.back();
      --f.remaining;
      gpr_[f.counterReg] = f.remaining;
      if (f.remaining > 0) {
        pc_ = f.bodyStart;
      } else {
        loops_.pop_back();
        ++pc_;
      }
      break;
    }
    case OpKind::Task:
    case OpKind::If:
      break;
  }
}

bool Engine::dispatchBranch(const isa::Instruction& ins) {
  auto cls = ins.branchClass();
  if (!cls) throw ProgramError(ProgramErrorKind::MalformedBranch, "pc " + std::to_string(pc_) + ": invalid branch class");
  const std::uint64_t threshold = readGpr(ins.inSize);
  const std::int64_t taken = static_cast<std::int64_t>(pc_) + static_cast<std::int16_t>(ins.outBase);

  auto resolveNow = [&](std::uint64_t value) {
    bool t = value > threshold;
    if (t)
      setPc(taken);
    else
      ++pc_;
    ++stats_.branches;
    if (t) ++stats_.branchesTaken;
  };

  if (*cls == isa::BranchClass::RegisterRead) {
    resolveNow(readGpr(ins.inBase));
    return true;
  }

  PendingBranch b;
  b.ifPc = pc_;
  b.cls = *cls;
  b.takenPc = taken;
  b.notTakenPc = pc_ + 1;
  b.threshold = threshold;

  if (*cls == isa::BranchClass::BusRead) {
    if (ins.inBase > 15 || !lastByTaskId_[ins.inBase])
      throw ProgramError(ProgramErrorKind::MalformedBranch,
                         "pc " + std::to_string(pc_) + ": no producing task with ID " + std::to_string(ins.inBase));
    const TaskRecord& producer = tasks_[*lastByTaskId_[ins.inBase]];
    if (producer.notified) {
      resolveNow(producer.token);
      return true;
    }
    if (spec_) return false;
    b.waitSeq = producer.seq;
  } else {
    if (spec_) return false;
    const bool indirect = ins.control & isa::kCtrlIndirect;
    const Region logical = resolveRegion(ins.inBase, 1, indirect);
    TaskRecord t;
    t.seq = tasks_.size();
    t.pc = pc_;
    t.kind = TaskKind::MemoryRead;
    t.instr = ins;
    t.logicalIn = logical;
    t.effIn = {Region{tlb_.translateBlock(logical.base), 1}};
    Hazards h = tracker_.scan(t.effIn, {});
    stats_.rawEdges += h.raw.size();
    t.deps = h.raw;
    tracker_.recordRead(t.effIn.front(), t.seq);
    for (Seq d : t.deps) tasks_[d].waiters.push_back(t.seq);
    t.state = t.deps.empty() ? TaskState::Ready : TaskState::Waiting;
    t.dispatched = cycle_;
    b.waitSeq = t.seq;
    memRead_ = t.seq;
    events_.dispatched.push_back(t.seq);
    tasks_.push_back(std::move(t));
  }

  progress_ = true;
  branch_ = b;
  ++pc_;
  if (cfg_.speculation) enterSpeculation();
  return true;
}

void Engine::enterSpeculation() {
  Speculation s;
  s.id = nextSpecId_++;
  s.firstSeq = tasks_.size();
  s.snapshot = {gpr_, loops_, lastByTaskId_};
  spec_ = std::move(s);
  branch_->speculative = true;
  ++stats_.spec.entered;
  events_.spec.push_back("enter " + std::to_string(spec_->id));
}

void Engine::resolveBranch(std::uint64_t value) {
  PendingBranch b = *branch_;
  branch_.reset();
  tmExhaustedEpisode_ = false;
  const bool taken = value > b.threshold;
  ++stats_.branches;
  if (taken) ++stats_.branchesTaken;
  if (!b.speculative) {
    if (taken)
      setPc(b.takenPc);
    else
      pc_ = b.notTakenPc;
    return;
  }
  if (taken)
    squashSpeculation(b.takenPc);
  else
    commitSpeculation();
}

void Engine::commitSpeculation() {
  if (specFault_) {
    std::string what = *specFault_;
    specFault_.reset();
    throw ProgramError(specFaultKind_, what);
  }
  for (std::size_t s = spec_->firstSeq; s < tasks_.size(); ++s) tasks_[s].spec.reset();
  tlb_.commit(spec_->id);
  events_.spec.push_back("commit " + std::to_string(spec_->id));
  ++stats_.spec.committed;
  spec_.reset();
}

void Engine::squashSpeculation(std::int64_t takenPc) {
  const SpecId id = spec_->id;
  std::vector<Seq> aborted;
  for (std::size_t s = spec_->firstSeq; s < tasks_.size(); ++s) {
    auto& t = tasks_[s];
    if (t.spec != id) continue;
    if (t.state == TaskState::Running) {
      pool_.abort(*t.unit);
      stats_.abortedBusy += cycle_ + 1 - t.issued;
    }
    t.state = TaskState::Aborted;
    t.deps.clear();
    tracker_.retire(t.seq);
    aborted.push_back(t.seq);
  }
  auto isAborted = [this](Seq s) { return tasks_[s].state == TaskState::Aborted; };
  std::erase_if(rs_, isAborted);
  std::erase_if(cdb_, [&](const CdbTicket& c) { return isAborted(c.seq); });
  std::erase_if(notifyQueue_, [&](const auto& n) { return isAborted(n.second); });
  for (auto& t : tasks_) std::erase_if(t.waiters, isAborted);
  stats_.spec.tasksAborted += aborted.size();

  tlb_.squash(id);
  gpr_ = spec_->snapshot.gpr;
  loops_ = spec_->snapshot.loops;
  lastByTaskId_ = spec_->snapshot.lastByTaskId;
  specFault_.reset();
  events_.spec.push_back("squash " + std::to_string(id));
  ++stats_.spec.squashed;
  spec_.reset();
  setPc(takenPc);
}

StallReason Engine::drainStep() {
  if (copyRemaining_ > 0) {
    if (--copyRemaining_ == 0) finishEviction();
    return StallReason::TlbCopy;
  }
  auto victim = tlb_.oldestCommitted();
  if (!victim) {
    if (!tmExhaustedEpisode_) {
      tmExhaustedEpisode_ = true;
      ++stats_.spec.tmExhausted;
    }
    return StallReason::TlbWait;
  }
  if (tracker_.touches(victim->mapped) || tracker_.touches(victim->orig)) return StallReason::TlbWait;
  evicting_ = victim;
  copyRemaining_ = cfg_.copyCyclesPerBlock * victim->orig.size;
  if (copyRemaining_ == 0) {
    finishEviction();
    return StallReason::None;
  }
  if (--copyRemaining_ == 0) finishEviction();
  return StallReason::TlbCopy;
}

void Engine::finishEviction() {
  const TlbEntry e = *evicting_;
  evicting_.reset();
  for (std::uint32_t k = 0; k < e.orig.size; ++k) {
    auto it = mem_.find(e.mapped.base + k);
    std::uint32_t dst = e.orig.base + k;
    if (it != mem_.end()) {
      mem_[dst] = it->second;
      mem_.erase(it);
    } else {
      mem_.erase(dst);
    }
  }
  tlb_.evict(e.id);
  ++stats_.spec.tlbEvictions;
  stats_.spec.evictedBlocks += e.orig.size;
  events_.spec.push_back("evict " + std::to_string(e.id));
}

}  // namespace htsim::core
