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

#include <algorithm>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>

#include "htsim/core.hh"
#include "json.hpp"

namespace htsim::core {

void HtsConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  need(dispatchWidth >= 1, "dispatch_width must be at least 1");
  need(rsEntries >= 1, "rs_entries must be at least 1");
  need(gprCount >= 1 && gprCount <= 0x10000, "gpr_count must be in [1, 65536]");
  need(tlbEntries >= 1, "tlb_entries must be at least 1");
  need(tmSize >= 1, "tm_size must be at least 1");
  need(std::uint64_t{tmBase} + tmSize <= std::numeric_limits<std::uint32_t>::max(), "tm window exceeds the address space");
  need(memReadLatency >= 1, "mem_read_latency must be at least 1");
  need(deadlockHorizon >= 1, "deadlock_horizon must be at least 1");
}

std::uint64_t WorkloadData::tokenFor(std::size_t pc) const {
  auto it = resultTokens.find(pc);
  return it == resultTokens.end() ? 0 : it->second;
}

const char* toString(TaskState s) {
  switch (s) {
    case TaskState::Waiting: return "waiting";
    case TaskState::Ready: return "ready";
    case TaskState::Running: return "running";
    case TaskState::Done: return "done";
    case TaskState::Aborted: return "aborted";
  }
  return "?";
}

const char* toString(StallReason r) {
  switch (r) {
    case StallReason::None: return "none";
    case StallReason::RsFull: return "rs_full";
    case StallReason::BranchWait: return "branch_wait";
    case StallReason::NestedSpeculation: return "nested_speculation";
    case StallReason::TlbCopy: return "tlb_copy";
    case StallReason::TlbWait: return "tlb_wait";
    case StallReason::SoftwareOverhead: return "software_overhead";
  }
  return "?";
}

Cycle& StallCounters::operator[](StallReason r) {
  switch (r) {
    case StallReason::RsFull: return rsFull;
    case StallReason::BranchWait: return branchWait;
    case StallReason::NestedSpeculation: return nestedSpeculation;
    case StallReason::TlbCopy: return tlbCopy;
    case StallReason::TlbWait: return tlbWait;
    case StallReason::SoftwareOverhead: return softwareOverhead;
    case StallReason::None: break;
  }
  throw std::logic_error("no counter for stall reason none");
}

Engine::Engine(isa::Program program, accel::AcceleratorCatalog catalog, HtsConfig config, WorkloadData data)
    : program_(std::move(program)),
      catalog_(std::move(catalog)),
      cfg_(config),
      data_(std::move(data)),
      pool_(catalog_),
      tlb_(cfg_.tlbEntries, cfg_.tmBase, cfg_.tmSize) {
  cfg_.validate();
  for (std::size_t pc = 0; pc < program_.size(); ++pc) {
    const auto& ins = program_[pc];
    if (ins.opcode.isTask() && !catalog_.indexOfAccel(ins.opcode.accelId))
      throw ProgramError(ProgramErrorKind::UnknownFunction,
                         "pc " + std::to_string(pc) + ": accelerator ID " + std::to_string(ins.opcode.accelId) + " is not in the catalog");
  }
  gpr_.assign(cfg_.gprCount, 0);
  for (const auto& [block, value] : data_.memory)
    if (value != 0) mem_[block] = value;
  for (const auto& f : catalog_.functions()) stats_.functionNames.push_back(f.keyname);
  for (std::size_t f = 0; f < catalog_.size(); ++f) stats_.functionInstances.push_back(catalog_.instances(f));
}

bool Engine::finished() const {
  return pc_ >= program_.size() && !branch_ && !spec_ && !specFault_ && rs_.empty() && !memRead_ && cdb_.empty() &&
         notifyQueue_.empty() && copyRemaining_ == 0 && pool_.allIdle();
}

void Engine::step() {
  if (finished()) return;
  ++cycle_;
  progress_ = false;
  events_ = CycleEvents{};
  tickStage();
  cdbStage();
  issueStage();
  dispatchStage();
  accountStage();
}

void Engine::tickStage() {
  for (const auto& e : pool_.tick()) cdb_.push_back({nextTicket_++, e.seq, e.unit});
  if (memReadRunning_ && --memReadRemaining_ == 0) {
    memReadRunning_ = false;
    cdb_.push_back({nextTicket_++, *memRead_, pool_.units().size()});
  }
  if (memReadRunning_ || !cdb_.empty()) progress_ = true;
  for (const auto& u : pool_.units())
    if (u.state() == accel::AcceleratorUnit::State::Running) progress_ = true;
}

void Engine::cdbStage() {
  if (!cdb_.empty()) {
    Seq seq = cdb_.front().seq;
    cdb_.pop_front();
    events_.broadcast = seq;
    lastActivity_ = cycle_;
    progress_ = true;
    broadcast(seq);
  }
  while (!notifyQueue_.empty() && notifyQueue_.front().first <= cycle_) {
    Seq seq = notifyQueue_.front().second;
    notifyQueue_.pop_front();
    progress_ = true;
    notify(seq);
  }
}

void Engine::writeTaskOutput(const TaskRecord& t) {
  bool first = true;
  for (const auto& piece : t.effOut) {
    for (std::uint64_t b = piece.base; b < piece.end(); ++b) {
      auto block = static_cast<std::uint32_t>(b);
      std::uint64_t v = first ? t.token : 0;
      first = false;
      if (v)
        mem_[block] = v;
      else
        mem_.erase(block);
    }
  }
}

void Engine::broadcast(Seq seq) {
  auto& t = tasks_[seq];
  t.state = TaskState::Done;
  t.completed = cycle_;
  if (t.kind == TaskKind::Accelerator) {
    std::size_t u = *t.unit;
    const auto& unit = pool_.unit(u);
    stats_.cdbWait += cycle_ - unit.readyAt();
    stats_.completedLatency += unit.latency();
    pool_.release(u);
    writeTaskOutput(t);
    ++stats_.tasksCompleted;
    if (cfg_.completionNotifyDelay > 0) {
      notifyQueue_.push_back({cycle_ + cfg_.completionNotifyDelay, seq});
      return;
    }
  }
  notify(seq);
}

void Engine::notify(Seq seq) {
  auto& t = tasks_[seq];
  t.notified = true;
  tracker_.retire(seq);
  for (Seq w : t.waiters) {
    auto& waiter = tasks_[w];
    std::erase(waiter.deps, seq);
    if (waiter.deps.empty() && waiter.state == TaskState::Waiting) waiter.state = TaskState::Ready;
  }
  if (branch_ && branch_->waitSeq == seq) {
    std::uint64_t value;
    if (t.kind == TaskKind::MemoryRead) {
      auto it = mem_.find(t.effIn.front().base);
      value = it == mem_.end() ? 0 : it->second;
      memRead_.reset();
    } else {
      value = t.token;
    }
    resolveBranch(value);
  } else if (t.kind == TaskKind::MemoryRead) {
    memRead_.reset();
  }
}

void Engine::issueStage() {
  for (auto it = rs_.begin(); it != rs_.end();) {
    auto& t = tasks_[*it];
    if (!t.deps.empty()) {
      ++it;
      continue;
    }
    auto u = pool_.idleUnit(t.function);
    if (!u) {
      ++it;
      continue;
    }
    pool_.deliver(*u, t.seq, cycle_, t.spec);
    t.state = TaskState::Running;
    t.unit = *u;
    t.issued = cycle_;
    ++stats_.tasksIssued;
    events_.issued.emplace_back(t.seq, *u);
    progress_ = true;
    it = rs_.erase(it);
  }
  if (memRead_ && !memReadRunning_) {
    auto& t = tasks_[*memRead_];
    if (t.state == TaskState::Ready) {
      t.state = TaskState::Running;
      t.issued = cycle_;
      memReadRunning_ = true;
      memReadRemaining_ = cfg_.memReadLatency;
      events_.issued.emplace_back(t.seq, pool_.units().size());
      progress_ = true;
    }
  }
}

void Engine::accountStage() {
  pool_.accountBusy(1);
  if (progress_) {
    lastProgress_ = cycle_;
  } else if (cycle_ - lastProgress_ >= cfg_.deadlockHorizon) {
    throw DeadlockError(cycle_, "no scheduler progress for " + std::to_string(cfg_.deadlockHorizon) + " cycles (cycle " +
                                    std::to_string(cycle_) + ", pc " + std::to_string(pc_) + ")");
  }
  if (cfg_.checkInvariants) verifyInvariants();
  emitTrace();
}

void Engine::emitTrace() {
  if (!trace_) return;
  const auto& ev = events_;
  if (ev.dispatched.empty() && ev.issued.empty() && !ev.broadcast && ev.spec.empty() && ev.scalar == 0) return;
  nlohmann::ordered_json j;
  j["cycle"] = cycle_;
  j["dispatched"] = ev.dispatched;
  auto issued = nlohmann::ordered_json::array();
  for (const auto& [seq, unit] : ev.issued) issued.push_back({seq, unit});
  j["issued"] = issued;
  j["broadcast"] = ev.broadcast ? nlohmann::ordered_json(*ev.broadcast) : nlohmann::ordered_json(nullptr);
  j["scalar"] = ev.scalar;
  j["stall"] = ev.stall == StallReason::None ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(toString(ev.stall));
  j["spec"] = ev.spec;
  *trace_ << j.dump() << '\n';
}

Cycle Engine::quietCycles() const {
  if (!cdb_.empty()) return 0;
  for (const auto& u : pool_.units())
    if (u.state() == accel::AcceleratorUnit::State::Aborting || u.state() == accel::AcceleratorUnit::State::Finished) return 0;
  for (Seq s : rs_)
    if (tasks_[s].deps.empty() && pool_.idleUnit(tasks_[s].function)) return 0;
  if (memRead_ && !memReadRunning_ && tasks_[*memRead_].state == TaskState::Ready) return 0;

  Cycle bound = std::numeric_limits<Cycle>::max();
  bool countdown = false;
  for (const auto& u : pool_.units()) {
    if (u.state() == accel::AcceleratorUnit::State::Running) {
      bound = std::min(bound, u.remaining() - 1);
      countdown = true;
    }
  }
  if (memReadRunning_) {
    bound = std::min(bound, memReadRemaining_ - 1);
    countdown = true;
  }
  if (!notifyQueue_.empty()) {
    bound = std::min(bound, notifyQueue_.front().first - cycle_ - 1);
    countdown = true;
  }

  bool dispatchDone = pc_ >= program_.size() && !branch_ && !spec_ && !specFault_;
  if (!dispatchDone) {
    if (lastDispatchUsed_ > 0) return 0;
    switch (lastStall_) {
      case StallReason::RsFull:
      case StallReason::BranchWait:
      case StallReason::NestedSpeculation:
      case StallReason::TlbWait:
        break;
      case StallReason::SoftwareOverhead:
        bound = std::min(bound, swRemaining_);
        countdown = true;
        break;
      case StallReason::TlbCopy:
        if (copyRemaining_ == 0) return 0;
        bound = std::min(bound, copyRemaining_ - 1);
        countdown = true;
        break;
      case StallReason::None:
        return 0;
    }
  }
  return countdown ? bound : 0;
}

void Engine::skipCycles(Cycle n) {
  cycle_ += n;
  pool_.skip(n);
  if (memReadRunning_) memReadRemaining_ -= n;
  pool_.accountBusy(n);
  bool dispatchDone = pc_ >= program_.size() && !branch_ && !spec_ && !specFault_;
  if (!dispatchDone && lastStall_ != StallReason::None) {
    stats_.stalls[lastStall_] += n;
    if (lastStall_ == StallReason::SoftwareOverhead) swRemaining_ -= n;
    if (lastStall_ == StallReason::TlbCopy) copyRemaining_ -= n;
  }
  lastProgress_ = cycle_;
}

SimResult Engine::run() {
  while (!finished()) {
    step();
    if (finished()) break;
    if (Cycle n = quietCycles(); n > 0) skipCycles(n);
  }
  return result();
}

SimResult Engine::result() const {
  SimResult r;
  r.stats = stats_;
  r.stats.makespan = lastActivity_;
  r.stats.unitBusy = pool_.busyCycles();
  r.stats.utilization.assign(catalog_.size(), 0.0);
  if (lastActivity_ > 0) {
    std::vector<Cycle> perFunction(catalog_.size(), 0);
    for (const auto& u : pool_.units()) perFunction[u.functionIndex()] += pool_.busyCycles()[u.index()];
    for (std::size_t f = 0; f < catalog_.size(); ++f)
      r.stats.utilization[f] = static_cast<double>(perFunction[f]) / (static_cast<double>(catalog_.instances(f)) * static_cast<double>(lastActivity_));
  }

  std::set<std::uint32_t> blocks;
  for (const auto& [block, value] : data_.memory) blocks.insert(block);
  for (const auto& t : tasks_) {
    if (t.kind != TaskKind::Accelerator || t.state == TaskState::Aborted) continue;
    CommittedTask c;
    c.seq = t.seq;
    c.pc = t.pc;
    c.accelId = t.instr.opcode.accelId;
    c.in = t.logicalIn;
    c.out = t.logicalOut;
    c.token = t.token;
    c.dispatched = t.dispatched;
    c.issued = t.issued;
    c.completed = t.completed;
    r.commits.push_back(c);
    for (std::uint64_t b = t.logicalOut.base; b < t.logicalOut.end(); ++b) blocks.insert(static_cast<std::uint32_t>(b));
  }
  r.arch.gprs = gpr_;
  for (std::uint32_t b : blocks) {
    auto it = mem_.find(tlb_.translateBlock(b));
    if (it != mem_.end() && it->second != 0) r.arch.memory[b] = it->second;
  }
  return r;
}

void Engine::verifyInvariants() const {
  auto fail = [this](const std::string& what) { throw std::logic_error("cycle " + std::to_string(cycle_) + ": " + what); };
  if (!pool_.asrConsistent()) fail("ASR disagrees with unit occupancy");
  if (rs_.size() > cfg_.rsEntries) fail("reservation stations over capacity");
  for (Seq s : rs_) {
    const auto& t = tasks_[s];
    if (t.state != TaskState::Waiting && t.state != TaskState::Ready) fail("RS entry " + std::to_string(s) + " is " + toString(t.state));
    if (t.state == TaskState::Ready && !t.deps.empty()) fail("ready RS entry " + std::to_string(s) + " has dependencies");
    for (Seq d : t.deps) {
      if (d >= s) fail("dependency on a younger task");
      if (tasks_[d].state == TaskState::Aborted) fail("live dependency on aborted task " + std::to_string(d));
    }
  }
  for (const auto& e : tracker_.entries()) {
    const auto& t = tasks_[e.seq];
    if (t.state == TaskState::Aborted) fail("tracker holds aborted task " + std::to_string(e.seq));
    if (t.notified) fail("tracker holds retired task " + std::to_string(e.seq));
  }
  if (!tlb_.mappingsValid()) fail("TLB mappings overlap or leave the TM window");
  if (tlb_.size() > tlb_.capacity()) fail("TLB over capacity");
  for (const auto& e : tlb_.entries())
    if (!e.committed && (!spec_ || e.spec != spec_->id)) fail("uncommitted TLB entry outside the active speculation");
  for (std::size_t k = 1; k < cdb_.size(); ++k)
    if (cdb_[k].ticket <= cdb_[k - 1].ticket) fail("CDB tickets out of order");
  for (const auto& u : pool_.units()) {
    if (u.state() == accel::AcceleratorUnit::State::Running || u.state() == accel::AcceleratorUnit::State::Finished) {
      const auto& t = tasks_[u.seq()];
      if (t.state != TaskState::Running || t.unit != u.index()) fail("unit " + std::to_string(u.index()) + " holds a task not running on it");
    }
  }
}

}  // namespace htsim::core
