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


#include "oracles.hh"

#include <algorithm>
#include <deque>
#include <limits>
#include <stdexcept>

namespace oracle {

using htsim::core::CommittedTask;
using htsim::core::Region;
using htsim::isa::Instruction;
using htsim::isa::OpKind;

namespace {

void putBits(Word& w, unsigned lsb, unsigned width, std::uint64_t value) {
  for (unsigned k = 0; k < width; ++k) {
    if (!((value >> k) & 1)) continue;
    unsigned bit = lsb + k;
    if (bit < 64)
      w.lo |= 1ull << bit;
    else
      w.hi |= 1ull << (bit - 64);
  }
}

std::uint8_t opcodeByte(const Instruction& i) {
  switch (i.opcode.kind) {
    case OpKind::Task: return i.opcode.accelId;
    case OpKind::Mov: return 0xF0;
    case OpKind::Add: return 0xF1;
    case OpKind::Mul: return 0xF2;
    case OpKind::If: return 0xF3;
    case OpKind::Jump: return 0xF4;
    case OpKind::LBeg: return 0xF5;
    case OpKind::LEnd: return 0xF6;
  }
  return 0xFF;
}

}  // namespace

Word maskEncode(const Instruction& i) {
  Word w;
  putBits(w, 0, 8, opcodeByte(i));
  putBits(w, 8, 16, i.inBase);
  putBits(w, 24, 8, i.inSize);
  putBits(w, 32, 16, i.outBase);
  putBits(w, 48, 8, i.outSize);
  putBits(w, 56, 4, i.taskId);
  putBits(w, 60, 4, i.procId);
  putBits(w, 64, 4, i.control);
  putBits(w, 68, 60, i.metadata);
  return w;
}

std::set<std::uint32_t> blocksOf(const Region& r) {
  std::set<std::uint32_t> s;
  for (std::uint64_t b = r.base; b < std::uint64_t{r.base} + r.size; ++b) s.insert(static_cast<std::uint32_t>(b));
  return s;
}

bool overlapBruteForce(const Region& a, const Region& b) {
  auto sa = blocksOf(a);
  for (auto x : blocksOf(b))
    if (sa.count(x)) return true;
  return false;
}

InOrderResult runInOrder(const htsim::isa::Program& program, const htsim::accel::AcceleratorCatalog& catalog, unsigned gprCount,
                         const htsim::core::WorkloadData& data) {
  struct Frame {
    std::size_t start, reg;
    std::uint64_t left;
  };
  InOrderResult out;
  std::vector<std::uint64_t> r(gprCount, 0);
  std::map<std::uint32_t, std::uint64_t> mem;
  for (auto [b, v] : data.memory)
    if (v) mem[b] = v;
  std::set<std::uint32_t> touched;
  for (auto [b, v] : data.memory) touched.insert(b);
  std::vector<Frame> frames;
  std::map<unsigned, std::uint64_t> tokenById;
  std::size_t pc = 0;
  std::uint64_t guard = 0;

  auto base = [&](std::uint16_t field, bool indirect) -> std::uint32_t { return indirect ? static_cast<std::uint32_t>(r.at(field)) : field; };
  auto go = [&](std::int64_t target) {
    if (target < 0) throw std::runtime_error("negative jump");
    pc = std::min<std::size_t>(static_cast<std::size_t>(target), program.size());
  };

  while (pc < program.size()) {
    if (++guard > 10'000'000) throw std::runtime_error("in-order oracle: runaway program");
    const Instruction& i = program[pc];
    const bool ind = i.control & 1;
    switch (i.opcode.kind) {
      case OpKind::Task: {
        if (!catalog.indexOfAccel(i.opcode.accelId)) throw std::runtime_error("unknown function");
        CommittedTask c;
        c.pc = pc;
        c.accelId = i.opcode.accelId;
        c.in = {base(i.inBase, ind), i.inSize};
        c.out = {base(i.outBase, ind), i.outSize};
        auto tok = data.resultTokens.find(pc);
        c.token = tok == data.resultTokens.end() ? 0 : tok->second;
        c.seq = out.commits.size();
        for (std::uint32_t k = 0; k < c.out.size; ++k) {
          std::uint32_t b = c.out.base + k;
          touched.insert(b);
          if (k == 0 && c.token)
            mem[b] = c.token;
          else
            mem.erase(b);
        }
        tokenById[i.taskId] = c.token;
        out.commits.push_back(c);
        ++pc;
        break;
      }
      case OpKind::Mov: r.at(i.outBase) = i.inBase; ++pc; break;
      case OpKind::Add: r.at(i.outBase) = r.at(i.inBase) + r.at(i.inSize); ++pc; break;
      case OpKind::Mul: r.at(i.outBase) = r.at(i.inBase) * r.at(i.inSize); ++pc; break;
      case OpKind::Jump: go(static_cast<std::int64_t>(pc) + static_cast<std::int16_t>(i.inBase)); break;
      case OpKind::LBeg: {
        std::uint64_t n = i.inSize ? i.inBase : r.at(i.inBase);
        if (n == 0) {
          int depth = 0;
          std::size_t p = pc + 1;
          for (; p < program.size(); ++p) {
            if (program[p].opcode.kind == OpKind::LBeg) ++depth;
            if (program[p].opcode.kind == OpKind::LEnd && depth-- == 0) break;
          }
          pc = std::min(p + 1, program.size());
        } else {
          r.at(i.inBase) = n;
          frames.push_back({pc + 1, i.inBase, n});
          ++pc;
        }
        break;
      }
      case OpKind::LEnd: {
        if (frames.empty()) throw std::runtime_error("lend without lbeg");
        Frame& f = frames.back();
        r.at(f.reg) = --f.left;
        if (f.left) {
          pc = f.start;
        } else {
          frames.pop_back();
          ++pc;
        }
        break;
      }
      case OpKind::If: {
        unsigned cls = (i.control >> 1) & 3;
        std::uint64_t v = 0;
        if (cls == 0) {
          v = r.at(i.inBase);
        } else if (cls == 1) {
          auto it = mem.find(base(i.inBase, ind));
          v = it == mem.end() ? 0 : it->second;
        } else if (cls == 2) {
          if (!tokenById.count(i.inBase)) throw std::runtime_error("bus-read branch without producer");
          v = tokenById[i.inBase];
        } else {
          throw std::runtime_error("bad branch class");
        }
        if (v > r.at(i.inSize))
          go(static_cast<std::int64_t>(pc) + static_cast<std::int16_t>(i.outBase));
        else
          ++pc;
        break;
      }
    }
  }
  out.arch.gprs = r;
  for (auto b : touched)
    if (auto it = mem.find(b); it != mem.end()) out.arch.memory[b] = it->second;
  return out;
}

Schedule listSchedule(const htsim::isa::Program& program, const htsim::accel::AcceleratorCatalog& catalog, unsigned width,
                      unsigned rsEntries) {
  const std::size_t n = program.size();
  constexpr Cycle kNever = std::numeric_limits<Cycle>::max();

  // Units in catalog order, then instance order.
  std::vector<std::size_t> unitFunction;
  std::vector<std::vector<std::size_t>> unitsOf(catalog.size());
  for (std::size_t f = 0; f < catalog.size(); ++f)
    for (unsigned k = 0; k < catalog.instances(f); ++k) {
      unitsOf[f].push_back(unitFunction.size());
      unitFunction.push_back(f);
    }

  std::vector<std::size_t> fn(n);
  std::vector<Cycle> latency(n);
  std::vector<std::vector<std::size_t>> earlier(n);  // conflicting earlier tasks
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ins = program[i];
    if (!ins.opcode.isTask()) throw std::invalid_argument("listSchedule: task-only programs");
    fn[i] = *catalog.indexOfAccel(ins.opcode.accelId);
    latency[i] = catalog.functions()[fn[i]].latency;
    Region in{ins.inBase, ins.inSize}, out{ins.outBase, ins.outSize};
    for (std::size_t j = 0; j < i; ++j) {
      Region jin{program[j].inBase, program[j].inSize}, jout{program[j].outBase, program[j].outSize};
      if (overlapBruteForce(jout, in) || overlapBruteForce(jout, out) || overlapBruteForce(jin, out)) earlier[i].push_back(j);
    }
  }

  Schedule s;
  s.tasks.assign(n, {});
  std::vector<Cycle> bcast(n, kNever), finish(n, kNever);
  std::vector<std::size_t> unitOf(n);
  std::vector<bool> unitBusy(unitFunction.size(), false);
  std::vector<std::size_t> rs;  // ascending seq
  std::deque<std::size_t> cdb;
  std::size_t nextDispatch = 0, done = 0;
  Cycle t = 1, lastEvent = 0;
  std::vector<std::size_t> running;

  while (done < n) {
    // Completions this cycle join the CDB queue in unit order.
    std::vector<std::size_t> now;
    for (auto i : running)
      if (finish[i] == t) now.push_back(i);
    std::sort(now.begin(), now.end(), [&](auto a, auto b) { return unitOf[a] < unitOf[b]; });
    for (auto i : now) {
      cdb.push_back(i);
      std::erase(running, i);
    }
    if (!cdb.empty()) {
      auto i = cdb.front();
      cdb.pop_front();
      bcast[i] = t;
      s.tasks[i].broadcast = t;
      unitBusy[unitOf[i]] = false;
      ++done;
      lastEvent = t;
    }
    for (auto it = rs.begin(); it != rs.end();) {
      auto i = *it;
      bool ready = std::all_of(earlier[i].begin(), earlier[i].end(), [&](auto j) { return bcast[j] <= t; });
      std::optional<std::size_t> unit;
      if (ready)
        for (auto u : unitsOf[fn[i]])
          if (!unitBusy[u]) {
            unit = u;
            break;
          }
      if (!unit) {
        ++it;
        continue;
      }
      unitBusy[*unit] = true;
      unitOf[i] = *unit;
      s.tasks[i].issued = t;
      finish[i] = t + latency[i];
      running.push_back(i);
      it = rs.erase(it);
    }
    for (unsigned k = 0; k < width && nextDispatch < n && rs.size() < rsEntries; ++k) {
      s.tasks[nextDispatch].dispatched = t;
      rs.push_back(nextDispatch++);
      lastEvent = t;
    }

    // Jump to the next cycle where anything can change.
    Cycle next = kNever;
    bool busyNext = !cdb.empty() || (nextDispatch < n && rs.size() < rsEntries);
    for (auto i : rs) {
      bool ready = std::all_of(earlier[i].begin(), earlier[i].end(), [&](auto j) { return bcast[j] <= t; });
      bool unitFree = std::any_of(unitsOf[fn[i]].begin(), unitsOf[fn[i]].end(), [&](auto u) { return !unitBusy[u]; });
      if (ready && unitFree) busyNext = true;
    }
    if (busyNext) next = t + 1;
    for (auto i : running) next = std::min(next, finish[i]);
    if (next == kNever) {
      if (done == n) break;
      throw std::logic_error("listSchedule: stuck");
    }
    t = next;
  }
  s.makespan = lastEvent;
  return s;
}

std::vector<std::set<std::size_t>> immediateDeps(const std::vector<std::pair<Region, Region>>& io) {
  std::vector<std::set<std::size_t>> deps(io.size());
  std::map<std::uint32_t, std::size_t> writer;
  std::map<std::uint32_t, std::set<std::size_t>> readers;
  for (std::size_t i = 0; i < io.size(); ++i) {
    const auto& [in, out] = io[i];
    for (auto b : blocksOf(in))
      if (writer.count(b)) deps[i].insert(writer[b]);
    for (auto b : blocksOf(out)) {
      if (writer.count(b)) deps[i].insert(writer[b]);
      for (auto rd : readers[b])
        if (rd != i) deps[i].insert(rd);
    }
    for (auto b : blocksOf(in)) readers[b].insert(i);
    for (auto b : blocksOf(out)) {
      writer[b] = i;
      readers[b].clear();
    }
  }
  return deps;
}

bool acyclic(const std::vector<std::set<std::size_t>>& deps) {
  std::vector<std::size_t> indeg(deps.size(), 0);
  std::vector<std::vector<std::size_t>> succ(deps.size());
  for (std::size_t i = 0; i < deps.size(); ++i)
    for (auto d : deps[i]) {
      succ.at(d).push_back(i);
      ++indeg[i];
    }
  std::deque<std::size_t> q;
  for (std::size_t i = 0; i < deps.size(); ++i)
    if (!indeg[i]) q.push_back(i);
  std::size_t seen = 0;
  while (!q.empty()) {
    auto v = q.front();
    q.pop_front();
    ++seen;
    for (auto w : succ[v])
      if (--indeg[w] == 0) q.push_back(w);
  }
  return seen == deps.size();
}

Violations checkOrdering(const std::vector<CommittedTask>& commits) {
  Violations v;
  for (std::size_t b = 0; b < commits.size(); ++b)
    for (std::size_t a = 0; a < b; ++a) {
      const auto& A = commits[a];
      const auto& B = commits[b];
      auto tag = "seq " + std::to_string(A.seq) + " -> " + std::to_string(B.seq);
      if (overlapBruteForce(A.out, B.in) && A.completed > B.issued) v.raw.push_back(tag);
      if (overlapBruteForce(A.out, B.out) && A.completed >= B.completed) v.waw.push_back(tag);
      if (overlapBruteForce(A.in, B.out) && A.completed > B.issued) v.war.push_back(tag);
    }
  return v;
}

}  // namespace oracle
