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


#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "htsim/core.hh"
#include "htsim/error.hh"
#include "support/oracles.hh"
#include "support/random_program.hh"

namespace {

using namespace htsim;
using core::Engine;
using core::HtsConfig;
using core::SimResult;

const accel::AcceleratorCatalog& catalog() {
  static const auto c = accel::defaultCatalog();
  return c;
}

isa::Program assemble(const std::string& text) { return isa::assemble(text, catalog().keymap()); }

SimResult run(const std::string& text, HtsConfig cfg = {}, core::WorkloadData data = {}) {
  cfg.checkInvariants = true;
  return Engine(assemble(text), catalog(), cfg, std::move(data)).run();
}

const char* kListing =
    "real_fir 10 2 13 2 0 0 0 0000\n"
    "complex_fir 16 2 19 2 1 0 0 0000\n"
    "adaptive_fir 23 3 28 3 2 0 0 0000\n"
    "vector_dot 40 4 48 4 3 0 0 0000\n"
    "iir 32 3 36 3 4 0 0 0000\n";

void expectAccountingIdentity(const core::SimStats& s) {
  Cycle busy = 0;
  for (Cycle b : s.unitBusy) busy += b;
  EXPECT_EQ(busy, s.completedLatency + s.cdbWait + s.abortedBusy);
}

TEST(Engine, EmptyProgram) {
  auto r = run("");
  EXPECT_EQ(r.stats.makespan, 0u);
  EXPECT_TRUE(r.commits.empty());
}

TEST(Engine, SingleTask) {
  // Dispatch at 1, issue at 2, result broadcast after 53 cycles.
  auto r = run("vector_dot 40 4 48 4 3 0 0 0000");
  EXPECT_EQ(r.stats.makespan, 55u);
  ASSERT_EQ(r.commits.size(), 1u);
  EXPECT_EQ(r.commits[0].dispatched, 1u);
  EXPECT_EQ(r.commits[0].issued, 2u);
  EXPECT_EQ(r.commits[0].completed, 55u);
}

TEST(Engine, ListingMatchesListSchedule) {
  auto p = assemble(kListing);
  auto oracleSchedule = oracle::listSchedule(p, catalog(), 2, 16);
  auto r = run(kListing);
  EXPECT_EQ(r.stats.makespan, oracleSchedule.makespan);
  EXPECT_EQ(r.stats.makespan, 4387u);
  ASSERT_EQ(r.commits.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(r.commits[k].dispatched, oracleSchedule.tasks[k].dispatched);
    EXPECT_EQ(r.commits[k].issued, oracleSchedule.tasks[k].issued);
    EXPECT_EQ(r.commits[k].completed, oracleSchedule.tasks[k].broadcast);
  }
  EXPECT_EQ(r.stats.rawEdges + r.stats.wawEdges + r.stats.warEdges, 0u);
}

TEST(Engine, RandomTaskProgramsMatchListSchedule) {
  std::mt19937_64 rng(42);
  for (int round = 0; round < 60; ++round) {
    for (unsigned width : {1u, 2u, 4u}) {
      for (unsigned rs : {2u, 16u}) {
        auto p = testing_support::randomTaskProgram(rng, 1 + rng() % 24, catalog());
        HtsConfig cfg;
        cfg.dispatchWidth = width;
        cfg.rsEntries = rs;
        cfg.checkInvariants = true;
        auto r = Engine(p, catalog(), cfg).run();
        auto s = oracle::listSchedule(p, catalog(), width, rs);
        ASSERT_EQ(r.stats.makespan, s.makespan) << "round " << round << " width " << width << " rs " << rs;
        for (std::size_t k = 0; k < p.size(); ++k) ASSERT_EQ(r.commits[k].completed, s.tasks[k].broadcast);
      }
    }
  }
}

TEST(Engine, MovWritesRegister) {
  auto r = run("mov 58 0 2 0 1 0 0 0001");
  EXPECT_EQ(r.arch.gprs[2], 0x58u);
  EXPECT_EQ(r.stats.scalarOps, 1u);
}

TEST(Engine, AddOfZeroRegisters) {
  auto r = run("mov 7 0 3 0 0 0 0 1\nadd 0 0 3 0 0 0 0 1");
  EXPECT_EQ(r.arch.gprs[3], 0u);
}

TEST(Engine, CountedLoopRunsBody) {
  auto r = run(
      "lbeg 4 4 0 0 4 0 0 0001\n"
      "vector_dot 40 4 48 4 3 0 0 0000\n"
      "lend 0 0 0 0 5 0 0 0001\n");
  EXPECT_EQ(r.commits.size(), 4u);
  EXPECT_EQ(r.arch.gprs[4], 0u);
}

TEST(Engine, RegisterCountedLoopWithZeroTrips) {
  auto r = run(
      "lbeg 4 0 0 0 4 0 0 0001\n"
      "vector_dot 40 4 48 4 3 0 0 0000\n"
      "lend 0 0 0 0 5 0 0 0001\n"
      "vector_max 40 1 50 1 5 0 0 0000\n");
  ASSERT_EQ(r.commits.size(), 1u);
  EXPECT_EQ(r.commits[0].pc, 3u);
}

TEST(Engine, RegisterBranchNotTakenWhenEqual) {
  // 3 > 3 is false so the vector_max at pc 3 runs.
  auto r = run(
      "mov 3 0 1 0 0 0 0 1\n"
      "mov 3 0 2 0 0 0 0 1\n"
      "if 1 2 2 0 0 0 0 1\n"
      "vector_max 40 1 50 1 5 0 0 0000\n");
  EXPECT_EQ(r.commits.size(), 1u);
  EXPECT_EQ(r.stats.branches, 1u);
  EXPECT_EQ(r.stats.branchesTaken, 0u);
  EXPECT_EQ(r.stats.spec.entered, 0u);
}

TEST(Engine, RegisterBranchTaken) {
  auto r = run(
      "mov 4 0 1 0 0 0 0 1\n"
      "mov 3 0 2 0 0 0 0 1\n"
      "if 1 2 2 0 0 0 0 1\n"
      "vector_max 40 1 50 1 5 0 0 0000\n");
  EXPECT_TRUE(r.commits.empty());
  EXPECT_EQ(r.stats.branchesTaken, 1u);
}

TEST(Engine, MemoryBranchReadsBlock) {
  core::WorkloadData data;
  data.memory[0x12] = 9;
  const std::string src =
      "mov 5 0 1 0 0 0 0 1\n"
      "if 12 1 3 0 0 0 2 1\n"
      "vector_max 40 1 50 1 5 0 0 0000\n"
      "vector_max 41 1 51 1 5 0 0 0000\n"
      "vector_add 60 1 61 1 6 0 0 0000\n";
  for (bool spec : {false, true}) {
    HtsConfig cfg;
    cfg.speculation = spec;
    auto r = run(src, cfg, data);
    ASSERT_EQ(r.commits.size(), 1u) << spec;
    EXPECT_EQ(r.commits[0].pc, 4u);
    EXPECT_EQ(r.stats.branchesTaken, 1u);
    EXPECT_EQ(r.stats.spec.squashed, spec ? 1u : 0u);
  }
  data.memory[0x12] = 5;
  auto r = run(src, {}, data);
  EXPECT_EQ(r.commits.size(), 3u);
  EXPECT_EQ(r.stats.spec.committed, 1u);
}

TEST(Engine, BusBranchOnCompletedProducerResolvesImmediately) {
  core::WorkloadData data;
  data.resultTokens[0] = 7;
  // The loop delays the branch until the producer has broadcast.
  auto r = run(
      "vector_dot 40 4 48 4 3 0 0 0000\n"
      "mov 64 0 5 0 0 0 0 1\n"
      "lbeg 5 0 0 0 0 0 0 1\n"
      "lend 0 0 0 0 0 0 0 1\n"
      "mov 6 0 1 0 0 0 0 1\n"
      "if 3 1 2 0 0 0 4 1\n"
      "vector_max 40 1 50 1 5 0 0 0000\n"
      "vector_add 60 1 61 1 6 0 0 0000\n",
      {}, data);
  EXPECT_EQ(r.stats.spec.entered, 0u);
  EXPECT_EQ(r.stats.branchesTaken, 1u);
  ASSERT_EQ(r.commits.size(), 2u);
  EXPECT_EQ(r.commits[1].pc, 7u);
}

TEST(Engine, BusBranchSpeculatesOnPendingProducer) {
  core::WorkloadData data;
  data.resultTokens[0] = 1;
  auto r = run(
      "vector_dot 40 4 48 4 3 0 0 0000\n"
      "mov 6 0 1 0 0 0 0 1\n"
      "if 3 1 2 0 0 0 4 1\n"
      "vector_max 40 1 50 1 5 0 0 0000\n"
      "vector_add 60 1 61 1 6 0 0 0000\n",
      {}, data);
  EXPECT_EQ(r.stats.spec.entered, 1u);
  EXPECT_EQ(r.stats.spec.committed, 1u);
  EXPECT_EQ(r.commits.size(), 3u);
}

TEST(Engine, BusBranchWithoutProducerIsMalformed) {
  try {
    run("if 93 a 12 0 1 0 d 0000");
    FAIL();
  } catch (const ProgramError& e) {
    EXPECT_EQ(e.kind(), ProgramErrorKind::MalformedBranch);
  }
}

TEST(Engine, LEndWithoutLBeg) {
  try {
    run("lend 0 0 0 0 0 0 0 1");
    FAIL();
  } catch (const ProgramError& e) {
    EXPECT_EQ(e.kind(), ProgramErrorKind::LEndWithoutLBeg);
  }
}

TEST(Engine, BadRegister) {
  try {
    run("mov 1 0 20 0 0 0 0 1");
    FAIL();
  } catch (const ProgramError& e) {
    EXPECT_EQ(e.kind(), ProgramErrorKind::BadRegister);
  }
}

TEST(Engine, NegativeJump) {
  try {
    run("jump fff0 0 0 0 0 0 0 1");
    FAIL();
  } catch (const ProgramError& e) {
    EXPECT_EQ(e.kind(), ProgramErrorKind::PcOutOfRange);
  }
}

TEST(Engine, UnknownFunction) {
  isa::Instruction i;
  i.opcode = isa::Opcode::task(0x77);
  i.inSize = 1;
  i.outSize = 1;
  EXPECT_THROW(Engine({i}, catalog(), {}), ProgramError);
}

TEST(Engine, InvalidConfig) {
  HtsConfig cfg;
  cfg.dispatchWidth = 0;
  EXPECT_THROW(Engine({}, catalog(), cfg), ConfigError);
}

TEST(Engine, ReservedRegionRejected) {
  EXPECT_THROW(run("vector_dot f000 4 48 4 3 0 0 0000"), ProgramError);
}

TEST(Engine, SelfLoopDeadlocks) {
  HtsConfig cfg;
  cfg.deadlockHorizon = 1000;
  try {
    run("jump 0 0 0 0 0 0 0 1", cfg);
    FAIL();
  } catch (const DeadlockError& e) {
    EXPECT_GE(e.cycle(), 1000u);
  }
}

TEST(Engine, RawChainSerializes) {
  auto r = run(
      "vector_dot 10 1 20 1 0 0 0 0000\n"
      "vector_dot 20 1 30 1 1 0 0 0000\n");
  ASSERT_EQ(r.commits.size(), 2u);
  EXPECT_EQ(r.stats.rawEdges, 1u);
  EXPECT_GE(r.commits[1].issued, r.commits[0].completed);
}

TEST(Engine, RsFullStalls) {
  HtsConfig cfg;
  cfg.rsEntries = 1;
  auto r = run(kListing, cfg);
  EXPECT_GT(r.stats.stalls.rsFull, 0u);
  expectAccountingIdentity(r.stats);
}

TEST(Engine, TlbEvictionCostsCopyCycles) {
  // Two speculations in sequence remap their outputs; with a single TLB
  // entry the second one must evict what the first left behind.
  core::WorkloadData data;
  data.resultTokens[0] = 1;
  data.resultTokens[4] = 1;
  const std::string src =
      "vector_dot 40 4 48 4 3 0 0 0000\n"
      "mov 6 0 1 0 0 0 0 1\n"
      "if 3 1 2 0 0 0 4 1\n"
      "vector_add 60 1 70 4 5 0 0 0000\n"
      "iir 80 1 90 1 6 0 0 0000\n"
      "if 6 1 2 0 0 0 4 1\n"
      "vector_add 61 1 b0 4 7 0 0 0000\n";
  HtsConfig cfg;
  cfg.tlbEntries = 1;
  auto r = run(src, cfg, data);
  EXPECT_GE(r.stats.spec.tlbEvictions, 1u);
  EXPECT_GE(r.stats.spec.evictedBlocks, 4u);
  EXPECT_EQ(r.stats.stalls.tlbCopy, cfg.copyCyclesPerBlock * r.stats.spec.evictedBlocks);
  auto ref = oracle::runInOrder(assemble(src), catalog(), 16, data);
  EXPECT_EQ(r.arch, ref.arch);
}

TEST(Engine, FifthCommittedMappingEvictsOldest) {
  // Each branch waits on the previous speculative task, so every speculation
  // commits exactly one 4-block mapping.
  std::string src = "mov 6 0 1 0 0 0 0 1\nvector_dot 10 1 80 1 0 0 0 0000\n";
  for (int k = 0; k < 5; ++k) {
    char line[96];
    std::snprintf(line, sizeof line, "if %x 1 2 0 0 0 4 1\nvector_add 10 1 %x 4 %x 0 0 0000\n", k, 0x100 + 8 * k, k + 1);
    src += line;
  }
  HtsConfig cfg;
  cfg.tlbEntries = 4;
  auto r = run(src, cfg);
  EXPECT_EQ(r.stats.spec.entered, 5u);
  EXPECT_EQ(r.stats.spec.committed, 5u);
  EXPECT_EQ(r.stats.spec.tlbEvictions, 1u);
  EXPECT_EQ(r.stats.spec.evictedBlocks, 4u);
  EXPECT_EQ(r.stats.stalls.tlbCopy, 4 * cfg.copyCyclesPerBlock);
  EXPECT_EQ(r.arch, oracle::runInOrder(assemble(src), catalog()).arch);

  cfg.tlbEntries = 5;
  auto roomy = run(src, cfg);
  EXPECT_EQ(roomy.stats.spec.tlbEvictions, 0u);
  EXPECT_EQ(roomy.stats.stalls.tlbCopy, 0u);
}

TEST(Engine, CommittedMappingRemapsLaterReaders) {
  const std::string src =
      "mov 6 0 1 0 0 0 0 1\n"
      "vector_dot 10 1 80 1 0 0 0 0000\n"
      "if 0 1 2 0 0 0 4 1\n"
      "vector_add 10 1 100 4 1 0 0 0000\n"
      "vector_max 100 4 200 1 2 0 0 0000\n";
  HtsConfig cfg;
  cfg.checkInvariants = true;
  Engine e(assemble(src), catalog(), cfg);
  auto r = e.run();
  ASSERT_EQ(r.stats.spec.committed, 1u);
  ASSERT_EQ(e.tlb().size(), 2u);
  const auto& reader = e.tasks().back();
  EXPECT_EQ(reader.logicalIn, (core::Region{0x100, 4}));
  ASSERT_EQ(reader.effIn.size(), 1u);
  EXPECT_EQ(reader.effIn[0], e.tlb().entries()[0].mapped);
  EXPECT_GE(reader.effIn[0].base, cfg.tmBase);
  EXPECT_EQ(r.stats.rawEdges, 1u);
}

TEST(Engine, IndirectLoopBody) {
  const std::string src =
      "mov 58 0 2 0 1 0 0 0001\n"
      "mov 3 0 3 0 2 0 0 0001\n"
      "mov 75 0 6 0 3 0 0 0001\n"
      "lbeg 4 4 0 0 4 0 0 0001\n"
      "add 4 2 5 0 5 0 0 0001\n"
      "add 4 6 7 0 6 0 0 0001\n"
      "iir 5 3 7 3 7 0 1 0000\n"
      "lend 0 4 2 0 8 0 0 0001\n";
  auto r = run(src);
  auto ref = oracle::runInOrder(assemble(src), catalog());
  ASSERT_EQ(r.commits.size(), 4u);
  ASSERT_EQ(ref.commits.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(r.commits[k].in, ref.commits[k].in);
    EXPECT_EQ(r.commits[k].out, ref.commits[k].out);
  }
  EXPECT_EQ(r.commits[0].in, (core::Region{0x5c, 3}));
  EXPECT_EQ(r.commits[3].out, (core::Region{0x76, 3}));
  EXPECT_EQ(r.arch, ref.arch);
  expectAccountingIdentity(r.stats);
}

TEST(Engine, TraceIsDeterministic) {
  auto traceOf = [] {
    std::ostringstream os;
    HtsConfig cfg;
    Engine e(assemble(kListing), catalog(), cfg);
    e.setTrace(&os);
    e.run();
    return os.str();
  };
  const std::string a = traceOf();
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, traceOf());
  EXPECT_EQ(a.back(), '\n');
}

TEST(Engine, StepMatchesRun) {
  auto p = assemble(kListing);
  Engine stepped(p, catalog(), {});
  while (!stepped.finished()) stepped.step();
  auto ran = Engine(p, catalog(), {}).run();
  EXPECT_EQ(stepped.result().stats, ran.stats);
}

class RandomPrograms : public ::testing::TestWithParam<int> {};

TEST_P(RandomPrograms, InvariantsAndArchitecturalState) {
  std::mt19937_64 rng(1000 + GetParam());
  for (int round = 0; round < 15; ++round) {
    auto m = testing_support::randomMixedProgram(rng, 4 + rng() % 20, catalog());
    const auto ref = oracle::runInOrder(m.program, catalog(), 16, m.data);
    for (bool spec : {false, true}) {
      for (unsigned tlb : {1u, 32u}) {
        HtsConfig cfg;
        cfg.checkInvariants = true;
        cfg.speculation = spec;
        cfg.tlbEntries = tlb;
        cfg.dispatchWidth = 1 + static_cast<unsigned>(rng() % 3);
        auto r = Engine(m.program, catalog(), cfg, m.data).run();
        ASSERT_EQ(r.arch, ref.arch) << "round " << round << " spec " << spec;
        ASSERT_EQ(r.commits.size(), ref.commits.size());
        for (std::size_t k = 0; k < r.commits.size(); ++k) {
          ASSERT_EQ(r.commits[k].pc, ref.commits[k].pc);
          ASSERT_EQ(r.commits[k].token, ref.commits[k].token);
          ASSERT_LT(r.commits[k].issued, r.commits[k].completed);
        }
        expectAccountingIdentity(r.stats);
        EXPECT_EQ(r.stats.spec.entered, r.stats.spec.committed + r.stats.spec.squashed);
        if (!spec) {
          auto v = oracle::checkOrdering(r.commits);
          ASSERT_TRUE(v.empty()) << (v.raw.empty() ? (v.waw.empty() ? v.war.front() : v.waw.front()) : v.raw.front());
        }
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomPrograms, ::testing::Range(0, 8));

TEST(Engine, SpeculationNeverSlowerOnNotTakenBranches) {
  core::WorkloadData data;
  data.memory[0x12] = 0;
  const std::string src =
      "mov 5 0 1 0 0 0 0 1\n"
      "if 12 1 3 0 0 0 2 1\n"
      "vector_max 40 1 50 1 5 0 0 0000\n"
      "vector_max 41 1 51 1 5 0 0 0000\n";
  HtsConfig off;
  off.speculation = false;
  auto a = run(src, off, data);
  auto b = run(src, {}, data);
  EXPECT_LT(b.stats.makespan, a.stats.makespan);
  EXPECT_EQ(a.arch, b.arch);
}

}  // namespace
