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

#include <algorithm>
#include <map>

#include "htsim/policies.hh"
#include "htsim/workloads.hh"
#include "support/oracles.hh"

namespace {

using namespace htsim;
using workloads::BenchmarkKind;
using workloads::BenchmarkSpec;

const accel::AcceleratorCatalog& catalog() {
  static const auto c = accel::defaultCatalog();
  return c;
}

isa::Program programOf(const workloads::Workload& w) { return isa::assemble(w.source, catalog().keymap()); }

std::vector<isa::Instruction> tasksOf(const isa::Program& p) {
  std::vector<isa::Instruction> t;
  std::copy_if(p.begin(), p.end(), std::back_inserter(t), [](const auto& i) { return i.opcode.isTask(); });
  return t;
}

std::map<std::string, int> countByFunction(const std::vector<core::CommittedTask>& commits) {
  const auto k = catalog().keymap();
  std::map<std::string, int> m;
  for (const auto& c : commits) ++m[*k.nameOf(c.accelId)];
  return m;
}

core::Region inOf(const isa::Instruction& i) { return {i.inBase, i.inSize}; }
core::Region outOf(const isa::Instruction& i) { return {i.outBase, i.outSize}; }

TEST(Names, RoundTrip) {
  for (auto k : workloads::allBenchmarks()) EXPECT_EQ(workloads::parseBenchmarkKind(workloads::toString(k)), k);
  EXPECT_EQ(workloads::toString(BenchmarkKind::BranchNotTakenNoDep), "branch-not-taken-no-dep");
  EXPECT_FALSE(workloads::parseBenchmarkKind("nope"));
}

TEST(NoDep, FiveIndependentTasks) {
  auto p = programOf(workloads::generate({BenchmarkKind::NoDep, 5}));
  ASSERT_EQ(p.size(), 5u);
  for (std::size_t a = 0; a < p.size(); ++a)
    for (std::size_t b = 0; b < p.size(); ++b) {
      if (a == b) continue;
      EXPECT_FALSE(outOf(p[a]).overlaps(inOf(p[b])));
      EXPECT_FALSE(outOf(p[a]).overlaps(outOf(p[b])));
    }
}

TEST(SameDep, ChainFeedsForward) {
  BenchmarkSpec s{BenchmarkKind::SameDep, 2};
  s.function = "fft_256";
  auto p = programOf(workloads::generate(s));
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].opcode, p[1].opcode);
  EXPECT_EQ(*catalog().keymap().nameOf(p[0].opcode.accelId), "fft_256");
  EXPECT_EQ(inOf(p[1]), outOf(p[0]));
}

TEST(DiffDep, ChainUsesDifferentFunctions) {
  auto p = programOf(workloads::generate({BenchmarkKind::DiffDep, 10}));
  ASSERT_EQ(p.size(), 10u);
  for (std::size_t k = 1; k < p.size(); ++k) {
    EXPECT_NE(p[k].opcode, p[k - 1].opcode);
    EXPECT_TRUE(inOf(p[k]).overlaps(outOf(p[k - 1])));
  }
}

TEST(Edges, MatchGeneratedStructure) {
  auto raw = [](BenchmarkKind k) {
    auto w = workloads::generate({k, 12});
    return policies::runPolicy(policies::Policy::HtsNoSpec, programOf(w), catalog(), {}, {}, w.data).stats.rawEdges;
  };
  EXPECT_EQ(raw(BenchmarkKind::NoDep), 0u);
  EXPECT_EQ(raw(BenchmarkKind::SameDep), 11u);
  EXPECT_EQ(raw(BenchmarkKind::DiffDep), 11u);
}

TEST(RandomDep, DependencyGraphIsAcyclic) {
  auto p = programOf(workloads::generate({BenchmarkKind::RandomDep, 30, 7}));
  ASSERT_EQ(p.size(), 30u);
  std::vector<std::pair<core::Region, core::Region>> io;
  for (const auto& i : p) io.push_back({inOf(i), outOf(i)});
  auto deps = oracle::immediateDeps(io);
  EXPECT_TRUE(oracle::acyclic(deps));
  std::size_t edges = 0;
  for (const auto& d : deps) {
    EXPECT_LE(d.size(), 2u);
    edges += d.size();
  }
  EXPECT_GT(edges, 0u);
}

TEST(RandomDep, SeedChangesProgram) {
  auto a = workloads::generate({BenchmarkKind::RandomDep, 30, 1});
  auto b = workloads::generate({BenchmarkKind::RandomDep, 30, 2});
  EXPECT_NE(a.source, b.source);
  EXPECT_EQ(a.source, workloads::generate({BenchmarkKind::RandomDep, 30, 1}).source);
}

TEST(Loops, TripCountMultipliesBody) {
  for (auto k : {BenchmarkKind::LoopNoDep, BenchmarkKind::LoopDep}) {
    BenchmarkSpec s{k, 12};
    s.tripCount = 3;
    auto w = workloads::generate(s);
    auto ref = oracle::runInOrder(programOf(w), catalog(), 16, w.data);
    const auto staticTasks = tasksOf(programOf(w)).size();
    EXPECT_GT(ref.commits.size(), staticTasks) << workloads::toString(k);
  }
}

TEST(Branches, TakenAndNotTakenPaths) {
  auto taken = [](BenchmarkKind k) {
    auto w = workloads::generate({k, 20});
    return policies::runPolicy(policies::Policy::HtsNoSpec, programOf(w), catalog(), {}, {}, w.data).stats.branchesTaken;
  };
  EXPECT_EQ(taken(BenchmarkKind::BranchTakenNoDep), 1u);
  EXPECT_EQ(taken(BenchmarkKind::BranchNotTakenNoDep), 0u);
  EXPECT_EQ(taken(BenchmarkKind::BranchTakenDep), 1u);
}

TEST(Audio, TimeDomainSingleBand) {
  auto w = workloads::generateAudio({1, true});
  auto ref = oracle::runInOrder(programOf(w), catalog(), 16, w.data);
  auto n = countByFunction(ref.commits);
  EXPECT_EQ(n["correlation"], 1);
  EXPECT_EQ(n["real_fir"], 3);
  EXPECT_EQ(n.size(), 2u);
}

TEST(Audio, FrequencyDomainFourBands) {
  auto w = workloads::generateAudio({4, false});
  auto ref = oracle::runInOrder(programOf(w), catalog(), 16, w.data);
  auto n = countByFunction(ref.commits);
  EXPECT_EQ(n["correlation"], 1);
  EXPECT_EQ(n["fft_256"], 8);
  EXPECT_EQ(n["vector_dot"], 12);
  EXPECT_EQ(n["real_fir"], 0);
}

TEST(Audio, ZeroBandsRejected) { EXPECT_THROW(workloads::generateAudio({0}), InvalidSpec); }

TEST(Spec, RejectsBadParameters) {
  EXPECT_THROW(workloads::generate({BenchmarkKind::NoDep, 0}), InvalidSpec);
  BenchmarkSpec s{BenchmarkKind::SameDep, 4};
  s.function = "warp_drive";
  EXPECT_THROW(workloads::generate(s), InvalidSpec);
  EXPECT_THROW(workloads::generate({BenchmarkKind::NoDep, 100000}), InvalidSpec);
}

TEST(Generate, Deterministic) {
  for (auto k : workloads::allBenchmarks()) {
    auto a = workloads::generate({k});
    auto b = workloads::generate({k});
    EXPECT_EQ(a.source, b.source);
    EXPECT_EQ(workloads::sidecarJson(a.data), workloads::sidecarJson(b.data));
  }
}

TEST(Generate, EveryWorkloadRunsUnderEveryPolicy) {
  std::vector<workloads::Workload> all;
  for (auto k : workloads::allBenchmarks()) all.push_back(workloads::generate({k}));
  for (unsigned b : {1u, 3u}) {
    all.push_back(workloads::generateAudio({b, false}));
    all.push_back(workloads::generateAudio({b, true}));
  }
  for (const auto& w : all) {
    auto p = programOf(w);
    auto ref = oracle::runInOrder(p, catalog(), 16, w.data);
    for (auto pol : {policies::Policy::Naive, policies::Policy::SoftwareRuntime, policies::Policy::HtsNoSpec, policies::Policy::HtsSpec}) {
      core::HtsConfig cfg;
      cfg.checkInvariants = true;
      auto r = policies::runPolicy(pol, p, catalog(), {}, cfg, w.data);
      EXPECT_EQ(r.arch, ref.arch) << w.name << " " << policies::toString(pol);
      EXPECT_EQ(r.commits.size(), ref.commits.size()) << w.name;
    }
  }
}

TEST(Sidecar, RoundTrip) {
  core::WorkloadData d;
  d.memory[0x12] = 4;
  d.memory[0x40] = 0xFFFFFFFFFFull;
  d.resultTokens[3] = 9;
  auto back = workloads::parseSidecar(workloads::sidecarJson(d));
  EXPECT_EQ(back.memory, d.memory);
  EXPECT_EQ(back.resultTokens, d.resultTokens);
}

TEST(Sidecar, RejectsMalformed) {
  EXPECT_THROW(workloads::parseSidecar("{"), ConfigError);
  EXPECT_THROW(workloads::parseSidecar(R"({"memory":[{"block":1}]})"), ConfigError);
  EXPECT_THROW(workloads::parseSidecar(R"({"colour":[]})"), ConfigError);
}

}  // namespace
