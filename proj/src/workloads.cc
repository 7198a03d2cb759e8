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


#include "htsim/workloads.hh"

#include <random>
#include <vector>

#include "json.hpp"

namespace htsim::workloads {

using core::Region;
using isa::OpKind;

namespace {

constexpr std::array<std::pair<BenchmarkKind, std::string_view>, 9> kNames{{
    {BenchmarkKind::NoDep, "no-dep"},
    {BenchmarkKind::SameDep, "same-dep"},
    {BenchmarkKind::DiffDep, "diff-dep"},
    {BenchmarkKind::RandomDep, "random-dep"},
    {BenchmarkKind::LoopNoDep, "loop-no-dep"},
    {BenchmarkKind::LoopDep, "loop-dep"},
    {BenchmarkKind::BranchTakenNoDep, "branch-taken-no-dep"},
    {BenchmarkKind::BranchNotTakenNoDep, "branch-not-taken-no-dep"},
    {BenchmarkKind::BranchTakenDep, "branch-taken-dep"},
}};

// Round-robin order of functions for multi-function benchmarks.
constexpr std::array<std::string_view, 10> kRotation{
    "real_fir", "complex_fir", "adaptive_fir", "vector_dot", "iir",
    "vector_add", "vector_max", "fft_256", "dct_64", "correlation",
};

constexpr unsigned kBlockGranule = 8;
constexpr std::uint32_t kFirstBlock = 0x10;
constexpr unsigned kMaxTasks = 4096;

// Register roles shared by the loop generators.
constexpr std::uint16_t rZero = 0, rStride = 1, rStep = 2, rCounter = 4, rOffset = 5, rInArea = 6, rOutArea = 7,
                        rInPtr = 8, rOutPtr = 9, rThreshold = 10;

class Builder {
 public:
  Builder() : catalog_(accel::defaultCatalog()) {}

  std::uint32_t blocksOf(std::string_view fn) const {
    if (!catalog_.indexOf(fn)) throw InvalidSpec("unknown function '" + std::string(fn) + "'");
    return std::max<std::uint32_t>(1, catalog_.lookup(fn).dataframeSize / kBlockGranule);
  }

  Region alloc(std::uint32_t size) {
    Region r{cursor_, size};
    cursor_ += size;
    if (cursor_ >= core::HtsConfig{}.tmBase) throw InvalidSpec("benchmark does not fit below the transactional memory window");
    return r;
  }

  std::size_t pc() const { return program_.size(); }
  std::uint8_t lastTaskId() const { return static_cast<std::uint8_t>((taskCount_ - 1) & 0xF); }

  std::size_t task(std::string_view fn, Region in, Region out) {
    isa::Instruction i;
    i.opcode = isa::Opcode::task(catalog_.lookup(fn).accelId);
    i.inBase = static_cast<std::uint16_t>(in.base);
    i.inSize = static_cast<std::uint8_t>(in.size);
    i.outBase = static_cast<std::uint16_t>(out.base);
    i.outSize = static_cast<std::uint8_t>(out.size);
    i.taskId = nextTaskId();
    return push(i);
  }

  std::size_t taskIndirect(std::string_view fn, std::uint16_t inReg, std::uint8_t inSize, std::uint16_t outReg, std::uint8_t outSize) {
    isa::Instruction i;
    i.opcode = isa::Opcode::task(catalog_.lookup(fn).accelId);
    i.inBase = inReg;
    i.inSize = inSize;
    i.outBase = outReg;
    i.outSize = outSize;
    i.taskId = nextTaskId();
    i.control = isa::kCtrlIndirect;
    return push(i);
  }

  void mov(std::uint16_t imm, std::uint16_t reg) { push(control(OpKind::Mov, imm, 0, reg)); }
  void add(std::uint16_t dst, std::uint16_t a, std::uint16_t b) { push(control(OpKind::Add, a, static_cast<std::uint8_t>(b), dst)); }
  void mul(std::uint16_t dst, std::uint16_t a, std::uint16_t b) { push(control(OpKind::Mul, a, static_cast<std::uint8_t>(b), dst)); }
  void lbeg(std::uint16_t counterReg) { push(control(OpKind::LBeg, counterReg, 0, 0)); }
  void lend() { push(control(OpKind::LEnd, 0, 0, 0)); }

  /// Branch with a placeholder target; fix with patch().
  std::size_t branch(isa::BranchClass cls, std::uint16_t source, std::uint16_t thresholdReg) {
    isa::Instruction i = control(OpKind::If, source, static_cast<std::uint8_t>(thresholdReg), 0);
    i.control = isa::branchControl(cls);
    return push(i);
  }

  std::size_t jump() { return push(control(OpKind::Jump, 0, 0, 0)); }

  /// Points the branch or jump at `pc` to `target`.
  void patch(std::size_t at, std::size_t target) {
    auto offset = static_cast<std::uint16_t>(static_cast<std::int16_t>(target - at));
    if (program_[at].opcode.kind == OpKind::Jump)
      program_[at].inBase = offset;
    else
      program_[at].outBase = offset;
  }

  std::string text() const { return isa::disassemble(program_, catalog_.keymap()); }

 private:
  static isa::Instruction control(OpKind k, std::uint16_t f1, std::uint8_t f2, std::uint16_t f3) {
    isa::Instruction i;
    i.opcode = isa::Opcode::control(k);
    i.inBase = f1;
    i.inSize = f2;
    i.outBase = f3;
    i.metadata = 1;
    return i;
  }

  std::uint8_t nextTaskId() { return static_cast<std::uint8_t>(taskCount_++ & 0xF); }

  std::size_t push(isa::Instruction i) {
    if (program_.size() >= 0x7FFF) throw InvalidSpec("benchmark program is too long");
    program_.push_back(i);
    return program_.size() - 1;
  }

  accel::AcceleratorCatalog catalog_;
  isa::Program program_;
  std::uint32_t cursor_ = kFirstBlock;
  unsigned taskCount_ = 0;
};

void noDep(Builder& b, unsigned n) {
  for (unsigned i = 0; i < n; ++i) {
    auto fn = kRotation[i % kRotation.size()];
    auto size = b.blocksOf(fn);
    Region in = b.alloc(size);
    Region out = b.alloc(size);
    b.task(fn, in, out);
  }
}

void chain(Builder& b, unsigned n, auto functionOf) {
  Region prev = b.alloc(b.blocksOf(functionOf(0)));
  for (unsigned i = 0; i < n; ++i) {
    auto fn = functionOf(i);
    Region out = b.alloc(b.blocksOf(fn));
    b.task(fn, prev, out);
    prev = out;
  }
}

// Each task reads an earlier output with probability 1/2 and, with
// probability 1/2, overwrites an earlier output nobody has read.
void randomDep(Builder& b, unsigned n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto below = [&rng](std::size_t bound) { return static_cast<std::size_t>(rng() % bound); };
  struct Owned {
    Region region;
    bool read = false;
  };
  std::vector<Owned> outputs;
  for (unsigned i = 0; i < n; ++i) {
    auto fn = kRotation[below(kRotation.size())];
    auto size = b.blocksOf(fn);
    std::optional<std::size_t> src;
    Region in;
    if (!outputs.empty() && (rng() & 1)) {
      src = below(outputs.size());
      in = outputs[*src].region;
    } else {
      in = b.alloc(size);
    }
    Region out;
    std::vector<std::size_t> unread;
    for (std::size_t k = 0; k < outputs.size(); ++k)
      if (!outputs[k].read && k != src) unread.push_back(k);
    bool reuse = !unread.empty() && (rng() & 1);
    if (reuse) {
      out = outputs[unread[below(unread.size())]].region;
    } else {
      out = b.alloc(size);
    }
    if (src) outputs[*src].read = true;
    if (!reuse) outputs.push_back({out, false});
    b.task(fn, in, out);
  }
}

// Body of k tasks per iteration, addressed through registers so every
// iteration touches its own slice of the in/out areas.
void loop(Builder& b, unsigned n, unsigned trips, bool dependent) {
  const unsigned perBody = std::max(1u, n / trips);
  const std::uint32_t size = 5;
  const std::uint32_t stride = perBody * size;
  if (stride > 0xFFFF) throw InvalidSpec("loop body is too large");
  Region inArea = b.alloc(stride * (trips + 1));
  Region outArea = b.alloc(stride * (trips + 1));

  b.mov(static_cast<std::uint16_t>(stride), rStride);
  b.mov(static_cast<std::uint16_t>(size), rStep);
  b.mov(static_cast<std::uint16_t>(inArea.base), rInArea);
  b.mov(static_cast<std::uint16_t>(outArea.base), rOutArea);
  constexpr std::uint16_t rShared = 11;
  if (dependent) {
    Region seedIn = b.alloc(size);
    Region shared = b.alloc(size);
    b.task("vector_add", seedIn, shared);
    b.mov(static_cast<std::uint16_t>(shared.base), rShared);
  }
  b.mov(static_cast<std::uint16_t>(trips), rCounter);
  b.lbeg(rCounter);
  b.mul(rOffset, rCounter, rStride);
  b.add(rInPtr, rOffset, rInArea);
  b.add(rOutPtr, rOffset, rOutArea);
  for (unsigned j = 0; j < perBody; ++j) {
    auto fn = kRotation[j % 5];
    if (dependent) {
      b.taskIndirect(fn, j == 0 ? rShared : rInPtr, static_cast<std::uint8_t>(size), rOutPtr, static_cast<std::uint8_t>(size));
      b.add(rInPtr, rOutPtr, rZero);
    } else {
      b.taskIndirect(fn, rInPtr, static_cast<std::uint8_t>(size), rOutPtr, static_cast<std::uint8_t>(size));
      b.add(rInPtr, rInPtr, rStep);
    }
    b.add(rOutPtr, rOutPtr, rStep);
  }
  b.lend();
}

// mov threshold; two short tasks; if; not-taken block; jump; taken block.
void branchy(Builder& b, Workload& w, unsigned n, std::uint64_t threshold, bool taken, bool dependent) {
  if (threshold > 0xFFFF) throw InvalidSpec("branch threshold does not fit an immediate");
  const unsigned pathTasks = std::max(1u, n > 2 ? (n - 2) / 2 : 1u);
  const std::uint64_t outcome = taken ? threshold + 1 : 0;
  b.mov(static_cast<std::uint16_t>(threshold), rThreshold);

  std::vector<std::string_view> pathFns;
  for (auto fn : kRotation)
    if (fn != "vector_dot" && fn != "vector_add") pathFns.push_back(fn);

  std::optional<Region> produced;
  std::size_t ifPc;
  if (dependent) {
    produced = b.alloc(5);
    std::size_t producer = b.task("real_fir", b.alloc(5), *produced);
    std::uint8_t producerId = b.lastTaskId();
    w.data.resultTokens[producer] = outcome;
    b.task("vector_add", b.alloc(5), b.alloc(5));
    ifPc = b.branch(isa::BranchClass::BusRead, producerId, rThreshold);
  } else {
    b.task("vector_dot", b.alloc(5), b.alloc(5));
    b.task("vector_add", b.alloc(5), b.alloc(5));
    Region flag = b.alloc(1);
    if (outcome) w.data.memory[flag.base] = outcome;
    ifPc = b.branch(isa::BranchClass::MemoryRead, static_cast<std::uint16_t>(flag.base), rThreshold);
  }

  auto path = [&](unsigned first) {
    for (unsigned i = 0; i < pathTasks; ++i) {
      auto fn = pathFns[(first + i) % pathFns.size()];
      auto size = b.blocksOf(fn);
      Region in = produced && first ? *produced : b.alloc(size);
      b.task(fn, in, b.alloc(size));
    }
  };
  path(0);
  std::size_t skip = b.jump();
  b.patch(ifPc, b.pc());
  path(1);
  b.patch(skip, b.pc());
}

void checkTasks(unsigned n) {
  if (n < 1) throw InvalidSpec("n_tasks must be at least 1");
  if (n > kMaxTasks) throw InvalidSpec("n_tasks must be at most " + std::to_string(kMaxTasks));
}

}  // namespace

std::string_view toString(BenchmarkKind k) {
  for (const auto& [kind, name] : kNames)
    if (kind == k) return name;
  return "?";
}

std::optional<BenchmarkKind> parseBenchmarkKind(std::string_view name) {
  for (const auto& [kind, n] : kNames)
    if (n == name) return kind;
  return std::nullopt;
}

const std::array<BenchmarkKind, 9>& allBenchmarks() {
  static const std::array<BenchmarkKind, 9> all = [] {
    std::array<BenchmarkKind, 9> a{};
    for (std::size_t k = 0; k < kNames.size(); ++k) a[k] = kNames[k].first;
    return a;
  }();
  return all;
}

Workload generate(const BenchmarkSpec& spec) {
  checkTasks(spec.nTasks);
  Builder b;
  Workload w;
  w.name = std::string(toString(spec.kind));
  switch (spec.kind) {
    case BenchmarkKind::NoDep:
      noDep(b, spec.nTasks);
      break;
    case BenchmarkKind::SameDep:
      b.blocksOf(spec.function);
      chain(b, spec.nTasks, [&](unsigned) { return std::string_view(spec.function); });
      break;
    case BenchmarkKind::DiffDep:
      chain(b, spec.nTasks, [](unsigned i) { return kRotation[i % kRotation.size()]; });
      break;
    case BenchmarkKind::RandomDep:
      randomDep(b, spec.nTasks, spec.seed);
      break;
    case BenchmarkKind::LoopNoDep:
    case BenchmarkKind::LoopDep:
      if (spec.tripCount < 1 || spec.tripCount > 0xFF) throw InvalidSpec("trip count must be in [1, 255]");
      loop(b, spec.nTasks, spec.tripCount, spec.kind == BenchmarkKind::LoopDep);
      break;
    case BenchmarkKind::BranchTakenNoDep:
      branchy(b, w, spec.nTasks, spec.threshold, true, false);
      break;
    case BenchmarkKind::BranchNotTakenNoDep:
      branchy(b, w, spec.nTasks, spec.threshold, false, false);
      break;
    case BenchmarkKind::BranchTakenDep:
      branchy(b, w, spec.nTasks, spec.threshold, true, true);
      break;
  }
  w.source = b.text();
  return w;
}

// Correlate, then branch on the correlation result: the taken path runs a
// three-stage FIR cascade per band, the other path FFT, three dot products
// and an inverse FFT per band.
Workload generateAudio(const AudioCompressionSpec& spec) {
  if (spec.bands < 1) throw InvalidSpec("bands must be at least 1");
  if (spec.bands > 0xFF) throw InvalidSpec("bands must be at most 255");
  constexpr std::uint16_t rWide = 11, rDot = 12, rDots = 13, rInverse = 14;
  constexpr std::uint64_t threshold = 5;
  constexpr std::uint32_t fftBlocks = 32, dotBlocks = 5, firBlocks = 5;
  constexpr std::uint32_t freqStride = 3 * fftBlocks + 3 * dotBlocks + 1;
  constexpr std::uint32_t timeStride = 4 * firBlocks;

  Builder b;
  Workload w;
  w.name = spec.timeDomain ? "audio-time" : "audio-freq";

  Region audio = b.alloc(5);
  Region correlated = b.alloc(5);
  Region freqArea = b.alloc(freqStride * (spec.bands + 1));
  Region timeArea = b.alloc(timeStride * (spec.bands + 1));
  std::mt19937_64 rng(spec.seed);
  for (std::uint32_t k = 0; k < audio.size; ++k) w.data.memory[audio.base + k] = 1 + rng() % 0xFFFF;

  b.mov(static_cast<std::uint16_t>(threshold), rThreshold);
  std::size_t corr = b.task("correlation", audio, correlated);
  w.data.resultTokens[corr] = spec.timeDomain ? threshold + 1 : threshold;
  std::size_t ifPc = b.branch(isa::BranchClass::MemoryRead, static_cast<std::uint16_t>(correlated.base), rThreshold);

  // Frequency path. Band slot: [in 32][fft 32][dots 3x5][pad][ifft 32].
  b.mov(static_cast<std::uint16_t>(freqStride), rStride);
  b.mov(static_cast<std::uint16_t>(freqArea.base), rInArea);
  b.mov(static_cast<std::uint16_t>(fftBlocks), rWide);
  b.mov(static_cast<std::uint16_t>(dotBlocks), rDot);
  b.mov(static_cast<std::uint16_t>(2 * fftBlocks), rDots);
  b.mov(static_cast<std::uint16_t>(3 * dotBlocks + 1), rInverse);
  b.mov(static_cast<std::uint16_t>(spec.bands), rCounter);
  b.lbeg(rCounter);
  b.mul(rOffset, rCounter, rStride);
  b.add(rOffset, rOffset, rInArea);
  b.add(rInPtr, rOffset, rZero);
  b.add(rOutPtr, rOffset, rWide);
  b.taskIndirect("fft_256", rInPtr, fftBlocks, rOutPtr, fftBlocks);
  b.add(rInPtr, rOutPtr, rZero);
  b.add(rOutPtr, rOutPtr, rWide);
  for (int k = 0; k < 3; ++k) {
    b.taskIndirect("vector_dot", rInPtr, fftBlocks, rOutPtr, dotBlocks);
    b.add(rOutPtr, rOutPtr, rDot);
  }
  b.add(rInPtr, rOffset, rDots);
  b.add(rOutPtr, rInPtr, rInverse);
  b.taskIndirect("fft_256", rInPtr, 3 * dotBlocks, rOutPtr, fftBlocks);
  b.lend();
  std::size_t skip = b.jump();

  // Time path. Band slot: [in 5][fir 5][fir 5][fir 5].
  b.patch(ifPc, b.pc());
  b.mov(static_cast<std::uint16_t>(timeStride), rStride);
  b.mov(static_cast<std::uint16_t>(timeArea.base), rInArea);
  b.mov(static_cast<std::uint16_t>(firBlocks), rDot);
  b.mov(static_cast<std::uint16_t>(spec.bands), rCounter);
  b.lbeg(rCounter);
  b.mul(rOffset, rCounter, rStride);
  b.add(rInPtr, rOffset, rInArea);
  b.add(rOutPtr, rInPtr, rDot);
  for (int k = 0; k < 3; ++k) {
    b.taskIndirect("real_fir", rInPtr, firBlocks, rOutPtr, firBlocks);
    b.add(rInPtr, rOutPtr, rZero);
    b.add(rOutPtr, rOutPtr, rDot);
  }
  b.lend();
  b.patch(skip, b.pc());

  w.source = b.text();
  return w;
}

std::string sidecarJson(const core::WorkloadData& data) {
  nlohmann::ordered_json j;
  j["memory"] = nlohmann::ordered_json::array();
  for (const auto& [block, value] : data.memory) j["memory"].push_back({{"block", block}, {"value", value}});
  j["result_tokens"] = nlohmann::ordered_json::array();
  for (const auto& [pc, value] : data.resultTokens) j["result_tokens"].push_back({{"pc", pc}, {"value", value}});
  return j.dump(2) + "\n";
}

core::WorkloadData parseSidecar(std::string_view text) {
  core::WorkloadData d;
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw ConfigError("sidecar: top level must be an object");
    for (const auto& [key, value] : j.items())
      if (key != "memory" && key != "result_tokens") throw ConfigError("sidecar: unknown key '" + key + "'");
    if (j.contains("memory"))
      for (const auto& e : j.at("memory")) d.memory[e.at("block").get<std::uint32_t>()] = e.at("value").get<std::uint64_t>();
    if (j.contains("result_tokens"))
      for (const auto& e : j.at("result_tokens")) d.resultTokens[e.at("pc").get<std::size_t>()] = e.at("value").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sidecar: ") + e.what());
  }
  return d;
}

}  // namespace htsim::workloads
