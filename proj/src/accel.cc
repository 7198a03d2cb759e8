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

#include "htsim/accel.hh"

#include <stdexcept>

#include "htsim/error.hh"

namespace htsim::accel {

void AcceleratorCatalog::addFunction(FunctionSpec spec, unsigned instances) {
  if (spec.latency < 1) throw std::invalid_argument("latency of '" + spec.keyname + "' must be at least 1");
  if (instances < 1) throw std::invalid_argument("instance count of '" + spec.keyname + "' must be at least 1");
  if (indexOf(spec.keyname)) throw std::invalid_argument("duplicate function '" + spec.keyname + "'");
  if (indexOfAccel(spec.accelId)) throw std::invalid_argument("duplicate accelerator ID for '" + spec.keyname + "'");
  if (spec.accelId > isa::kMaxAccelId) throw std::invalid_argument("accelerator ID out of range for '" + spec.keyname + "'");
  functions_.push_back(std::move(spec));
  instances_.push_back(instances);
}

std::size_t AcceleratorCatalog::checkedIndex(std::string_view keyname) const {
  auto idx = indexOf(keyname);
  if (!idx) throw std::out_of_range("unknown function '" + std::string(keyname) + "'");
  return *idx;
}

void AcceleratorCatalog::setLatency(std::string_view keyname, Cycle latency) {
  if (latency < 1) throw std::invalid_argument("latency of '" + std::string(keyname) + "' must be at least 1");
  functions_[checkedIndex(keyname)].latency = latency;
}

void AcceleratorCatalog::setInstances(std::string_view keyname, unsigned count) {
  if (count < 1) throw std::invalid_argument("instance count of '" + std::string(keyname) + "' must be at least 1");
  instances_[checkedIndex(keyname)] = count;
}

void AcceleratorCatalog::setAllInstances(unsigned count) {
  if (count < 1) throw std::invalid_argument("instance count must be at least 1");
  for (auto& n : instances_) n = count;
}

const FunctionSpec& AcceleratorCatalog::lookup(std::string_view keyname) const { return functions_[checkedIndex(keyname)]; }

std::optional<std::size_t> AcceleratorCatalog::indexOf(std::string_view keyname) const {
  for (std::size_t k = 0; k < functions_.size(); ++k)
    if (functions_[k].keyname == keyname) return k;
  return std::nullopt;
}

std::optional<std::size_t> AcceleratorCatalog::indexOfAccel(std::uint8_t accelId) const {
  for (std::size_t k = 0; k < functions_.size(); ++k)
    if (functions_[k].accelId == accelId) return k;
  return std::nullopt;
}

isa::KeynameMap AcceleratorCatalog::keymap() const {
  isa::KeynameMap m;
  for (const auto& f : functions_) m.add(f.keyname, f.accelId);
  return m;
}

AcceleratorCatalog defaultCatalog() {
  AcceleratorCatalog c;
  c.addFunction({"real_fir", 0x00, 921, 40});
  c.addFunction({"complex_fir", 0x01, 3696, 40});
  c.addFunction({"adaptive_fir", 0x02, 4384, 40});
  c.addFunction({"iir", 0x03, 2450, 40});
  c.addFunction({"vector_dot", 0x04, 53, 40});
  c.addFunction({"vector_add", 0x05, 131, 40});
  c.addFunction({"vector_max", 0x06, 55, 40});
  c.addFunction({"fft_256", 0x07, 18673, 256});
  c.addFunction({"dct_64", 0x08, 874, 64});
  c.addFunction({"correlation", 0x09, 753, 40});
  return c;
}

void AcceleratorUnit::deliver(Seq seq, Cycle now, std::optional<SpecId> spec) {
  if (busy()) throw ProgramError(ProgramErrorKind::UnitBusy, "deliver to busy unit " + std::to_string(index_));
  state_ = State::Running;
  seq_ = seq;
  remaining_ = latency_;
  deliveredAt_ = now;
  readyAt_ = now + latency_;
  spec_ = spec;
}

bool AcceleratorUnit::tick() {
  if (state_ == State::Aborting) {
    state_ = State::Idle;
    spec_.reset();
    return false;
  }
  if (state_ != State::Running) return false;
  if (--remaining_ == 0) {
    state_ = State::Finished;
    return true;
  }
  return false;
}

void AcceleratorUnit::advance(Cycle cycles) {
  if (state_ == State::Running && cycles < remaining_) remaining_ -= cycles;
}

void AcceleratorUnit::release() {
  state_ = State::Idle;
  remaining_ = 0;
  spec_.reset();
}

void AcceleratorUnit::abort() {
  if (state_ == State::Idle) return;
  state_ = State::Aborting;
  remaining_ = 0;
}

AcceleratorPool::AcceleratorPool(const AcceleratorCatalog& catalog) : byFunction_(catalog.size()) {
  for (std::size_t f = 0; f < catalog.size(); ++f) {
    for (unsigned k = 0; k < catalog.instances(f); ++k) {
      byFunction_[f].push_back(units_.size());
      units_.emplace_back(units_.size(), f, catalog.functions()[f].latency);
    }
  }
  asr_ = AcceleratorStatusRegister(units_.size());
  busyCycles_.assign(units_.size(), 0);
}

std::optional<std::size_t> AcceleratorPool::idleUnit(std::size_t functionIndex) const {
  for (std::size_t u : byFunction_.at(functionIndex))
    if (!asr_.busy(u)) return u;
  return std::nullopt;
}

void AcceleratorPool::deliver(std::size_t unit, Seq seq, Cycle now, std::optional<SpecId> spec) {
  if (asr_.busy(unit)) throw ProgramError(ProgramErrorKind::UnitBusy, "ASR reports unit " + std::to_string(unit) + " busy");
  units_.at(unit).deliver(seq, now, spec);
  asr_.set(unit);
}

std::vector<CompletionEvent> AcceleratorPool::tick() {
  std::vector<CompletionEvent> done;
  for (auto& u : units_) {
    bool wasAborting = u.state() == AcceleratorUnit::State::Aborting;
    if (u.tick()) done.push_back({u.seq(), u.index()});
    if (wasAborting) asr_.clear(u.index());
  }
  return done;
}

void AcceleratorPool::release(std::size_t unit) {
  units_.at(unit).release();
  asr_.clear(unit);
}

void AcceleratorPool::abort(std::size_t unit) { units_.at(unit).abort(); }

void AcceleratorPool::accountBusy(Cycle cycles) {
  for (std::size_t u = 0; u < units_.size(); ++u)
    if (asr_.busy(u)) busyCycles_[u] += cycles;
}

void AcceleratorPool::skip(Cycle cycles) {
  for (auto& u : units_) u.advance(cycles);
}

bool AcceleratorPool::asrConsistent() const {
  for (std::size_t u = 0; u < units_.size(); ++u)
    if (asr_.busy(u) != units_[u].busy()) return false;
  return true;
}

bool AcceleratorPool::allIdle() const {
  for (const auto& u : units_)
    if (u.busy()) return false;
  return true;
}

}  // namespace htsim::accel
