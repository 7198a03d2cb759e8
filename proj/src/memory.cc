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

#include "htsim/memory.hh"

#include <algorithm>

namespace htsim::core {

namespace {

void sortUnique(std::vector<Seq>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::vector<Seq> Hazards::all() const {
  std::vector<Seq> out;
  out.insert(out.end(), raw.begin(), raw.end());
  out.insert(out.end(), waw.begin(), waw.end());
  out.insert(out.end(), war.begin(), war.end());
  sortUnique(out);
  return out;
}

Hazards MemoryTracker::scan(std::span<const Region> reads, std::span<const Region> writes) const {
  Hazards h;
  for (const auto& e : entries_) {
    if (e.access == Access::Write) {
      for (const auto& r : reads)
        if (e.region.overlaps(r)) h.raw.push_back(e.seq);
      for (const auto& w : writes)
        if (e.region.overlaps(w)) h.waw.push_back(e.seq);
    } else {
      for (const auto& w : writes)
        if (e.region.overlaps(w)) h.war.push_back(e.seq);
    }
  }
  sortUnique(h.raw);
  sortUnique(h.waw);
  sortUnique(h.war);
  return h;
}

void MemoryTracker::recordRead(const Region& r, Seq seq) {
  if (!r.empty()) entries_.push_back({r, seq, Access::Read});
}

void MemoryTracker::recordWrite(const Region& r, Seq seq) {
  if (r.empty()) return;
  for (auto& e : entries_) {
    if (e.access == Access::Write && e.region == r) {
      e.seq = seq;
      return;
    }
  }
  entries_.push_back({r, seq, Access::Write});
}

void MemoryTracker::retire(Seq seq) {
  std::erase_if(entries_, [seq](const Entry& e) { return e.seq == seq; });
}

bool MemoryTracker::touches(const Region& r, std::optional<Access> access) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return (!access || e.access == *access) && e.region.overlaps(r); });
}

std::optional<Seq> MemoryTracker::writerOf(const Region& r) const {
  for (const auto& e : entries_)
    if (e.access == Access::Write && e.region == r) return e.seq;
  return std::nullopt;
}

TaskLookupBuffer::TaskLookupBuffer(std::size_t capacity, std::uint32_t tmBase, std::uint32_t tmSize)
    : capacity_(capacity), tmBase_(tmBase), tmSize_(tmSize) {}

std::uint32_t TaskLookupBuffer::translateBlock(std::uint32_t block) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
    if (it->orig.contains(block)) return it->mapped.base + (block - it->orig.base);
  return block;
}

std::vector<Region> TaskLookupBuffer::translate(const Region& logical) const {
  std::vector<Region> pieces;
  if (logical.empty()) return pieces;
  bool anyOverlap = std::any_of(entries_.begin(), entries_.end(), [&](const TlbEntry& e) { return e.orig.overlaps(logical); });
  if (!anyOverlap) {
    pieces.push_back(logical);
    return pieces;
  }
  for (std::uint64_t b = logical.base; b < logical.end(); ++b) {
    std::uint32_t p = translateBlock(static_cast<std::uint32_t>(b));
    if (!pieces.empty() && pieces.back().end() == p)
      ++pieces.back().size;
    else
      pieces.push_back({p, 1});
  }
  return pieces;
}

std::optional<Region> TaskLookupBuffer::allocate(std::uint32_t size) const {
  if (size == 0 || size > tmSize_) return std::nullopt;
  std::vector<Region> used;
  used.reserve(entries_.size());
  for (const auto& e : entries_) used.push_back(e.mapped);
  std::sort(used.begin(), used.end(), [](const Region& a, const Region& b) { return a.base < b.base; });
  std::uint64_t cursor = tmBase_;
  const std::uint64_t limit = std::uint64_t{tmBase_} + tmSize_;
  for (const auto& u : used) {
    if (u.base >= cursor + size) break;
    cursor = std::max<std::uint64_t>(cursor, u.end());
  }
  if (cursor + size > limit) return std::nullopt;
  return Region{static_cast<std::uint32_t>(cursor), size};
}

const TlbEntry& TaskLookupBuffer::insert(const Region& orig, const Region& mapped, SpecId spec) {
  TlbEntry e;
  e.id = nextId_++;
  e.orig = orig;
  e.mapped = mapped;
  e.spec = spec;
  entries_.push_back(e);
  return entries_.back();
}

std::size_t TaskLookupBuffer::squash(SpecId spec) {
  return std::erase_if(entries_, [spec](const TlbEntry& e) { return !e.committed && e.spec == spec; });
}

std::size_t TaskLookupBuffer::commit(SpecId spec) {
  std::size_t n = 0;
  for (auto& e : entries_) {
    if (!e.committed && e.spec == spec) {
      e.committed = true;
      e.spec.reset();
      ++n;
    }
  }
  return n;
}

std::optional<TlbEntry> TaskLookupBuffer::oldestCommitted() const {
  for (const auto& e : entries_)
    if (e.committed) return e;
  return std::nullopt;
}

void TaskLookupBuffer::evict(std::uint64_t id) {
  std::erase_if(entries_, [id](const TlbEntry& e) { return e.id == id; });
}

bool TaskLookupBuffer::mappingsValid() const {
  const Region w = window();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& m = entries_[i].mapped;
    if (m.base < w.base || m.end() > w.end()) return false;
    for (std::size_t j = i + 1; j < entries_.size(); ++j)
      if (m.overlaps(entries_[j].mapped)) return false;
  }
  return true;
}

}  // namespace htsim::core
