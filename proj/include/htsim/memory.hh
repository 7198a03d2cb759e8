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
 * @file memory.hh
 * @brief Block-addressed memory regions, the dispatch-stage Memory Tracker
 * and the Task Lookup Buffer that remaps regions into transactional memory.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "htsim/accel.hh"

namespace htsim::core {

/// Half-open block interval [base, base + size).
struct Region {
  std::uint32_t base = 0;
  std::uint32_t size = 0;

  std::uint64_t end() const { return std::uint64_t{base} + size; }
  bool empty() const { return size == 0; }
  bool contains(std::uint32_t block) const { return block >= base && block < end(); }
  bool overlaps(const Region& o) const { return size && o.size && base < o.end() && o.base < end(); }

  friend bool operator==(const Region&, const Region&) = default;
};

enum class Access : std::uint8_t { Read, Write };

/// Dependencies of a new task against the live tracker contents. Each list
/// is sorted and duplicate-free; a seq may appear in several lists.
struct Hazards {
  std::vector<Seq> raw;
  std::vector<Seq> waw;
  std::vector<Seq> war;

  /// Sorted union of the three lists.
  std::vector<Seq> all() const;
};

/// Records, for every live task, the physical regions it reads and writes.
/// Entries are removed when their task's completion has been announced.
class MemoryTracker {
 public:
  struct Entry {
    Region region;
    Seq seq = 0;
    Access access = Access::Read;
  };

  /// Scans for overlap with live writers (RAW, WAW) and readers (WAR).
  Hazards scan(std::span<const Region> reads, std::span<const Region> writes) const;

  void recordRead(const Region& r, Seq seq);
  /// A writer of exactly the same region replaces the previous writer.
  void recordWrite(const Region& r, Seq seq);
  void retire(Seq seq);

  /// True if a live entry of the given kind overlaps `r` (any kind when
  /// `access` is empty).
  bool touches(const Region& r, std::optional<Access> access = std::nullopt) const;
  /// Seq of the live writer recorded for exactly `r`.
  std::optional<Seq> writerOf(const Region& r) const;

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<Entry> entries_;
};

struct TlbEntry {
  std::uint64_t id = 0;  ///< insertion order
  Region orig;
  Region mapped;
  std::optional<SpecId> spec;  ///< empty once committed
  bool committed = false;
};

/// Task Lookup Buffer plus the first-fit allocator over the transactional
/// memory window [tmBase, tmBase + tmSize).
class TaskLookupBuffer {
 public:
  TaskLookupBuffer(std::size_t capacity, std::uint32_t tmBase, std::uint32_t tmSize);

  /// Physical pieces backing a logical region; the newest mapping covering a
  /// block wins. Adjacent physical blocks are coalesced.
  std::vector<Region> translate(const Region& logical) const;
  std::uint32_t translateBlock(std::uint32_t block) const;

  bool full() const { return entries_.size() >= capacity_; }
  /// First-fit TM allocation; nullopt when no gap of `size` blocks exists.
  std::optional<Region> allocate(std::uint32_t size) const;
  /// Caller must have checked full() and obtained `mapped` from allocate().
  const TlbEntry& insert(const Region& orig, const Region& mapped, SpecId spec);

  /// Drops every entry of the speculation. Returns how many were removed.
  std::size_t squash(SpecId spec);
  /// Marks every entry of the speculation committed.
  std::size_t commit(SpecId spec);
  std::optional<TlbEntry> oldestCommitted() const;
  void evict(std::uint64_t id);

  const std::vector<TlbEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  Region window() const { return {tmBase_, tmSize_}; }
  /// Mapped regions are pairwise disjoint and inside the TM window.
  bool mappingsValid() const;

 private:
  std::size_t capacity_;
  std::uint32_t tmBase_;
  std::uint32_t tmSize_;
  std::uint64_t nextId_ = 0;
  std::vector<TlbEntry> entries_;  ///< insertion order
};

}  // namespace htsim::core
