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
 * @file isa.hh
 * @brief Task instruction set: 128-bit word layout, assembly text and the
 * `.htsbin` binary container.
 *
 * Word layout (bit ranges inclusive):
 * ```
 *   [7:0]     accelerator ID / opcode
 *   [23:8]    input region base        [31:24]  input size (blocks)
 *   [47:32]   output region base       [55:48]  output size (blocks)
 *   [59:56]   task ID                  [63:60]  process ID
 *   [67:64]   control                  [127:68] metadata
 * ```
 * Assembly lines are `mnemonic f1 f2 f3 f4 f5 f6 f7 f8` where f1..f8 are the
 * fields above in order, written as unprefixed hex. `#` starts a comment.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace htsim::isa {

/// Highest accelerator ID; 0xF0 and up are control opcodes.
constexpr std::uint8_t kMaxAccelId = 0xEF;

enum class OpKind : std::uint8_t { Task, Mov, Add, Mul, If, Jump, LBeg, LEnd };

struct Opcode {
  OpKind kind = OpKind::Task;
  std::uint8_t accelId = 0;  ///< meaningful for Task only

  static Opcode task(std::uint8_t id) { return {OpKind::Task, id}; }
  static Opcode control(OpKind k) { return {k, 0}; }

  bool isTask() const { return kind == OpKind::Task; }
  std::uint8_t byte() const;
  /// nullopt for the unassigned range 0xF7..0xFF.
  static std::optional<Opcode> fromByte(std::uint8_t b);

  friend bool operator==(const Opcode&, const Opcode&) = default;
};

/// Mnemonic for a control opcode ("mov", "if", ...). Empty for Task.
std::string_view controlMnemonic(OpKind k);
std::optional<OpKind> controlFromMnemonic(std::string_view m);

// Control-field flags.
constexpr std::uint8_t kCtrlIndirect = 0x1;      ///< task: region bases are GPR indices
constexpr std::uint8_t kCtrlNoSideEffect = 0x8;  ///< task: empty regions permitted
constexpr std::uint8_t kCtrlBranchMask = 0x6;    ///< if: branch class in bits [2:1]

enum class BranchClass : std::uint8_t { RegisterRead = 0, MemoryRead = 1, BusRead = 2 };

constexpr std::uint8_t branchControl(BranchClass c) { return static_cast<std::uint8_t>(static_cast<unsigned>(c) << 1); }

struct Instruction {
  Opcode opcode;
  std::uint16_t inBase = 0;
  std::uint8_t inSize = 0;
  std::uint16_t outBase = 0;
  std::uint8_t outSize = 0;
  std::uint8_t taskId = 0;     ///< 4 bits
  std::uint8_t procId = 0;     ///< 4 bits
  std::uint8_t control = 0;    ///< 4 bits
  std::uint64_t metadata = 0;  ///< 60 bits

  /// Branch class of an `if`; nullopt when the class bits are 0b11.
  std::optional<BranchClass> branchClass() const;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

/// Index (1..8) of the first field violating its width or the task size rule,
/// 0 for an opcode problem, nullopt when well-formed.
std::optional<int> firstInvalidField(const Instruction& i);
inline bool isWellFormed(const Instruction& i) { return !firstInvalidField(i).has_value(); }

using Program = std::vector<Instruction>;

struct EncodedInstruction {
  std::uint64_t lo = 0;  ///< bits [63:0]
  std::uint64_t hi = 0;  ///< bits [127:64]

  friend bool operator==(const EncodedInstruction&, const EncodedInstruction&) = default;
};

/// Packs a well-formed instruction. Throws std::invalid_argument otherwise.
EncodedInstruction encode(const Instruction& i);
/// Throws AsmError(BadEncoding) for unassigned opcodes or ill-formed tasks.
Instruction decode(const EncodedInstruction& w);

/// Function keyname <-> accelerator ID. Injective in both directions and
/// disjoint from the control mnemonics.
class KeynameMap {
 public:
  KeynameMap() = default;

  /// Throws std::invalid_argument on duplicates, reserved names or IDs > 0xEF.
  void add(const std::string& keyname, std::uint8_t accelId);

  std::optional<std::uint8_t> idOf(std::string_view keyname) const;
  std::optional<std::string> nameOf(std::uint8_t accelId) const;
  std::size_t size() const { return byName_.size(); }

 private:
  std::map<std::string, std::uint8_t, std::less<>> byName_;
  std::map<std::uint8_t, std::string> byId_;
};

Program assemble(std::string_view source, const KeynameMap& keymap);
/// Canonical text: lowercase unprefixed hex, metadata padded to 4 digits.
std::string disassemble(const Program& program, const KeynameMap& keymap);
std::string disassembleOne(const Instruction& i, const KeynameMap& keymap);

/// `.htsbin`: big-endian u64 instruction count followed by one big-endian
/// 128-bit word per instruction.
void writeBinary(std::ostream& out, const Program& program);
Program readBinary(std::istream& in);

}  // namespace htsim::isa
