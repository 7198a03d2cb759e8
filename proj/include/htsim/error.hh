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

#pragma once

#include <cstddef>
#include <exception>
#include <stdexcept>
#include <string>

namespace htsim {

/// Root of every error the simulator reports. The CLI maps each subclass to
/// a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class AsmErrorKind { UnknownMnemonic, FieldOutOfRange, WrongFieldCount, UnknownAcceleratorId, BadEncoding };

/// Assembly, disassembly and binary decoding failures. `line` is 1-based and
/// refers to the physical source line (0 when not line-addressed).
class AsmError : public Error {
 public:
  AsmError(AsmErrorKind kind, std::size_t line, int field, const std::string& what)
      : Error(what), kind_(kind), line_(line), field_(field) {}

  AsmErrorKind kind() const { return kind_; }
  std::size_t line() const { return line_; }
  /// 0 = mnemonic, 1..8 = hex fields, -1 = not applicable.
  int field() const { return field_; }

 private:
  AsmErrorKind kind_;
  std::size_t line_;
  int field_;
};

enum class ProgramErrorKind {
  LEndWithoutLBeg,
  MalformedBranch,
  BadRegister,
  PcOutOfRange,
  UnknownFunction,
  UnitBusy,
  EmptyProgram,
  ReservedRegion,
};

/// A well-formed program that cannot execute.
class ProgramError : public Error {
 public:
  ProgramError(ProgramErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  ProgramErrorKind kind() const { return kind_; }

 private:
  ProgramErrorKind kind_;
};

/// A benchmark or workload description that cannot be generated.
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

class DeadlockError : public Error {
 public:
  DeadlockError(unsigned long long cycle, const std::string& what) : Error(what), cycle_(cycle) {}
  unsigned long long cycle() const { return cycle_; }

 private:
  unsigned long long cycle_;
};

/// Process exit status for an error escaping a command: 1 I/O, 2 assembly,
/// 3 configuration or benchmark spec, 4 deadlock, 5 other program errors.
inline int exitCodeFor(const std::exception& e) {
  if (dynamic_cast<const IoError*>(&e)) return 1;
  if (dynamic_cast<const AsmError*>(&e)) return 2;
  if (auto p = dynamic_cast<const ProgramError*>(&e); p && p->kind() == ProgramErrorKind::EmptyProgram) return 2;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidSpec*>(&e)) return 3;
  if (dynamic_cast<const DeadlockError*>(&e)) return 4;
  return 5;
}

}  // namespace htsim
