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

#include "htsim/isa.hh"

#include <array>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "htsim/error.hh"

namespace htsim::isa {

namespace {

constexpr std::uint8_t kControlBase = 0xF0;

struct ControlName {
  OpKind kind;
  std::string_view mnemonic;
};

// Order matches the opcode numbering 0xF0..0xF6.
constexpr std::array<ControlName, 7> kControls{{
    {OpKind::Mov, "mov"},
    {OpKind::Add, "add"},
    {OpKind::Mul, "mul"},
    {OpKind::If, "if"},
    {OpKind::Jump, "jump"},
    {OpKind::LBeg, "lbeg"},
    {OpKind::LEnd, "lend"},
}};

constexpr std::array<unsigned, 9> kFieldBits{0, 16, 8, 16, 8, 4, 4, 4, 60};

constexpr std::uint64_t mask(unsigned bits) { return bits >= 64 ? ~0ULL : ((1ULL << bits) - 1); }

std::uint64_t fieldValue(const Instruction& i, int field) {
  switch (field) {
    case 1: return i.inBase;
    case 2: return i.inSize;
    case 3: return i.outBase;
    case 4: return i.outSize;
    case 5: return i.taskId;
    case 6: return i.procId;
    case 7: return i.control;
    case 8: return i.metadata;
  }
  return 0;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\v\f";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::optional<std::uint64_t> parseHex(std::string_view tok) {
  if (tok.empty() || tok.size() > 16) return std::nullopt;
  std::uint64_t v = 0;
  for (char c : tok) {
    unsigned d;
    if (c >= '0' && c <= '9')
      d = static_cast<unsigned>(c - '0');
    else if (c >= 'a' && c <= 'f')
      d = static_cast<unsigned>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F')
      d = static_cast<unsigned>(c - 'A' + 10);
    else
      return std::nullopt;
    v = (v << 4) | d;
  }
  return v;
}

std::string lineMsg(std::size_t line, const std::string& what) { return "line " + std::to_string(line) + ": " + what; }

}  // namespace

std::uint8_t Opcode::byte() const {
  if (kind == OpKind::Task) return accelId;
  for (std::size_t k = 0; k < kControls.size(); ++k)
    if (kControls[k].kind == kind) return static_cast<std::uint8_t>(kControlBase + k);
  return 0xFF;
}

std::optional<Opcode> Opcode::fromByte(std::uint8_t b) {
  if (b <= kMaxAccelId) return Opcode::task(b);
  std::size_t k = static_cast<std::size_t>(b - kControlBase);
  if (k < kControls.size()) return Opcode::control(kControls[k].kind);
  return std::nullopt;
}

std::string_view controlMnemonic(OpKind k) {
  for (const auto& c : kControls)
    if (c.kind == k) return c.mnemonic;
  return {};
}

std::optional<OpKind> controlFromMnemonic(std::string_view m) {
  for (const auto& c : kControls)
    if (c.mnemonic == m) return c.kind;
  return std::nullopt;
}

std::optional<BranchClass> Instruction::branchClass() const {
  unsigned bits = (control & kCtrlBranchMask) >> 1;
  if (bits > 2) return std::nullopt;
  return static_cast<BranchClass>(bits);
}

std::optional<int> firstInvalidField(const Instruction& i) {
  if (i.opcode.isTask() && i.opcode.accelId > kMaxAccelId) return 0;
  for (int f = 1; f <= 8; ++f)
    if (fieldValue(i, f) > mask(kFieldBits[f])) return f;
  if (i.opcode.isTask() && !(i.control & kCtrlNoSideEffect)) {
    if (i.inSize == 0) return 2;
    if (i.outSize == 0) return 4;
  }
  if (i.opcode.kind == OpKind::If && !i.branchClass()) return 7;
  return std::nullopt;
}

EncodedInstruction encode(const Instruction& i) {
  if (auto f = firstInvalidField(i)) throw std::invalid_argument("encode: field " + std::to_string(*f) + " is out of range");
  EncodedInstruction w;
  w.lo = static_cast<std::uint64_t>(i.opcode.byte()) | (static_cast<std::uint64_t>(i.inBase) << 8) |
         (static_cast<std::uint64_t>(i.inSize) << 24) | (static_cast<std::uint64_t>(i.outBase) << 32) |
         (static_cast<std::uint64_t>(i.outSize) << 48) | (static_cast<std::uint64_t>(i.taskId) << 56) |
         (static_cast<std::uint64_t>(i.procId) << 60);
  w.hi = static_cast<std::uint64_t>(i.control) | (i.metadata << 4);
  return w;
}

Instruction decode(const EncodedInstruction& w) {
  auto op = Opcode::fromByte(static_cast<std::uint8_t>(w.lo & 0xFF));
  if (!op) throw AsmError(AsmErrorKind::BadEncoding, 0, 0, "decode: unassigned opcode byte");
  Instruction i;
  i.opcode = *op;
  i.inBase = static_cast<std::uint16_t>((w.lo >> 8) & 0xFFFF);
  i.inSize = static_cast<std::uint8_t>((w.lo >> 24) & 0xFF);
  i.outBase = static_cast<std::uint16_t>((w.lo >> 32) & 0xFFFF);
  i.outSize = static_cast<std::uint8_t>((w.lo >> 48) & 0xFF);
  i.taskId = static_cast<std::uint8_t>((w.lo >> 56) & 0xF);
  i.procId = static_cast<std::uint8_t>((w.lo >> 60) & 0xF);
  i.control = static_cast<std::uint8_t>(w.hi & 0xF);
  i.metadata = w.hi >> 4;
  if (auto f = firstInvalidField(i))
    throw AsmError(AsmErrorKind::BadEncoding, 0, *f, "decode: field " + std::to_string(*f) + " is not well-formed");
  return i;
}

void KeynameMap::add(const std::string& keyname, std::uint8_t accelId) {
  if (keyname.empty()) throw std::invalid_argument("keyname must not be empty");
  if (controlFromMnemonic(keyname)) throw std::invalid_argument("keyname '" + keyname + "' is a reserved mnemonic");
  if (accelId > kMaxAccelId) throw std::invalid_argument("accelerator ID out of range for '" + keyname + "'");
  if (byName_.count(keyname)) throw std::invalid_argument("duplicate keyname '" + keyname + "'");
  if (byId_.count(accelId)) throw std::invalid_argument("duplicate accelerator ID for '" + keyname + "'");
  byName_.emplace(keyname, accelId);
  byId_.emplace(accelId, keyname);
}

std::optional<std::uint8_t> KeynameMap::idOf(std::string_view keyname) const {
  auto it = byName_.find(keyname);
  if (it == byName_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> KeynameMap::nameOf(std::uint8_t accelId) const {
  auto it = byId_.find(accelId);
  if (it == byId_.end()) return std::nullopt;
  return it->second;
}

Program assemble(std::string_view source, const KeynameMap& keymap) {
  Program program;
  std::size_t lineNo = 0;
  while (!source.empty()) {
    ++lineNo;
    auto nl = source.find('\n');
    std::string_view line = source.substr(0, nl);
    source = nl == std::string_view::npos ? std::string_view{} : source.substr(nl + 1);

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::vector<std::string_view> toks;
    while (!line.empty()) {
      auto end = line.find_first_of(" \t");
      toks.push_back(line.substr(0, end));
      if (end == std::string_view::npos) break;
      line = trim(line.substr(end));
    }
    if (toks.size() != 9)
      throw AsmError(AsmErrorKind::WrongFieldCount, lineNo, -1,
                     lineMsg(lineNo, "expected mnemonic and 8 fields, got " + std::to_string(toks.size()) + " tokens"));

    Instruction ins;
    if (auto k = controlFromMnemonic(toks[0])) {
      ins.opcode = Opcode::control(*k);
    } else if (auto id = keymap.idOf(toks[0])) {
      ins.opcode = Opcode::task(*id);
    } else {
      throw AsmError(AsmErrorKind::UnknownMnemonic, lineNo, 0, lineMsg(lineNo, "unknown mnemonic '" + std::string(toks[0]) + "'"));
    }

    std::array<std::uint64_t, 9> v{};
    for (int f = 1; f <= 8; ++f) {
      auto parsed = parseHex(toks[static_cast<std::size_t>(f)]);
      if (!parsed || *parsed > mask(kFieldBits[static_cast<std::size_t>(f)]))
        throw AsmError(AsmErrorKind::FieldOutOfRange, lineNo, f,
                       lineMsg(lineNo, "field " + std::to_string(f) + " '" + std::string(toks[static_cast<std::size_t>(f)]) +
                                           "' is not a hex value of at most " + std::to_string(kFieldBits[static_cast<std::size_t>(f)]) +
                                           " bits"));
      v[static_cast<std::size_t>(f)] = *parsed;
    }
    ins.inBase = static_cast<std::uint16_t>(v[1]);
    ins.inSize = static_cast<std::uint8_t>(v[2]);
    ins.outBase = static_cast<std::uint16_t>(v[3]);
    ins.outSize = static_cast<std::uint8_t>(v[4]);
    ins.taskId = static_cast<std::uint8_t>(v[5]);
    ins.procId = static_cast<std::uint8_t>(v[6]);
    ins.control = static_cast<std::uint8_t>(v[7]);
    ins.metadata = v[8];
    if (auto f = firstInvalidField(ins))
      throw AsmError(AsmErrorKind::FieldOutOfRange, lineNo, *f,
                     lineMsg(lineNo, "field " + std::to_string(*f) + " violates the instruction constraints"));
    program.push_back(ins);
  }
  return program;
}

std::string disassembleOne(const Instruction& i, const KeynameMap& keymap) {
  std::string name;
  if (i.opcode.isTask()) {
    auto n = keymap.nameOf(i.opcode.accelId);
    if (!n) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "no keyname for accelerator ID 0x%02x", i.opcode.accelId);
      throw AsmError(AsmErrorKind::UnknownAcceleratorId, 0, 0, buf);
    }
    name = *n;
  } else {
    name = std::string(controlMnemonic(i.opcode.kind));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s %x %x %x %x %x %x %x %04llx", name.c_str(), unsigned{i.inBase}, unsigned{i.inSize},
                unsigned{i.outBase}, unsigned{i.outSize}, unsigned{i.taskId}, unsigned{i.procId}, unsigned{i.control},
                static_cast<unsigned long long>(i.metadata));
  return buf;
}

std::string disassemble(const Program& program, const KeynameMap& keymap) {
  std::string out;
  for (const auto& i : program) {
    out += disassembleOne(i, keymap);
    out += '\n';
  }
  return out;
}

namespace {

void putBe64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (56 - 8 * k)) & 0xFF);
  out.write(b, 8);
}

std::uint64_t getBe64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("htsbin: truncated stream");
  std::uint64_t v = 0;
  for (unsigned char c : b) v = (v << 8) | c;
  return v;
}

}  // namespace

void writeBinary(std::ostream& out, const Program& program) {
  putBe64(out, program.size());
  for (const auto& i : program) {
    auto w = encode(i);
    putBe64(out, w.hi);
    putBe64(out, w.lo);
  }
  if (!out) throw IoError("htsbin: write failed");
}

Program readBinary(std::istream& in) {
  std::uint64_t n = getBe64(in);
  Program p;
  for (std::uint64_t k = 0; k < n; ++k) {
    EncodedInstruction w;
    w.hi = getBe64(in);
    w.lo = getBe64(in);
    p.push_back(decode(w));
  }
  return p;
}

}  // namespace htsim::isa
