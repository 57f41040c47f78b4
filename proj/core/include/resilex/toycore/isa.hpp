#pragma once

// Instruction set of the toy in-order core.
//
// 32-bit instruction word: op[31:28] rd[27:24] rs1[23:20] rs2[19:16] imm[15:0]
//
//   HALT                          stop after all older instructions commit
//   LOAD  rd, imm(rs1)            rd = mem[rs1 + imm]
//   STORE rs2, imm(rs1)           mem[rs1 + imm] = rs2
//   ADD   rd, rs1, rs2, imm       rd = rs1 + rs2 + imm   (covers addi / li)
//   SUB   rd, rs1, rs2            rd = rs1 - rs2
//   MUL   rd, rs1, rs2            rd = rs1 * rs2 (low 32 bits)
//   XOR   rd, rs1, rs2            rd = rs1 ^ rs2
//   SHIFT rd, rs1, imm            imm >= 0: rs1 << imm, else rs1 >> -imm (logical)
//   BEQZ  rs1, imm                if rs1 == 0 jump to instruction index imm
//   JUMP  imm                     jump to instruction index imm
//   OUT   rs1                     append rs1 to the output buffer
//
// Opcodes 11..15 are illegal and trap when they commit. r0 reads as zero.
// Memory is word-addressed; a store to address 0xffffffff is the detection
// port used by software/algorithm checkers.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace resilex::toycore {

enum class Opcode : std::uint8_t {
  Halt = 0,
  Load = 1,
  Store = 2,
  Add = 3,
  Sub = 4,
  Mul = 5,
  Xor = 6,
  Shift = 7,
  Beqz = 8,
  Jump = 9,
  Out = 10,
};

inline constexpr std::uint32_t kNumRegisters = 16;
inline constexpr std::uint32_t kDetectPort = 0xffffffffu;

bool is_legal_opcode(std::uint32_t op);
bool writes_register(std::uint32_t op);

struct Instruction {
  Opcode op = Opcode::Halt;
  std::uint8_t rd = 0;
  std::uint8_t rs1 = 0;
  std::uint8_t rs2 = 0;
  std::int16_t imm = 0;

  std::uint32_t encode() const;
  static Instruction decode(std::uint32_t word);
  bool operator==(const Instruction&) const = default;
};

/// A benchmark program: code, initial data memory and an identifying name.
struct ToyProgram {
  std::string name;
  std::vector<std::uint32_t> code;
  /// Sparse initial memory image: address -> word.
  std::map<std::uint32_t, std::uint32_t> data;
  /// The program signals an ABFT checksum mismatch through the detection port.
  bool abft = false;

  /// Throws std::invalid_argument when a branch/jump target is out of range.
  void validate() const;
};

/// Assembler-style builder with forward label references.
class ProgramBuilder {
 public:
  explicit ProgramBuilder(std::string name) : name_(std::move(name)) {}

  using Reg = std::uint8_t;

  ProgramBuilder& label(const std::string& name);

  ProgramBuilder& halt();
  ProgramBuilder& load(Reg rd, Reg base, std::int16_t offset);
  ProgramBuilder& store(Reg src, Reg base, std::int16_t offset);
  ProgramBuilder& add(Reg rd, Reg rs1, Reg rs2, std::int16_t imm = 0);
  ProgramBuilder& addi(Reg rd, Reg rs1, std::int16_t imm) { return add(rd, rs1, 0, imm); }
  ProgramBuilder& li(Reg rd, std::int16_t imm) { return add(rd, 0, 0, imm); }
  ProgramBuilder& mov(Reg rd, Reg rs) { return add(rd, rs, 0, 0); }
  ProgramBuilder& sub(Reg rd, Reg rs1, Reg rs2);
  ProgramBuilder& mul(Reg rd, Reg rs1, Reg rs2);
  ProgramBuilder& xor_(Reg rd, Reg rs1, Reg rs2);
  ProgramBuilder& shl(Reg rd, Reg rs1, int amount);
  ProgramBuilder& shr(Reg rd, Reg rs1, int amount);
  ProgramBuilder& beqz(Reg rs, const std::string& target);
  ProgramBuilder& jump(const std::string& target);
  ProgramBuilder& out(Reg rs);
  /// Raw word, e.g. to plant an illegal opcode in tests.
  ProgramBuilder& raw(std::uint32_t word);

  ProgramBuilder& data(std::uint32_t address, std::uint32_t value);
  ProgramBuilder& data(std::uint32_t address, const std::vector<std::uint32_t>& values);
  ProgramBuilder& abft(bool on = true);

  std::size_t here() const { return code_.size(); }

  /// Resolves labels and validates the program.
  ToyProgram build() const;

 private:
  ProgramBuilder& emit(Instruction ins);
  ProgramBuilder& emit_branch(Instruction ins, const std::string& target);

  std::string name_;
  std::vector<std::uint32_t> code_;
  std::map<std::string, std::size_t> labels_;
  std::vector<std::pair<std::size_t, std::string>> fixups_;
  std::map<std::uint32_t, std::uint32_t> data_;
  bool abft_ = false;
};

}  // namespace resilex::toycore
