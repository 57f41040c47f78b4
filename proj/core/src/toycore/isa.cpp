#include "resilex/toycore/isa.hpp"

#include <stdexcept>

namespace resilex::toycore {

bool is_legal_opcode(std::uint32_t op) { return op <= static_cast<std::uint32_t>(Opcode::Out); }

bool writes_register(std::uint32_t op) {
  switch (static_cast<Opcode>(op)) {
    case Opcode::Load:
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
    case Opcode::Xor:
    case Opcode::Shift:
      return true;
    default:
      return false;
  }
}

std::uint32_t Instruction::encode() const {
  return (static_cast<std::uint32_t>(op) & 0xf) << 28 | (static_cast<std::uint32_t>(rd) & 0xf) << 24 |
         (static_cast<std::uint32_t>(rs1) & 0xf) << 20 | (static_cast<std::uint32_t>(rs2) & 0xf) << 16 |
         static_cast<std::uint16_t>(imm);
}

Instruction Instruction::decode(std::uint32_t word) {
  Instruction ins;
  ins.op = static_cast<Opcode>(word >> 28);
  ins.rd = static_cast<std::uint8_t>((word >> 24) & 0xf);
  ins.rs1 = static_cast<std::uint8_t>((word >> 20) & 0xf);
  ins.rs2 = static_cast<std::uint8_t>((word >> 16) & 0xf);
  ins.imm = static_cast<std::int16_t>(word & 0xffff);
  return ins;
}

void ToyProgram::validate() const {
  if (code.empty()) throw std::invalid_argument("program '" + name + "' is empty");
  for (std::size_t pc = 0; pc < code.size(); ++pc) {
    const auto ins = Instruction::decode(code[pc]);
    if (ins.op == Opcode::Beqz || ins.op == Opcode::Jump) {
      const auto target = static_cast<std::uint16_t>(ins.imm);
      if (target >= code.size()) {
        throw std::invalid_argument("program '" + name + "': branch at " + std::to_string(pc) +
                                    " targets " + std::to_string(target) + " outside the program");
      }
    }
  }
}

ProgramBuilder& ProgramBuilder::label(const std::string& name) {
  if (!labels_.emplace(name, code_.size()).second) {
    throw std::invalid_argument("duplicate label '" + name + "'");
  }
  return *this;
}

ProgramBuilder& ProgramBuilder::emit(Instruction ins) {
  code_.push_back(ins.encode());
  return *this;
}

ProgramBuilder& ProgramBuilder::emit_branch(Instruction ins, const std::string& target) {
  fixups_.emplace_back(code_.size(), target);
  return emit(ins);
}

ProgramBuilder& ProgramBuilder::halt() { return emit({Opcode::Halt}); }

ProgramBuilder& ProgramBuilder::load(Reg rd, Reg base, std::int16_t offset) {
  return emit({Opcode::Load, rd, base, 0, offset});
}

ProgramBuilder& ProgramBuilder::store(Reg src, Reg base, std::int16_t offset) {
  return emit({Opcode::Store, 0, base, src, offset});
}

ProgramBuilder& ProgramBuilder::add(Reg rd, Reg rs1, Reg rs2, std::int16_t imm) {
  return emit({Opcode::Add, rd, rs1, rs2, imm});
}

ProgramBuilder& ProgramBuilder::sub(Reg rd, Reg rs1, Reg rs2) { return emit({Opcode::Sub, rd, rs1, rs2}); }
ProgramBuilder& ProgramBuilder::mul(Reg rd, Reg rs1, Reg rs2) { return emit({Opcode::Mul, rd, rs1, rs2}); }
ProgramBuilder& ProgramBuilder::xor_(Reg rd, Reg rs1, Reg rs2) { return emit({Opcode::Xor, rd, rs1, rs2}); }

ProgramBuilder& ProgramBuilder::shl(Reg rd, Reg rs1, int amount) {
  return emit({Opcode::Shift, rd, rs1, 0, static_cast<std::int16_t>(amount & 31)});
}

ProgramBuilder& ProgramBuilder::shr(Reg rd, Reg rs1, int amount) {
  return emit({Opcode::Shift, rd, rs1, 0, static_cast<std::int16_t>(-(amount & 31))});
}

ProgramBuilder& ProgramBuilder::beqz(Reg rs, const std::string& target) {
  return emit_branch({Opcode::Beqz, 0, rs, 0, 0}, target);
}

ProgramBuilder& ProgramBuilder::jump(const std::string& target) {
  return emit_branch({Opcode::Jump}, target);
}

ProgramBuilder& ProgramBuilder::out(Reg rs) { return emit({Opcode::Out, 0, rs, 0, 0}); }

ProgramBuilder& ProgramBuilder::raw(std::uint32_t word) {
  code_.push_back(word);
  return *this;
}

ProgramBuilder& ProgramBuilder::data(std::uint32_t address, std::uint32_t value) {
  data_[address] = value;
  return *this;
}

ProgramBuilder& ProgramBuilder::data(std::uint32_t address, const std::vector<std::uint32_t>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) data_[address + static_cast<std::uint32_t>(i)] = values[i];
  return *this;
}

ProgramBuilder& ProgramBuilder::abft(bool on) {
  abft_ = on;
  return *this;
}

ToyProgram ProgramBuilder::build() const {
  ToyProgram p;
  p.name = name_;
  p.code = code_;
  p.data = data_;
  p.abft = abft_;
  for (const auto& [pc, target] : fixups_) {
    auto it = labels_.find(target);
    if (it == labels_.end()) throw std::invalid_argument("undefined label '" + target + "'");
    if (it->second > 0xffff) throw std::invalid_argument("label '" + target + "' out of range");
    p.code[pc] = (p.code[pc] & 0xffff0000u) | static_cast<std::uint32_t>(it->second);
  }
  p.validate();
  return p;
}

}  // namespace resilex::toycore
