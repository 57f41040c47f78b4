#include "resilex/toycore/machine.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace resilex::toycore {

namespace {

constexpr std::array<std::string_view, kNumRegisters - 1> kRegNames = {
    "rf.r1", "rf.r2",  "rf.r3",  "rf.r4",  "rf.r5",  "rf.r6",  "rf.r7", "rf.r8",
    "rf.r9", "rf.r10", "rf.r11", "rf.r12", "rf.r13", "rf.r14", "rf.r15"};

constexpr auto make_table() {
  std::array<ElementInfo, kElementCount> t{};
  auto set = [&](std::size_t e, std::string_view name, Stage stage, unsigned width, bool observed,
                 bool critical) { t[e] = ElementInfo{name, stage, width, false, observed, critical}; };
  set(kPc, "fetch.pc", Stage::fetch, 16, true, true);
  set(kFetchStop, "fetch.stop", Stage::fetch, 1, true, false);
  set(kIfidValid, "ifid.valid", Stage::decode, 1, true, false);
  set(kIfidInstr, "ifid.instr", Stage::decode, 32, true, false);
  set(kIfidFault, "ifid.fault", Stage::decode, 1, true, false);
  set(kIdexValid, "idex.valid", Stage::execute, 1, true, false);
  set(kIdexOp, "idex.op", Stage::execute, 4, true, false);
  set(kIdexRd, "idex.rd", Stage::execute, 4, true, false);
  set(kIdexRs1, "idex.rs1", Stage::execute, 4, true, false);
  set(kIdexRs2, "idex.rs2", Stage::execute, 4, true, false);
  set(kIdexA, "idex.a", Stage::execute, 32, true, false);
  set(kIdexB, "idex.b", Stage::execute, 32, true, false);
  set(kIdexImm, "idex.imm", Stage::execute, 16, true, false);
  set(kIdexFault, "idex.fault", Stage::execute, 1, true, false);
  set(kExmemValid, "exmem.valid", Stage::memory, 1, true, false);
  set(kExmemOp, "exmem.op", Stage::memory, 4, true, false);
  set(kExmemRd, "exmem.rd", Stage::memory, 4, true, false);
  set(kExmemResult, "exmem.result", Stage::memory, 32, true, true);
  set(kExmemStoreData, "exmem.sdata", Stage::memory, 32, true, true);
  set(kExmemFault, "exmem.fault", Stage::memory, 1, true, false);
  set(kMemwbValid, "memwb.valid", Stage::writeback, 1, true, false);
  set(kMemwbOp, "memwb.op", Stage::writeback, 4, true, false);
  set(kMemwbRd, "memwb.rd", Stage::writeback, 4, true, false);
  set(kMemwbValue, "memwb.value", Stage::writeback, 32, true, true);
  set(kMemwbFault, "memwb.fault", Stage::writeback, 1, true, false);
  set(kExcPending, "exc.pending", Stage::exception, 1, true, false);
  set(kExcCause, "exc.cause", Stage::exception, 4, false, false);
  set(kExcEpc, "exc.epc", Stage::exception, 16, false, false);
  set(kPerfRetired, "perf.retired", Stage::other, 16, false, false);
  for (std::size_t r = 0; r < kNumRegisters - 1; ++r) {
    t[kReg1 + r] = ElementInfo{kRegNames[r], Stage::post_commit, 32, true, true, true};
  }
  return t;
}

constexpr auto kTable = make_table();

std::int32_t sign_extend16(std::uint32_t v) { return static_cast<std::int16_t>(v & 0xffff); }

}  // namespace

const ElementInfo& element_info(std::size_t element) {
  if (element >= kElementCount) throw std::out_of_range("state element index out of range");
  return kTable[element];
}

MachineState initial_state(const ToyProgram& program) {
  MachineState s;
  s.memory.assign(kMemoryWords, 0);
  for (const auto& [addr, value] : program.data) {
    if (addr >= kMemoryWords) {
      throw std::invalid_argument("program '" + program.name + "' initialises memory outside " +
                                  std::to_string(kMemoryWords) + " words");
    }
    s.memory[addr] = value;
  }
  s.output.reserve(kOutputCapacity);
  return s;
}

bool same_observable_state(const MachineState& a, const MachineState& b) {
  for (std::size_t e = 0; e < kElementCount; ++e) {
    if (kTable[e].observed && a.elements[e] != b.elements[e]) return false;
  }
  return a.output == b.output && a.memory == b.memory;
}

Core::Core(const ToyProgram& program, bool detect_port)
    : Core(program, detect_port, initial_state(program), 0) {}

Core::Core(const ToyProgram& program, bool detect_port, MachineState state, std::uint64_t cycle)
    : program_(&program), detect_port_(detect_port), state_(std::move(state)), cycle_(cycle) {}

void Core::flip(std::size_t element, unsigned bit) {
  if (bit >= element_info(element).width) throw std::out_of_range("bit outside state element");
  state_.elements[element] ^= 1u << bit;
}

StepStatus Core::run(std::uint64_t cycle_limit) {
  while (cycle_ < cycle_limit) {
    const auto st = step();
    if (st != StepStatus::Running) return st;
  }
  return StepStatus::Running;
}

StepStatus Core::step() {
  const auto c = state_.elements;  // latch values at the start of the cycle
  auto& n = state_.elements;
  auto put = [&](std::size_t e, std::uint32_t v) { n[e] = v & element_mask(e); };
  ++cycle_;

  auto trap = [&](std::uint32_t cause) {
    put(kExcPending, 1);
    put(kExcCause, cause);
    put(kExcEpc, c[kPerfRetired]);
    return StepStatus::Trapped;
  };

  if (c[kExcPending]) return trap(c[kExcCause]);

  // WB: commit in order; traps are precise.
  if (c[kMemwbValid]) {
    const auto op = c[kMemwbOp];
    if (c[kMemwbFault] || !is_legal_opcode(op)) return trap(1);
    put(kPerfRetired, c[kPerfRetired] + 1);
    if (op == static_cast<std::uint32_t>(Opcode::Halt)) return StepStatus::Halted;
    if (op == static_cast<std::uint32_t>(Opcode::Out)) {
      if (state_.output.size() >= kOutputCapacity) return trap(2);
      state_.output.push_back(c[kMemwbValue]);
    } else if (writes_register(op) && c[kMemwbRd] != 0) {
      put(kReg1 + c[kMemwbRd] - 1, c[kMemwbValue]);
    }
  }

  // MEM
  put(kMemwbValid, c[kExmemValid]);
  if (c[kExmemValid]) {
    const auto op = c[kExmemOp];
    const auto addr = c[kExmemResult];
    std::uint32_t value = c[kExmemResult];
    std::uint32_t fault = c[kExmemFault];
    if (!fault && op == static_cast<std::uint32_t>(Opcode::Load)) {
      if (addr < kMemoryWords) {
        value = state_.memory[addr];
      } else {
        fault = 1;
      }
    } else if (!fault && op == static_cast<std::uint32_t>(Opcode::Store)) {
      if (addr == kDetectPort) {
        if (detect_port_) return StepStatus::Detected;
      } else if (addr < kMemoryWords) {
        state_.memory[addr] = c[kExmemStoreData];
      } else {
        fault = 1;
      }
    }
    put(kMemwbOp, op);
    put(kMemwbRd, c[kExmemRd]);
    put(kMemwbValue, value);
    put(kMemwbFault, fault);
  }

  // EX, with forwarding from the MEM (non-load) and WB latches.
  bool redirect = false;
  std::uint32_t target = 0;
  put(kExmemValid, c[kIdexValid]);
  if (c[kIdexValid]) {
    auto forward = [&](std::uint32_t reg, std::uint32_t value) {
      if (reg == 0) return value;
      if (c[kExmemValid] && !c[kExmemFault] && writes_register(c[kExmemOp]) &&
          c[kExmemOp] != static_cast<std::uint32_t>(Opcode::Load) && c[kExmemRd] == reg) {
        return c[kExmemResult];
      }
      if (c[kMemwbValid] && writes_register(c[kMemwbOp]) && c[kMemwbRd] == reg) return c[kMemwbValue];
      return value;
    };
    const auto op = c[kIdexOp];
    const auto a = forward(c[kIdexRs1], c[kIdexA]);
    const auto b = forward(c[kIdexRs2], c[kIdexB]);
    const auto imm = sign_extend16(c[kIdexImm]);
    std::uint32_t fault = c[kIdexFault];
    std::uint32_t result = 0;
    if (!fault) {
      switch (op) {
        case static_cast<std::uint32_t>(Opcode::Load):
        case static_cast<std::uint32_t>(Opcode::Store):
          result = a + static_cast<std::uint32_t>(imm);
          break;
        case static_cast<std::uint32_t>(Opcode::Add):
          result = a + b + static_cast<std::uint32_t>(imm);
          break;
        case static_cast<std::uint32_t>(Opcode::Sub): result = a - b; break;
        case static_cast<std::uint32_t>(Opcode::Mul): result = a * b; break;
        case static_cast<std::uint32_t>(Opcode::Xor): result = a ^ b; break;
        case static_cast<std::uint32_t>(Opcode::Shift):
          result = imm >= 0 ? a << (imm & 31) : a >> ((-imm) & 31);
          break;
        case static_cast<std::uint32_t>(Opcode::Beqz):
          redirect = a == 0;
          target = c[kIdexImm];
          break;
        case static_cast<std::uint32_t>(Opcode::Jump):
          redirect = true;
          target = c[kIdexImm];
          break;
        case static_cast<std::uint32_t>(Opcode::Out): result = a; break;
        case static_cast<std::uint32_t>(Opcode::Halt): break;
        default: fault = 1; break;
      }
    }
    put(kExmemOp, op);
    put(kExmemRd, c[kIdexRd]);
    put(kExmemResult, result);
    put(kExmemStoreData, b);
    put(kExmemFault, fault);
  }

  // ID, with a one-cycle load-use interlock. Registers are read after the
  // WB write above.
  const bool stall = c[kIfidValid] && c[kIdexValid] &&
                     c[kIdexOp] == static_cast<std::uint32_t>(Opcode::Load) && c[kIdexRd] != 0 &&
                     ([&] {
                       const auto ins = Instruction::decode(c[kIfidInstr]);
                       return ins.rs1 == c[kIdexRd] || ins.rs2 == c[kIdexRd];
                     })();
  if (stall) {
    put(kIdexValid, 0);
  } else {
    put(kIdexValid, c[kIfidValid]);
    if (c[kIfidValid]) {
      const auto ins = Instruction::decode(c[kIfidInstr]);
      put(kIdexOp, static_cast<std::uint32_t>(ins.op));
      put(kIdexRd, ins.rd);
      put(kIdexRs1, ins.rs1);
      put(kIdexRs2, ins.rs2);
      put(kIdexA, state_.reg(ins.rs1));
      put(kIdexB, state_.reg(ins.rs2));
      put(kIdexImm, static_cast<std::uint16_t>(ins.imm));
      put(kIdexFault, c[kIfidFault]);
      if (ins.op == Opcode::Halt && !c[kIfidFault]) put(kFetchStop, 1);
    }
  }

  // IF
  if (!stall) {
    if (c[kFetchStop]) {
      put(kIfidValid, 0);
    } else {
      const auto pc = c[kPc];
      put(kIfidValid, 1);
      if (pc < program_->code.size()) {
        put(kIfidInstr, program_->code[pc]);
        put(kIfidFault, 0);
      } else {
        put(kIfidInstr, 0);
        put(kIfidFault, 1);
      }
      put(kPc, pc + 1);
    }
  }

  if (redirect) {
    put(kPc, target);
    put(kIfidValid, 0);
    put(kIdexValid, 0);
    put(kFetchStop, 0);
  }
  return StepStatus::Running;
}

StateBitMap::StateBitMap(bool include_regfile) : include_regfile_(include_regfile) {
  first_id_.fill(-1);
  for (std::size_t e = 0; e < kElementCount; ++e) {
    const auto& info = kTable[e];
    if (info.regfile && !include_regfile) continue;
    first_id_[e] = static_cast<FfId>(bits_.size());
    for (unsigned b = 0; b < info.width; ++b) bits_.push_back({e, b});
  }
}

FfId StateBitMap::id_of(std::size_t element, unsigned bit) const {
  if (element >= kElementCount || bit >= kTable[element].width || first_id_[element] < 0) return -1;
  return first_id_[element] + bit;
}

}  // namespace resilex::toycore
