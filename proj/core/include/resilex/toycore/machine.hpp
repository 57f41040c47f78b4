#pragma once

// Cycle-level model of the toy 5-stage in-order pipeline (IF/ID/EX/MEM/WB).
//
// All sequential state lives in MachineState::elements, one 32-bit slot per
// named latch field, masked to the field's width. Every bit of every
// injectable element is one flip-flop of the toy design.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "resilex/design.hpp"
#include "resilex/toycore/isa.hpp"

namespace resilex::toycore {

enum Element : std::size_t {
  kPc,
  kFetchStop,
  kIfidValid,
  kIfidInstr,
  kIfidFault,
  kIdexValid,
  kIdexOp,
  kIdexRd,
  kIdexRs1,
  kIdexRs2,
  kIdexA,
  kIdexB,
  kIdexImm,
  kIdexFault,
  kExmemValid,
  kExmemOp,
  kExmemRd,
  kExmemResult,
  kExmemStoreData,
  kExmemFault,
  kMemwbValid,
  kMemwbOp,
  kMemwbRd,
  kMemwbValue,
  kMemwbFault,
  kExcPending,
  kExcCause,
  kExcEpc,
  kPerfRetired,
  kReg1,  // r1..r15 follow contiguously
  kElementCount = kReg1 + kNumRegisters - 1,
};

struct ElementInfo {
  std::string_view name;
  Stage stage;
  unsigned width;
  /// Architectural register file bit (injectable only on request).
  bool regfile;
  /// Read by the pipeline. Unobserved elements (status/perf capture) can
  /// never change the outcome and are skipped when comparing states.
  bool observed;
  /// Captures the end of a long combinational path (ALU result, address
  /// adder, forwarding mux), leaving little timing slack.
  bool critical;
};

const ElementInfo& element_info(std::size_t element);
inline std::uint32_t element_mask(std::size_t element) {
  const unsigned w = element_info(element).width;
  return w >= 32 ? 0xffffffffu : (1u << w) - 1u;
}

inline constexpr std::uint32_t kMemoryWords = 1024;
inline constexpr std::size_t kOutputCapacity = 256;

struct MachineState {
  std::array<std::uint32_t, kElementCount> elements{};
  std::vector<std::uint32_t> memory;
  std::vector<std::uint32_t> output;

  std::uint32_t reg(unsigned r) const { return r == 0 ? 0 : elements[kReg1 + r - 1]; }
};

enum class StepStatus { Running, Halted, Trapped, Detected };

/// One executing core. Deterministic: the same program and the same
/// sequence of flips always produce the same states.
class Core {
 public:
  /// `detect_port` enables the detection hook on stores to kDetectPort;
  /// when disabled such stores are ignored.
  Core(const ToyProgram& program, bool detect_port);
  Core(const ToyProgram& program, bool detect_port, MachineState state, std::uint64_t cycle);

  StepStatus step();
  /// Steps until a terminal status or until `cycle_limit` cycles have
  /// elapsed in total; returns Running in the latter case.
  StepStatus run(std::uint64_t cycle_limit);

  void flip(std::size_t element, unsigned bit);

  const MachineState& state() const { return state_; }
  std::uint64_t cycle() const { return cycle_; }

 private:
  const ToyProgram* program_;
  bool detect_port_;
  MachineState state_;
  std::uint64_t cycle_ = 0;
};

MachineState initial_state(const ToyProgram& program);

/// Equality of everything that can influence future behaviour.
bool same_observable_state(const MachineState& a, const MachineState& b);

/// One injectable bit.
struct StateBit {
  std::size_t element;
  unsigned bit;
  bool operator==(const StateBit&) const = default;
};

/// Deterministic enumeration of injectable bits; index = flip-flop id.
class StateBitMap {
 public:
  explicit StateBitMap(bool include_regfile = false);

  std::size_t size() const { return bits_.size(); }
  const StateBit& operator[](std::size_t i) const { return bits_[i]; }
  std::span<const StateBit> bits() const { return bits_; }
  bool include_regfile() const { return include_regfile_; }
  /// Flip-flop id of a bit, or -1 when that bit is not injectable.
  FfId id_of(std::size_t element, unsigned bit) const;

 private:
  bool include_regfile_;
  std::vector<StateBit> bits_;
  std::array<FfId, kElementCount> first_id_{};
};

}  // namespace resilex::toycore
