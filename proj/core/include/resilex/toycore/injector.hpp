#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "resilex/design.hpp"
#include "resilex/parallel.hpp"
#include "resilex/profile.hpp"
#include "resilex/toycore/isa.hpp"
#include "resilex/toycore/machine.hpp"

namespace resilex::toycore {

/// Hook id that enables the ABFT checker's detection port.
inline constexpr std::string_view kAbftHook = "abft";

/// Cycle ceiling for golden runs.
inline constexpr std::uint64_t kGoldenCycleCeiling = 50'000'000;
/// Upper bound on injections per campaign.
inline constexpr std::uint64_t kMaxInjections = 100'000'000;

struct GoldenTrace {
  std::vector<std::uint32_t> output;
  std::uint64_t cycles = 0;
  /// State at cycle i * checkpoint_interval, for resuming and early exit.
  std::vector<MachineState> checkpoints;
  std::uint64_t checkpoint_interval = 32;

  bool operator==(const GoldenTrace& o) const {
    return output == o.output && cycles == o.cycles;
  }
};

/// Throws std::runtime_error("golden run does not terminate") past the
/// ceiling, and when the error-free run itself traps.
GoldenTrace run_golden(const ToyProgram& program, std::uint64_t cycle_ceiling = kGoldenCycleCeiling,
                       std::uint64_t checkpoint_interval = 32);

struct InjectionPoint {
  StateBit target;
  /// Flip happens at the start of this cycle (0 = before the first step).
  std::uint64_t cycle = 0;
};

struct InjectOptions {
  double hang_multiplier = 2.0;
  bool detect_port = false;
};

OutcomeClass inject_one(const ToyProgram& program, const GoldenTrace& golden, const InjectionPoint& point,
                        const InjectOptions& options = {});

struct CampaignConfig {
  std::uint64_t seed = 1;
  std::uint64_t injections = 1000;
  std::string benchmark;
  double hang_multiplier = 2.0;
  std::set<std::string> hooks;
  /// 0: take RESILEX_WORKERS from the environment, else hardware concurrency.
  unsigned workers = 0;

  void validate() const;
};

/// The injection drawn for campaign index `index`: a pure function of
/// (seed, index), uniform over (bit, cycle in [0, golden_cycles)).
InjectionPoint draw_injection(std::uint64_t seed, std::uint64_t index, const StateBitMap& bits,
                              std::uint64_t golden_cycles);

/// Runs `config.injections` injections. `design` must contain a flip-flop
/// for every id of the state-bit map; the regfile is injected iff the
/// design has flip-flops beyond the pipeline bits.
VulnerabilityProfile run_campaign(const ToyProgram& program, const CampaignConfig& config,
                                  const Design& design);

/// ⌈z² p(1−p) / margin²⌉ with z the two-sided normal quantile.
std::uint64_t required_sample_size(double margin, double confidence, double worst_p);

/// Flip-flop design of the toy core: one flip-flop per injectable bit with
/// synthetic row placement and slack by structure.
Design make_toycore_design(bool include_regfile = false);

}  // namespace resilex::toycore
