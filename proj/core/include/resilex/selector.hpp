#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "resilex/design.hpp"
#include "resilex/parity.hpp"
#include "resilex/profile.hpp"
#include "resilex/technique.hpp"

namespace resilex {

inline constexpr double kMaxTarget = std::numeric_limits<double>::infinity();

/// Explicit coverage of a high-level technique as covered (ff, benchmark)
/// pairs per error kind. An empty benchmark name matches every benchmark.
struct CoverageMap {
  std::set<std::pair<FfId, std::string>> sdc;
  std::set<std::pair<FfId, std::string>> due;

  bool covers(ErrorKind kind, FfId ff, const std::string& benchmark) const;
  bool empty() const { return sdc.empty() && due.empty(); }
  bool operator==(const CoverageMap&) const = default;
};

enum class AbftMode { none, correction, detection };
std::string_view to_string(AbftMode mode);
std::optional<AbftMode> parse_abft_mode(std::string_view text);

struct ProtectionAssignment {
  std::string recovery{recovery::kNone};
  /// Circuit/logic technique per flip-flop; absent means unprotected.
  std::map<FfId, std::string> per_ff;
  /// Architecture/software/algorithm techniques in application order.
  std::vector<std::string> high_level;
  /// Explicit coverage; techniques without an entry draw theirs from
  /// `coverage_seed`.
  std::map<std::string, CoverageMap> coverage;
  std::uint64_t coverage_seed = 1;
  /// Share of benchmarks on which LEAP-ctrl cells run in resilient mode.
  double leap_ctrl_duty = 1.0;
  /// Harden ABFT-covered flip-flops with LEAP-ctrl rather than LEAP-DICE.
  bool leap_ctrl_for_abft = false;

  const std::string* technique_of(FfId ff) const;
  bool has_high_level(std::string_view id) const;
  AbftMode abft_mode() const;
  /// Some detect-mode technique relies on the assignment's recovery, so
  /// the recovery hardware is needed.
  bool uses_recovery(const TechniqueLibrary& library) const;

  bool operator==(const ProtectionAssignment&) const = default;
};

/// Deterministic uniform draw in [0, 1) for coverage decisions.
double coverage_draw(std::uint64_t seed, std::string_view technique, FfId ff, std::string_view benchmark,
                     ErrorKind kind);

/// Whether `tech` (active in `assignment`) covers errors of `kind` at `ff`
/// while `benchmark` runs.
bool is_covered(const ProtectionAssignment& assignment, const TechniqueSpec& tech, CoreKind core, ErrorKind kind,
                FfId ff, const std::string& benchmark, const BenchmarkInfo& info);

/// (1 + ff_increase)(1 + exec_increase); throws on negative inputs.
double gamma(double ff_increase, double exec_increase);

struct DesignIncrease {
  double ff_increase = 0.0;
  double exec = 0.0;
};
/// Flip-flop count and execution time growth implied by an assignment.
/// Execution-time impacts compose multiplicatively.
DesignIncrease design_increase(const ProtectionAssignment& assignment, CoreKind core,
                               const TechniqueLibrary& library);
double assignment_gamma(const ProtectionAssignment& assignment, CoreKind core, const TechniqueLibrary& library);

/// Heuristic for the circuit/logic technique of one flip-flop. Flip-flops a
/// flush or reorder-buffer recovery cannot reach are hardened with LEAP-DICE;
/// so is every unrecoverable one when `harden_unrecoverable` is set. The rest
/// get the cheapest allowed technique, with parity usable at the unpipelined
/// cost only when the slack covers the widest unpipelined XOR tree.
std::string choose_technique(const FlipFlop& ff, const Design& design, std::string_view recovery,
                             const TechniqueLibrary& library = default_library(),
                             const std::set<std::string>& allowed = {std::string(tech::kLeapDice),
                                                                     std::string(tech::kParity)},
                             bool harden_unrecoverable = false);

/// Power (= energy) in flip-flop units of protecting one flip-flop with a
/// per-FF technique; used for ranking.
double per_ff_cost_units(const std::string& technique, const FlipFlop& ff, const Design& design,
                         const TechniqueLibrary& library, double leap_ctrl_duty = 1.0);

using ExpectedProfile = std::map<VulnerabilityProfile::Key, ExpectedCounts>;

/// Expected outcome counts after protection. High-level techniques act
/// first (ABFT before the others), then the flip-flop's own technique acts
/// on the residue. Throws std::invalid_argument when a detect-only
/// technique sits where a flush/RoB recovery cannot reach.
ExpectedProfile predict_profile(const Design& design, const VulnerabilityProfile& profile,
                                const ProtectionAssignment& assignment,
                                const TechniqueLibrary& library = default_library());

ExpectedCounts totals(const VulnerabilityProfile& profile);
ExpectedCounts totals(const ExpectedProfile& predicted);

/// SDC: OMM_before / OMM_after / γ. DUE: (UT+Hang)_before /
/// (UT+Hang+ED)_after / γ. A zero after-count gives +inf; a zero
/// before-count throws std::domain_error.
double improvement(const ExpectedCounts& before, const ExpectedCounts& after, double gamma, ErrorKind kind);

struct CostReport {
  double area = 0.0;
  double power = 0.0;
  double energy = 0.0;
  double exec = 0.0;
  double gamma = 1.0;
  double sdc_improvement = 1.0;
  double due_improvement = 1.0;
};

/// Costs relative to the unprotected core plus predicted improvements.
CostReport evaluate_assignment(const Design& design, const VulnerabilityProfile& profile,
                               const ProtectionAssignment& assignment,
                               const TechniqueLibrary& library = default_library());

struct Targets {
  std::optional<double> sdc;
  std::optional<double> due;
};

struct SelectOptions {
  /// Circuit/logic techniques the selection may use. LEAP-DICE is always
  /// available for flip-flops that must be hardened.
  std::set<std::string> per_ff{std::string(tech::kLeapDice), std::string(tech::kParity)};
};

struct SelectionResult {
  ProtectionAssignment assignment;
  CostReport report;
  bool feasible = true;
  /// Best improvements reachable with every flip-flop protected.
  double max_sdc = 0.0;
  double max_due = 0.0;
  std::string message;
};

/// Greedy selective protection on top of `base` (its recovery and
/// high-level techniques). Flip-flops are ranked by removed errors per unit
/// of marginal cost and protected until every target holds; a DUE target
/// after an SDC target continues over the still-unprotected flip-flops.
SelectionResult select_to_target(const Design& design, const VulnerabilityProfile& profile,
                                 const TechniqueLibrary& library, const Targets& targets,
                                 const ProtectionAssignment& base, const SelectOptions& options = {});
SelectionResult select_to_target(const Design& design, const VulnerabilityProfile& profile,
                                 const TechniqueLibrary& library, const Targets& targets,
                                 std::string_view recovery, const SelectOptions& options = {});

/// Materializes the seeded ABFT coverage of every ABFT benchmark.
CoverageMap draw_abft_coverage(const Design& design, const VulnerabilityProfile& profile,
                               const TechniqueLibrary& library, AbftMode mode, std::uint64_t seed);

/// Adds ABFT in `mode` with the given coverage. Correction mode also lets
/// the selector use LEAP-ctrl on covered flip-flops, resilient on the share
/// of benchmarks without ABFT. Throws std::invalid_argument when the other
/// mode is already present.
ProtectionAssignment layer_abft(const ProtectionAssignment& assignment, const CoverageMap& coverage,
                                AbftMode mode, const VulnerabilityProfile& profile,
                                const TechniqueLibrary& library = default_library(), bool use_leap_ctrl = true);

struct AbftCoverageStats {
  double sdc_union = 0.0;
  double sdc_intersection = 0.0;
  double due_union = 0.0;
  double due_intersection = 0.0;
};
/// Fractions of design flip-flops covered on any / on every listed benchmark.
AbftCoverageStats abft_coverage_stats(const CoverageMap& coverage, const Design& design,
                                      const std::vector<std::string>& benchmarks);

/// Gives LHL to every flip-flop without a circuit/logic technique.
ProtectionAssignment lhl_fallback(const ProtectionAssignment& assignment, const Design& design,
                                  const TechniqueLibrary& library = default_library());

/// Assignment file: `#!` header with recovery and high-level techniques,
/// then `ff_id,technique` lines.
void write_assignment(std::ostream& out, const ProtectionAssignment& assignment);
std::string serialize_assignment(const ProtectionAssignment& assignment);
ProtectionAssignment parse_assignment(std::istream& in, std::string_view source_name = "<assignment>");

/// Improvements print as `max` when infinite.
std::string format_improvement(double x);
inline constexpr std::string_view kCostReportHeader = "area_pct,power_pct,energy_pct,exec_pct,gamma,sdc_x,due_x";
std::string cost_report_row(const CostReport& report);

}  // namespace resilex
