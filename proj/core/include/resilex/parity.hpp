#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "resilex/design.hpp"
#include "resilex/profile.hpp"
#include "resilex/technique.hpp"

namespace resilex {

enum class ParityHeuristic { size, vulnerability, locality, timing, optimized };

std::string_view to_string(ParityHeuristic h);
std::optional<ParityHeuristic> parse_parity_heuristic(std::string_view text);

struct ParityGroup {
  std::vector<FfId> members;
  bool pipelined = false;
  std::size_t staging_registers = 0;

  std::size_t size() const { return members.size(); }
  bool operator==(const ParityGroup&) const = default;
};

/// Design-level cost fractions (0.01 = 1% of the unprotected core).
struct CostVector {
  double area = 0.0;
  double power = 0.0;
  double energy = 0.0;
  bool operator==(const CostVector&) const = default;
};

struct ParityPlan {
  std::vector<ParityGroup> groups;
  ParityHeuristic heuristic = ParityHeuristic::optimized;
  /// Requested group size; 0 for the optimized plan (which mixes sizes).
  std::size_t group_size = 0;
  CostVector cost;

  std::size_t protected_count() const;
  bool operator==(const ParityPlan&) const = default;
};

/// Staging registers of a pipelined XOR tree over `group_size` inputs: one
/// register per four-input sub-tree for every two tree levels.
std::size_t staging_registers(std::size_t group_size);

/// Unpipelined iff every member's slack exceeds the group's XOR-tree delay.
bool needs_pipelining(const Design& design, std::span<const FfId> members);

/// Groups `ffs` by one of the fixed heuristics. Members are ordered by the
/// heuristic (size: input order; vulnerability: decreasing SDC+DUE count;
/// locality: k-means clusters on placement; timing: increasing slack) and cut
/// into chunks of `group_size`, the remainder last. Pipelined chunks larger
/// than the pipelined cap are split; spacing repair runs last.
/// `profile` is only needed by the vulnerability heuristic.
ParityPlan plan_parity(const Design& design, std::span<const FfId> ffs, const VulnerabilityProfile* profile,
                       ParityHeuristic heuristic, std::size_t group_size,
                       const TechniqueLibrary& library = default_library());

/// Slack-driven plan: FFs whose slack exceeds the delay of the widest
/// unpipelined tree share unpipelined groups, the rest share pipelined ones.
ParityPlan optimized_plan(const Design& design, std::span<const FfId> ffs,
                          const TechniqueLibrary& library = default_library());

struct SpacingViolation {
  std::size_t group = 0;
  FfId a = 0;
  FfId b = 0;
  double distance = 0.0;
  bool operator==(const SpacingViolation&) const = default;
};

struct SpacingReport {
  std::vector<SpacingViolation> violations;
  /// Nearest same-group neighbour distance of every member of a group with
  /// at least two members.
  SpacingHistogram within_group;
};

/// Minimum distance between two members of one parity group.
inline constexpr double kMinGroupSpacing = 1.0;

SpacingReport check_spacing(const ParityPlan& plan, const Design& design);

/// Predictor, checker, parity bit and staging registers of every group,
/// normalized to the baseline core through the design's cost model.
CostVector parity_cost(const ParityPlan& plan, const Design& design,
                       const TechniqueLibrary& library = default_library());

/// Flip-flop units of one group (area, power).
std::pair<double, double> parity_group_units(std::size_t group_size, bool pipelined, const ParityConstants& k);

/// Plan file: `#!` header, `group_id,pipelined,ff_ids` lines with the ids
/// space-separated, and a `#` cost footer.
void write_plan(std::ostream& out, const ParityPlan& plan);
std::string serialize_plan(const ParityPlan& plan);
ParityPlan parse_plan(std::istream& in, std::string_view source_name = "<plan>");

}  // namespace resilex
