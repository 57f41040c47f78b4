#pragma once

#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "resilex/selector.hpp"

namespace resilex {

/// One cross-layer combination: techniques (circuit through software), a
/// recovery and an ABFT mode.
struct Combination {
  CoreKind core = CoreKind::InO;
  std::set<std::string> techniques;
  std::string recovery{recovery::kNone};
  AbftMode abft = AbftMode::none;

  /// Technique ids (ABFT first) joined by '+'.
  std::string name() const;
  auto operator<=>(const Combination&) const = default;
};

/// Row counts of the enumeration, in enumeration order.
struct EnumerationCounts {
  std::size_t no_recovery = 0;
  std::size_t bounded_recovery = 0;  // flush (InO) or RoB (OoO)
  std::size_t replay_recovery = 0;   // IR and EIR
  std::size_t abft_alone = 0;
  std::size_t abft_correction = 0;
  std::size_t abft_detection = 0;
  std::size_t total() const {
    return no_recovery + bounded_recovery + replay_recovery + abft_alone + abft_correction + abft_detection;
  }
};

/// Every valid combination for a core kind. Recoveries pair with detection
/// techniques only; DFC never pairs with flush/RoB.
std::vector<Combination> enumerate_combinations(CoreKind core, EnumerationCounts* counts = nullptr);

struct EvaluatedPoint {
  Combination combination;
  ErrorKind kind = ErrorKind::SDC;
  double target = 1.0;
  CostReport report;
  bool feasible = true;
  /// Improvement of the targeted kind reachable with every flip-flop protected.
  double max_achievable = 0.0;
};

inline const std::vector<double>& default_target_grid() {
  static const std::vector<double> grid{2.0, 5.0, 50.0, 500.0, kMaxTarget};
  return grid;
}

struct ExploreOptions {
  std::vector<double> targets = default_target_grid();
  std::vector<ErrorKind> kinds{ErrorKind::SDC, ErrorKind::DUE};
  std::uint64_t coverage_seed = 1;
  unsigned workers = 0;
};

/// High-level techniques act first; the selector then protects flip-flops
/// with the combination's circuit/logic techniques for every (kind, target).
std::vector<EvaluatedPoint> evaluate_combination(const Combination& combo, const Design& design,
                                                 const VulnerabilityProfile& profile,
                                                 const TechniqueLibrary& library = default_library(),
                                                 const ExploreOptions& options = {});

/// Evaluates every combination; results follow enumeration order
/// regardless of the worker count.
std::vector<EvaluatedPoint> explore(std::span<const Combination> combos, const Design& design,
                                    const VulnerabilityProfile& profile,
                                    const TechniqueLibrary& library = default_library(),
                                    const ExploreOptions& options = {});

struct ParetoPoint {
  double energy = 0.0;
  double improvement = 0.0;
  /// Caller's index of the point.
  std::size_t index = 0;
  bool operator==(const ParetoPoint&) const = default;
};

/// Points not strictly dominated under (lower energy, higher improvement),
/// sorted by increasing improvement. Identical points are all kept. NaN
/// improvements are ignored. Throws std::invalid_argument on empty input.
std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points);

struct Step {
  double improvement = 0.0;
  double energy = 0.0;
  bool operator==(const Step&) const = default;
};

/// Step curve of the least energy that reaches each improvement level.
std::vector<Step> bound_region(std::span<const ParetoPoint> frontier);

/// Least energy on the curve reaching `improvement`; +inf beyond the last step.
double bound_energy(std::span<const Step> curve, double improvement);

/// Frontier of the feasible points for one error kind.
std::vector<ParetoPoint> frontier_of(std::span<const EvaluatedPoint> points, ErrorKind kind);

inline constexpr std::string_view kExploreHeader =
    "combination,recovery,target,area_pct,power_pct,energy_pct,exec_pct,gamma,sdc_x,due_x,feasible";
/// Target label, e.g. `sdc:50` or `due:max`.
std::string target_label(ErrorKind kind, double target);
void write_explore_csv(std::ostream& out, std::span<const EvaluatedPoint> points);
/// Two columns: improvement and energy percent, one step per line.
void write_plot_data(std::ostream& out, std::span<const Step> curve, std::string_view label);

}  // namespace resilex
