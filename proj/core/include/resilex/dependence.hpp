#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "resilex/selector.hpp"

namespace resilex {

/// One training/validation split of the benchmark set.
struct SplitTrial {
  std::size_t index = 0;
  std::vector<std::string> training;
  std::vector<std::string> validation;
  std::uint64_t seed = 0;

  bool operator==(const SplitTrial&) const = default;
};

/// `trials` random splits with `train_k` training benchmarks each and the
/// rest for validation. Trial i depends only on (seed, i). Throws
/// std::invalid_argument unless 1 <= train_k < benchmarks.size() and
/// trials >= 1, or when a benchmark name repeats.
std::vector<SplitTrial> make_splits(const std::vector<std::string>& benchmarks, std::size_t train_k,
                                    std::size_t trials, std::uint64_t seed);

struct DependenceOptions {
  /// Recovery and high-level techniques shared by every trial.
  ProtectionAssignment base;
  /// Per-FF techniques for the selector. Empty evaluates `base` unchanged,
  /// which measures a standalone high-level technique.
  std::set<std::string> per_ff{std::string(tech::kLeapDice), std::string(tech::kParity)};
  /// Also report the validated improvement after lhl_fallback.
  bool lhl = true;
  std::size_t permutations = 10'000;
  std::uint64_t permutation_seed = 1;
  unsigned workers = 0;
};

struct TrialOutcome {
  std::size_t index = 0;
  /// The target was met on the training benchmarks.
  bool feasible = true;
  std::string message;
  double trained = 0.0;
  double validated = 0.0;
  /// NaN when LHL reporting is off.
  double after_lhl = 0.0;
  CostReport cost;
  CostReport cost_after_lhl;
};

struct DependenceReport {
  ErrorKind kind = ErrorKind::SDC;
  double target = 1.0;
  std::vector<TrialOutcome> trials;
  /// Trials entering the means below.
  std::size_t feasible_trials = 0;
  double trained = 0.0;
  double validated = 0.0;
  double after_lhl = 0.0;
  /// (validated - trained) / trained.
  double underestimate = 0.0;
  double area = 0.0;
  double energy = 0.0;
  double area_after_lhl = 0.0;
  double energy_after_lhl = 0.0;
  /// Two-sided sign-flip permutation test on the per-trial differences
  /// validated - trained; NaN when no trial has finite values.
  double p_value = 0.0;
};

/// Selects protection on each trial's training benchmarks and re-evaluates
/// the same assignment on its validation benchmarks. Infeasible trials are
/// reported but left out of the means.
DependenceReport trained_vs_validated(const Design& design, const VulnerabilityProfile& profile,
                                      const TechniqueLibrary& library, std::span<const SplitTrial> splits,
                                      double target, ErrorKind kind, const DependenceOptions& options = {});

/// Two-sided sign-flip permutation test of mean(differences) = 0.
/// Non-finite entries are dropped; returns NaN when none remain.
double sign_flip_p_value(std::span<const double> differences, std::size_t permutations, std::uint64_t seed);

/// |intersection| / |union| over all subsets. Throws std::invalid_argument
/// for fewer than two subsets or an empty union.
double subset_similarity(std::span<const std::set<FfId>> subsets);

/// Ten subsets of the profile's flip-flops ranked by decreasing SDC + DUE
/// count on `benchmark`, ties by ascending id. Sizes differ by at most one,
/// larger subsets first; flip-flops without a record count as zero.
std::vector<std::set<FfId>> decile_subsets(const VulnerabilityProfile& profile, const std::string& benchmark);

struct DecileSimilarity {
  std::size_t decile = 0;  // 1 = most vulnerable
  double similarity = 0.0;
};
/// Per-decile similarity across the listed benchmarks (all when empty).
/// Deciles whose subsets are all empty report NaN.
std::vector<DecileSimilarity> decile_similarity(const VulnerabilityProfile& profile,
                                                std::vector<std::string> benchmarks = {});

inline constexpr std::string_view kDependenceHeader = "target,train_x,validate_x,after_lhl_x,area_pct,energy_pct";
inline constexpr std::string_view kDecileHeader = "decile,similarity";
void write_dependence_csv(std::ostream& out, std::span<const DependenceReport> reports);
void write_decile_csv(std::ostream& out, std::span<const DecileSimilarity> rows);

}  // namespace resilex
