#include "resilex/dependence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "resilex/explorer.hpp"
#include "resilex/parallel.hpp"
#include "resilex/random.hpp"
#include "resilex/text.hpp"

namespace resilex {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double of_kind(const CostReport& r, ErrorKind kind) {
  return kind == ErrorKind::SDC ? r.sdc_improvement : r.due_improvement;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<SplitTrial> make_splits(const std::vector<std::string>& benchmarks, std::size_t train_k,
                                    std::size_t trials, std::uint64_t seed) {
  if (train_k == 0 || train_k >= benchmarks.size()) {
    throw std::invalid_argument("training set size must be between 1 and " +
                                std::to_string(benchmarks.size() > 0 ? benchmarks.size() - 1 : 0) + ", got " +
                                std::to_string(train_k));
  }
  if (trials == 0) throw std::invalid_argument("at least one trial is required");
  std::vector<std::string> pool = benchmarks;
  std::sort(pool.begin(), pool.end());
  if (std::adjacent_find(pool.begin(), pool.end()) != pool.end()) {
    throw std::invalid_argument("benchmark names must be unique");
  }
  std::vector<SplitTrial> out;
  out.reserve(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    auto engine = rng::make_engine(seed, i);
    std::vector<std::string> order = pool;
    rng::shuffle(order, engine);
    SplitTrial t;
    t.index = i;
    t.seed = seed;
    t.training.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_k));
    t.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(train_k), order.end());
    std::sort(t.training.begin(), t.training.end());
    std::sort(t.validation.begin(), t.validation.end());
    out.push_back(std::move(t));
  }
  return out;
}

DependenceReport trained_vs_validated(const Design& design, const VulnerabilityProfile& profile,
                                      const TechniqueLibrary& library, std::span<const SplitTrial> splits,
                                      double target, ErrorKind kind, const DependenceOptions& options) {
  if (splits.empty()) throw std::invalid_argument("no training/validation splits");
  if (!(target >= 1.0)) throw std::invalid_argument("improvement targets must be at least 1");
  for (const auto& s : splits) {
    for (const auto* set : {&s.training, &s.validation}) {
      for (const auto& b : *set) {
        if (!profile.benchmarks().contains(b)) {
          throw std::invalid_argument("benchmark '" + b + "' of trial " + std::to_string(s.index) +
                                      " is not in the profile");
        }
      }
    }
  }

  DependenceReport report;
  report.kind = kind;
  report.target = target;
  report.trials.resize(splits.size());
  parallel_for(splits.size(), resolve_workers(options.workers), [&](std::size_t i) {
    const auto& split = splits[i];
    const auto train = profile.restrict_to(split.training);
    const auto validate = profile.restrict_to(split.validation);
    TrialOutcome& t = report.trials[i];
    t.index = split.index;
    ProtectionAssignment chosen = options.base;
    if (options.per_ff.empty()) {
      t.cost = evaluate_assignment(design, train, chosen, library);
    } else {
      SelectOptions select;
      select.per_ff = options.per_ff;
      Targets targets;
      (kind == ErrorKind::SDC ? targets.sdc : targets.due) = target;
      auto sel = select_to_target(design, train, library, targets, options.base, select);
      t.feasible = sel.feasible;
      t.message = sel.message;
      t.cost = sel.report;
      chosen = std::move(sel.assignment);
    }
    t.trained = of_kind(t.cost, kind);
    t.validated = of_kind(evaluate_assignment(design, validate, chosen, library), kind);
    t.after_lhl = kNaN;
    if (options.lhl) {
      const auto hardened = lhl_fallback(chosen, design, library);
      t.cost_after_lhl = evaluate_assignment(design, validate, hardened, library);
      t.after_lhl = of_kind(t.cost_after_lhl, kind);
    }
  });

  std::vector<double> trained, validated, after, area, energy, area_lhl, energy_lhl, diffs;
  for (const auto& t : report.trials) {
    if (!t.feasible) continue;
    trained.push_back(t.trained);
    validated.push_back(t.validated);
    after.push_back(t.after_lhl);
    area.push_back(t.cost.area);
    energy.push_back(t.cost.energy);
    area_lhl.push_back(t.cost_after_lhl.area);
    energy_lhl.push_back(t.cost_after_lhl.energy);
    diffs.push_back(t.validated - t.trained);
  }
  report.feasible_trials = trained.size();
  report.trained = mean(trained);
  report.validated = mean(validated);
  report.after_lhl = options.lhl ? mean(after) : kNaN;
  report.underestimate = (report.validated - report.trained) / report.trained;
  report.area = mean(area);
  report.energy = mean(energy);
  report.area_after_lhl = options.lhl ? mean(area_lhl) : kNaN;
  report.energy_after_lhl = options.lhl ? mean(energy_lhl) : kNaN;
  report.p_value = sign_flip_p_value(diffs, options.permutations, options.permutation_seed);
  return report;
}

double sign_flip_p_value(std::span<const double> differences, std::size_t permutations, std::uint64_t seed) {
  std::vector<double> d;
  for (double x : differences) {
    if (std::isfinite(x)) d.push_back(x);
  }
  if (d.empty()) return kNaN;
  if (permutations == 0) throw std::invalid_argument("the permutation test needs at least one permutation");
  auto abs_sum = [](const std::vector<double>& v, const std::vector<int>& signs) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += signs[i] * v[i];
    return std::abs(s);
  };
  std::vector<int> signs(d.size(), 1);
  const double observed = abs_sum(d, signs);
  // Relative slack so that sign patterns equal to the observed one count.
  const double tol = 1e-12 * std::max(1.0, observed);
  auto engine = rng::make_engine(seed, 0x5167);
  std::size_t extreme = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    for (auto& s : signs) s = rng::bernoulli(engine, 0.5) ? -1 : 1;
    if (abs_sum(d, signs) >= observed - tol) ++extreme;
  }
  return static_cast<double>(extreme + 1) / static_cast<double>(permutations + 1);
}

double subset_similarity(std::span<const std::set<FfId>> subsets) {
  if (subsets.size() < 2) throw std::invalid_argument("similarity needs at least two subsets");
  std::set<FfId> all;
  for (const auto& s : subsets) all.insert(s.begin(), s.end());
  if (all.empty()) throw std::invalid_argument("similarity of empty subsets is undefined");
  std::size_t common = 0;
  for (const auto ff : all) {
    if (std::all_of(subsets.begin(), subsets.end(), [ff](const auto& s) { return s.contains(ff); })) ++common;
  }
  return static_cast<double>(common) / static_cast<double>(all.size());
}

std::vector<std::set<FfId>> decile_subsets(const VulnerabilityProfile& profile, const std::string& benchmark) {
  if (!profile.benchmarks().contains(benchmark)) {
    throw std::invalid_argument("benchmark '" + benchmark + "' is not in the profile");
  }
  std::vector<std::pair<std::uint64_t, FfId>> ranked;
  for (const auto ff : profile.flip_flops()) {
    const auto* c = profile.find(ff, benchmark);
    ranked.emplace_back(c ? c->non_vanished() : 0, ff);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  constexpr std::size_t kDeciles = 10;
  std::vector<std::set<FfId>> out(kDeciles);
  const std::size_t base = ranked.size() / kDeciles;
  const std::size_t extra = ranked.size() % kDeciles;
  std::size_t pos = 0;
  for (std::size_t d = 0; d < kDeciles; ++d) {
    const std::size_t n = base + (d < extra ? 1 : 0);
    for (std::size_t i = 0; i < n; ++i) out[d].insert(ranked[pos++].second);
  }
  return out;
}

std::vector<DecileSimilarity> decile_similarity(const VulnerabilityProfile& profile,
                                                std::vector<std::string> benchmarks) {
  if (benchmarks.empty()) benchmarks = profile.benchmark_names();
  if (benchmarks.size() < 2) throw std::invalid_argument("decile similarity needs at least two benchmarks");
  std::vector<std::vector<std::set<FfId>>> per_bench;
  for (const auto& b : benchmarks) per_bench.push_back(decile_subsets(profile, b));
  std::vector<DecileSimilarity> out;
  for (std::size_t d = 0; d < per_bench.front().size(); ++d) {
    std::vector<std::set<FfId>> subsets;
    bool any = false;
    for (const auto& p : per_bench) {
      subsets.push_back(p[d]);
      any = any || !p[d].empty();
    }
    out.push_back({d + 1, any ? subset_similarity(subsets) : kNaN});
  }
  return out;
}

void write_dependence_csv(std::ostream& out, std::span<const DependenceReport> reports) {
  out << kDependenceHeader << "\n";
  for (const auto& r : reports) {
    out << target_label(r.kind, r.target) << ',' << format_improvement(r.trained) << ','
        << format_improvement(r.validated) << ',' << format_improvement(r.after_lhl) << ','
        << text::format_double(r.area * 100.0) << ',' << text::format_double(r.energy * 100.0) << "\n";
  }
}

void write_decile_csv(std::ostream& out, std::span<const DecileSimilarity> rows) {
  out << kDecileHeader << "\n";
  for (const auto& r : rows) out << r.decile << ',' << format_improvement(r.similarity) << "\n";
}

}  // namespace resilex
