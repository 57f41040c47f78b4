#include "resilex/explorer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "resilex/parallel.hpp"
#include "resilex/text.hpp"

namespace resilex {

namespace {

// Canonical technique order used for names and subset enumeration.
constexpr std::string_view kOrder[] = {tech::kLeapDice, tech::kEds,        tech::kParity, tech::kDfc,
                                       tech::kMonitor,  tech::kAssertions, tech::kCfcss,  tech::kEddi};

std::size_t rank_of(const std::string& id) {
  for (std::size_t i = 0; i < std::size(kOrder); ++i) {
    if (kOrder[i] == id) return i;
  }
  return std::size(kOrder);
}

std::vector<std::string> ordered(const std::set<std::string>& ids) {
  std::vector<std::string> v(ids.begin(), ids.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return rank_of(a) < rank_of(b); });
  return v;
}

void add_subsets(std::vector<Combination>& out, CoreKind core, const std::vector<std::string_view>& pool,
                 std::string_view recovery, AbftMode abft) {
  for (std::uint32_t mask = 1; mask < (1u << pool.size()); ++mask) {
    Combination c;
    c.core = core;
    c.recovery = std::string(recovery);
    c.abft = abft;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (mask & (1u << i)) c.techniques.insert(std::string(pool[i]));
    }
    out.push_back(std::move(c));
  }
}

}  // namespace

std::string Combination::name() const {
  std::string s;
  auto add = [&](std::string_view id) {
    if (!s.empty()) s += '+';
    s += id;
  };
  if (abft == AbftMode::correction) add(tech::kAbftCorrection);
  if (abft == AbftMode::detection) add(tech::kAbftDetection);
  for (const auto& id : ordered(techniques)) add(id);
  return s;
}

std::vector<Combination> enumerate_combinations(CoreKind core, EnumerationCounts* counts) {
  const bool ino = core == CoreKind::InO;
  const std::vector<std::string_view> all =
      ino ? std::vector<std::string_view>{tech::kLeapDice, tech::kEds,   tech::kParity, tech::kDfc,
                                          tech::kAssertions, tech::kCfcss, tech::kEddi}
          : std::vector<std::string_view>{tech::kLeapDice, tech::kEds, tech::kParity, tech::kDfc, tech::kMonitor};
  const std::vector<std::string_view> bounded_pool =
      ino ? std::vector<std::string_view>{tech::kEds, tech::kParity}
          : std::vector<std::string_view>{tech::kEds, tech::kParity, tech::kMonitor};
  const std::vector<std::string_view> replay_pool =
      ino ? std::vector<std::string_view>{tech::kEds, tech::kParity, tech::kDfc}
          : std::vector<std::string_view>{tech::kEds, tech::kParity, tech::kDfc, tech::kMonitor};
  const std::string_view bounded = ino ? recovery::kFlush : recovery::kRob;

  EnumerationCounts n;
  std::vector<Combination> plain;
  add_subsets(plain, core, all, recovery::kNone, AbftMode::none);
  n.no_recovery = plain.size();
  const std::size_t no_rec_end = plain.size();
  add_subsets(plain, core, bounded_pool, bounded, AbftMode::none);
  n.bounded_recovery = plain.size() - no_rec_end;
  const std::size_t bounded_end = plain.size();
  add_subsets(plain, core, replay_pool, recovery::kIr, AbftMode::none);
  add_subsets(plain, core, replay_pool, recovery::kEir, AbftMode::none);
  n.replay_recovery = plain.size() - bounded_end;

  std::vector<Combination> out = plain;
  for (auto mode : {AbftMode::correction, AbftMode::detection}) {
    Combination c;
    c.core = core;
    c.abft = mode;
    out.push_back(c);
  }
  n.abft_alone = 2;
  for (const auto& c : plain) {
    Combination x = c;
    x.abft = AbftMode::correction;
    out.push_back(std::move(x));
  }
  n.abft_correction = plain.size();
  // ABFT detection reports errors itself and pairs with no hardware recovery.
  for (std::size_t i = 0; i < no_rec_end; ++i) {
    Combination x = plain[i];
    x.abft = AbftMode::detection;
    out.push_back(std::move(x));
  }
  n.abft_detection = no_rec_end;
  if (counts) *counts = n;
  return out;
}

std::vector<EvaluatedPoint> evaluate_combination(const Combination& combo, const Design& design,
                                                 const VulnerabilityProfile& profile,
                                                 const TechniqueLibrary& library, const ExploreOptions& options) {
  const CoreKind core = design.core_kind();
  if (combo.core != core) {
    throw std::invalid_argument("combination '" + combo.name() + "' targets the " + std::string(to_string(combo.core)) +
                                " core but the design is " + std::string(to_string(core)));
  }
  if (!library.recovery(combo.recovery).applies_to(core)) {
    throw std::invalid_argument("recovery '" + combo.recovery + "' does not apply to the " +
                                std::string(to_string(core)) + " core");
  }
  ProtectionAssignment base;
  base.recovery = combo.recovery;
  base.coverage_seed = options.coverage_seed;
  SelectOptions select;
  select.per_ff.clear();
  for (const auto& id : ordered(combo.techniques)) {
    const auto& t = library.technique(id);
    if (!t.applies_to(core)) {
      throw std::invalid_argument("technique '" + id + "' does not apply to the " + std::string(to_string(core)) +
                                  " core");
    }
    if (t.per_ff) {
      select.per_ff.insert(id);
    } else {
      base.high_level.push_back(id);
    }
  }
  if (combo.abft != AbftMode::none) {
    const auto cov = draw_abft_coverage(design, profile, library, combo.abft, options.coverage_seed);
    base = layer_abft(base, cov, combo.abft, profile, library);
  }

  std::vector<EvaluatedPoint> out;
  std::optional<CostReport> fixed;
  for (const auto kind : options.kinds) {
    for (const double target : options.targets) {
      EvaluatedPoint p;
      p.combination = combo;
      p.kind = kind;
      p.target = target;
      if (select.per_ff.empty()) {
        if (!fixed) fixed = evaluate_assignment(design, profile, base, library);
        p.report = *fixed;
        const double x = kind == ErrorKind::SDC ? fixed->sdc_improvement : fixed->due_improvement;
        p.max_achievable = x;
        p.feasible = target == kMaxTarget || x >= target;
      } else {
        Targets t;
        (kind == ErrorKind::SDC ? t.sdc : t.due) = target;
        const auto r = select_to_target(design, profile, library, t, base, select);
        p.report = r.report;
        p.feasible = r.feasible;
        p.max_achievable = kind == ErrorKind::SDC ? r.max_sdc : r.max_due;
      }
      if (kind == ErrorKind::DUE && combo.abft == AbftMode::detection) p.feasible = false;
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<EvaluatedPoint> explore(std::span<const Combination> combos, const Design& design,
                                    const VulnerabilityProfile& profile, const TechniqueLibrary& library,
                                    const ExploreOptions& options) {
  std::vector<std::vector<EvaluatedPoint>> slots(combos.size());
  parallel_for(combos.size(), resolve_workers(options.workers), [&](std::size_t i) {
    slots[i] = evaluate_combination(combos[i], design, profile, library, options);
  });
  std::vector<EvaluatedPoint> out;
  for (auto& s : slots) {
    for (auto& p : s) out.push_back(std::move(p));
  }
  return out;
}

std::vector<ParetoPoint> pareto_frontier(std::span<const ParetoPoint> points) {
  if (points.empty()) throw std::invalid_argument("Pareto frontier of an empty point set");
  std::vector<ParetoPoint> v;
  for (const auto& p : points) {
    if (!std::isnan(p.improvement) && !std::isnan(p.energy)) v.push_back(p);
  }
  std::sort(v.begin(), v.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    if (a.improvement != b.improvement) return a.improvement > b.improvement;
    return a.index < b.index;
  });
  std::vector<ParetoPoint> front;
  for (const auto& p : v) {
    if (front.empty() || p.improvement > front.back().improvement) {
      front.push_back(p);
    } else if (p.improvement == front.back().improvement && p.energy == front.back().energy) {
      front.push_back(p);  // identical to a frontier point
    }
  }
  std::sort(front.begin(), front.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.improvement != b.improvement) return a.improvement < b.improvement;
    if (a.energy != b.energy) return a.energy < b.energy;
    return a.index < b.index;
  });
  return front;
}

std::vector<Step> bound_region(std::span<const ParetoPoint> frontier) {
  std::vector<Step> curve;
  for (const auto& p : frontier) {
    const Step s{p.improvement, p.energy};
    if (!curve.empty() && curve.back() == s) continue;
    curve.push_back(s);
  }
  std::sort(curve.begin(), curve.end(), [](const Step& a, const Step& b) {
    return a.improvement != b.improvement ? a.improvement < b.improvement : a.energy < b.energy;
  });
  return curve;
}

double bound_energy(std::span<const Step> curve, double improvement) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : curve) {
    if (s.improvement >= improvement) best = std::min(best, s.energy);
  }
  return best;
}

std::vector<ParetoPoint> frontier_of(std::span<const EvaluatedPoint> points, ErrorKind kind) {
  std::vector<ParetoPoint> pts;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (p.kind != kind || !p.feasible) continue;
    const double x = kind == ErrorKind::SDC ? p.report.sdc_improvement : p.report.due_improvement;
    if (std::isnan(x)) continue;
    pts.push_back({p.report.energy, x, i});
  }
  if (pts.empty()) return {};
  return pareto_frontier(pts);
}

std::string target_label(ErrorKind kind, double target) {
  return std::string(kind == ErrorKind::SDC ? "sdc:" : "due:") +
         (target == kMaxTarget ? std::string("max") : text::format_double(target));
}

void write_explore_csv(std::ostream& out, std::span<const EvaluatedPoint> points) {
  out << kExploreHeader << "\n";
  for (const auto& p : points) {
    const auto name = p.combination.name();
    out << (name.empty() ? "-" : name) << ',' << p.combination.recovery << ',' << target_label(p.kind, p.target)
        << ',' << cost_report_row(p.report) << ',' << (p.feasible ? 1 : 0) << "\n";
  }
}

void write_plot_data(std::ostream& out, std::span<const Step> curve, std::string_view label) {
  out << "# " << label << ": improvement energy_pct\n";
  for (const auto& s : curve) out << format_improvement(s.improvement) << ' ' << text::format_double(s.energy * 100.0) << "\n";
}

}  // namespace resilex
