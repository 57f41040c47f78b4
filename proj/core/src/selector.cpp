#include "resilex/selector.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "resilex/text.hpp"

namespace resilex {

bool CoverageMap::covers(ErrorKind kind, FfId ff, const std::string& benchmark) const {
  const auto& s = kind == ErrorKind::SDC ? sdc : due;
  return s.contains({ff, benchmark}) || s.contains({ff, std::string()});
}

std::string_view to_string(AbftMode mode) {
  switch (mode) {
    case AbftMode::none: return "none";
    case AbftMode::correction: return "correction";
    case AbftMode::detection: return "detection";
  }
  return "?";
}

std::optional<AbftMode> parse_abft_mode(std::string_view text) {
  for (auto m : {AbftMode::none, AbftMode::correction, AbftMode::detection}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

const std::string* ProtectionAssignment::technique_of(FfId ff) const {
  const auto it = per_ff.find(ff);
  return it == per_ff.end() ? nullptr : &it->second;
}

bool ProtectionAssignment::has_high_level(std::string_view id) const {
  return std::find(high_level.begin(), high_level.end(), id) != high_level.end();
}

AbftMode ProtectionAssignment::abft_mode() const {
  if (has_high_level(tech::kAbftCorrection)) return AbftMode::correction;
  if (has_high_level(tech::kAbftDetection)) return AbftMode::detection;
  return AbftMode::none;
}

bool ProtectionAssignment::uses_recovery(const TechniqueLibrary& library) const {
  if (recovery == recovery::kNone) return false;
  auto relies = [&](const std::string& id) {
    const auto& t = library.technique(id);
    return t.mode == Mode::detect && t.recoveries.contains(recovery);
  };
  if (std::any_of(high_level.begin(), high_level.end(), relies)) return true;
  std::set<std::string> seen;
  for (const auto& [ff, id] : per_ff) {
    if (seen.insert(id).second && relies(id)) return true;
  }
  return false;
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

namespace {

std::uint64_t kind_salt(ErrorKind kind) { return kind == ErrorKind::SDC ? 0x5dcULL : 0xd0eULL; }

double hashed_draw(std::uint64_t seed, std::uint64_t technique_hash, FfId ff, std::uint64_t benchmark_hash,
                   ErrorKind kind) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ technique_hash);
  h = mix64(h ^ static_cast<std::uint64_t>(ff));
  h = mix64(h ^ benchmark_hash);
  h = mix64(h ^ kind_salt(kind));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

double coverage_draw(std::uint64_t seed, std::string_view technique, FfId ff, std::string_view benchmark,
                     ErrorKind kind) {
  return hashed_draw(seed, text::fnv1a64(technique), ff, text::fnv1a64(benchmark), kind);
}

bool is_covered(const ProtectionAssignment& assignment, const TechniqueSpec& tech, CoreKind core, ErrorKind kind,
                FfId ff, const std::string& benchmark, const BenchmarkInfo& info) {
  if (tech.benchmark_conditional && !info.abft) return false;
  if (const auto it = assignment.coverage.find(tech.id); it != assignment.coverage.end()) {
    return it->second.covers(kind, ff, benchmark);
  }
  const auto& fig = tech.on(core);
  const double covered = kind == ErrorKind::SDC ? fig.sdc.covered : fig.due.covered;
  const std::string_view bench = tech.benchmark_conditional ? std::string_view(benchmark) : std::string_view();
  return coverage_draw(assignment.coverage_seed, tech.id, ff, bench, kind) < covered;
}

double gamma(double ff_increase, double exec_increase) {
  if (!(ff_increase >= 0.0) || !(exec_increase >= 0.0)) {
    throw std::invalid_argument("flip-flop and execution-time increases must be non-negative");
  }
  return (1.0 + ff_increase) * (1.0 + exec_increase);
}

DesignIncrease design_increase(const ProtectionAssignment& assignment, CoreKind core,
                               const TechniqueLibrary& library) {
  DesignIncrease inc;
  double exec_factor = 1.0;
  for (const auto& id : assignment.high_level) {
    const auto& fig = library.technique(id).on(core);
    inc.ff_increase += fig.ff_increase;
    exec_factor *= 1.0 + fig.exec;
  }
  inc.exec = exec_factor - 1.0;
  if (assignment.uses_recovery(library)) inc.ff_increase += library.recovery(assignment.recovery).on(core).ff_increase;
  return inc;
}

double assignment_gamma(const ProtectionAssignment& assignment, CoreKind core, const TechniqueLibrary& library) {
  const auto inc = design_increase(assignment, core, library);
  return gamma(inc.ff_increase, inc.exec);
}

double per_ff_cost_units(const std::string& technique, const FlipFlop& ff, const Design& design,
                         const TechniqueLibrary& library, double leap_ctrl_duty) {
  const auto& t = library.technique(technique);
  const auto& fig = t.on(design.core_kind());
  if (technique == tech::kParity) {
    const auto& k = library.parity();
    const bool fast = ff.slack_ps > design.xor_tree_delay_ps(k.unpipelined_size);
    const std::size_t g = fast ? k.unpipelined_size : k.pipelined_size;
    return parity_group_units(g, !fast, k).second / static_cast<double>(g);
  }
  double cell = t.cell ? t.cell->power - 1.0 : 0.0;
  if (t.economy_cell) {
    cell = leap_ctrl_duty * cell + (1.0 - leap_ctrl_duty) * (t.economy_cell->power - 1.0);
  }
  return cell + fig.per_ff_power;
}

std::string choose_technique(const FlipFlop& ff, const Design& design, std::string_view recovery,
                             const TechniqueLibrary& library, const std::set<std::string>& allowed,
                             bool harden_unrecoverable) {
  const CoreKind core = design.core_kind();
  const auto& rec = library.recovery(recovery);
  if (!rec.applies_to(core)) {
    throw std::invalid_argument("recovery '" + std::string(recovery) + "' does not apply to the " +
                                std::string(to_string(core)) + " core");
  }
  const bool reach = recovery_reach(rec, core, ff);
  const bool bounded = recovery == recovery::kFlush || recovery == recovery::kRob;
  const std::string harden(tech::kLeapDice);
  if (!reach && (bounded || harden_unrecoverable)) return harden;

  // Candidates in tie-break order: parity, LEAP-DICE, EDS, then the rest.
  std::vector<std::string> order;
  for (auto id : {tech::kParity, tech::kLeapDice, tech::kEds}) {
    if (allowed.contains(std::string(id))) order.emplace_back(id);
  }
  for (const auto& id : allowed) {
    if (std::find(order.begin(), order.end(), id) == order.end()) order.push_back(id);
  }
  std::string best;
  double best_cost = 0.0;
  for (const auto& id : order) {
    const auto& t = library.technique(id);
    if (!t.per_ff || !t.applies_to(core)) continue;
    const double c = per_ff_cost_units(id, ff, design, library);
    if (best.empty() || c < best_cost) {
      best = id;
      best_cost = c;
    }
  }
  return best.empty() ? harden : best;
}

namespace {

// Shared per-(ff, benchmark) prediction used by predict_profile and the
// greedy selection.
class Predictor {
 public:
  Predictor(const Design& design, const VulnerabilityProfile& profile, const ProtectionAssignment& assignment,
            const TechniqueLibrary& library)
      : design_(design), profile_(profile), assignment_(assignment), library_(library), core_(design.core_kind()) {
    rec_ = &library.recovery(assignment.recovery);
    if (!rec_->applies_to(core_)) {
      throw std::invalid_argument("recovery '" + assignment.recovery + "' does not apply to the " +
                                  std::string(to_string(core_)) + " core");
    }
    std::vector<const TechniqueSpec*> abft;
    std::vector<const TechniqueSpec*> rest;
    for (const auto& id : assignment.high_level) {
      const auto& t = library.technique(id);
      if (t.per_ff) throw std::invalid_argument("technique '" + id + "' is applied per flip-flop, not design-wide");
      if (!t.applies_to(core_)) {
        throw std::invalid_argument("technique '" + id + "' does not apply to the " + std::string(to_string(core_)) +
                                    " core");
      }
      (t.layer == Layer::algorithm ? abft : rest).push_back(&t);
    }
    abft.insert(abft.end(), rest.begin(), rest.end());
    for (const auto* t : abft) {
      High h;
      h.spec = t;
      h.figures = &t->on(core_);
      h.hash = text::fnv1a64(t->id);
      if (const auto it = assignment.coverage.find(t->id); it != assignment.coverage.end()) h.explicit_ = &it->second;
      h.recovered = t->mode == Mode::detect_and_correct || t->recoveries.contains(assignment.recovery);
      high_.push_back(h);
    }
    for (const auto& [name, info] : profile.benchmarks()) benches_.emplace(name, Bench{&info, text::fnv1a64(name)});
    abft_correction_ = assignment.abft_mode() == AbftMode::correction;
  }

  const TechniqueSpec& check_per_ff(FfId ff, const std::string& id) const {
    const auto& t = library_.technique(id);
    if (!t.per_ff) throw std::invalid_argument("technique '" + id + "' cannot protect individual flip-flops");
    if (!t.applies_to(core_)) {
      throw std::invalid_argument("technique '" + id + "' does not apply to the " + std::string(to_string(core_)) +
                                  " core");
    }
    const bool bounded = assignment_.recovery == recovery::kFlush || assignment_.recovery == recovery::kRob;
    if (t.detects() && bounded && !recovery_reach(*rec_, core_, design_.at(ff))) {
      throw std::invalid_argument("flip-flop " + std::to_string(ff) + " lies beyond the " + assignment_.recovery +
                                  " recovery boundary but only has detection (" + id + ")");
    }
    return t;
  }

  ExpectedCounts predict(FfId ff, const std::string& bench, const OutcomeCounts& counts,
                         const TechniqueSpec* own) const {
    const auto it = benches_.find(bench);
    if (it == benches_.end()) throw std::out_of_range("unknown benchmark '" + bench + "'");
    const auto& info = *it->second.info;
    const bool reach = recovery_reach(*rec_, core_, design_.at(ff));
    ExpectedCounts c = to_expected(counts);
    for (const auto& h : high_) {
      const auto& t = *h.spec;
      if (t.benchmark_conditional && !info.abft) continue;
      const auto s = rates(h, ErrorKind::SDC, ff, bench, it->second, info.abft);
      const auto d = rates(h, ErrorKind::DUE, ff, bench, it->second, info.abft);
      const double detected = c.omm * s.detected + (c.ut + c.hang) * d.detected;
      c.omm *= s.residual;
      c.ut *= d.residual;
      c.hang *= d.residual;
      const bool recovered = t.mode == Mode::detect_and_correct || (h.recovered && reach);
      (recovered ? c.vanished : c.ed) += detected;
    }
    if (own == nullptr) return c;
    if (own->mode == Mode::harden) {
      const double s = residual_rates(*own, core_, ErrorKind::SDC, true, info.abft && abft_correction_).residual;
      const double before = c.non_vanished();
      c.omm *= s;
      c.ut *= s;
      c.hang *= s;
      c.ed *= s;
      c.vanished += before - c.non_vanished();
      return c;
    }
    const auto s = residual_rates(*own, core_, ErrorKind::SDC, true);
    const auto d = residual_rates(*own, core_, ErrorKind::DUE, true);
    const double detected = c.omm * s.detected + (c.ut + c.hang) * d.detected;
    c.omm *= s.residual;
    c.ut *= d.residual;
    c.hang *= d.residual;
    const bool recovered = own->mode == Mode::detect_and_correct ||
                           (own->recoveries.contains(assignment_.recovery) && reach);
    (recovered ? c.vanished : c.ed) += detected;
    return c;
  }

 private:
  const Design& design_;
  const VulnerabilityProfile& profile_;
  const ProtectionAssignment& assignment_;
  const TechniqueLibrary& library_;
  CoreKind core_;
  struct High {
    const TechniqueSpec* spec = nullptr;
    const CoreFigures* figures = nullptr;
    std::uint64_t hash = 0;
    const CoverageMap* explicit_ = nullptr;
    bool recovered = false;  // before the reach check
  };
  struct Bench {
    const BenchmarkInfo* info = nullptr;
    std::uint64_t hash = 0;
  };

  // Same as residual_rates with is_covered, using the cached lookups.
  ResidualRates rates(const High& h, ErrorKind kind, FfId ff, const std::string& bench, const Bench& b,
                      bool abft_benchmark) const {
    const auto& t = *h.spec;
    if (t.mode == Mode::harden) {
      const bool economy = abft_benchmark && t.economy_cell.has_value();
      return {economy ? t.economy_ser_scale : t.ser_scale, 0.0};
    }
    const auto& cov = kind == ErrorKind::SDC ? h.figures->sdc : h.figures->due;
    bool covered = false;
    if (h.explicit_) {
      covered = h.explicit_->covers(kind, ff, bench);
    } else {
      const std::uint64_t bh = t.benchmark_conditional ? b.hash : kEmptyHash;
      covered = hashed_draw(assignment_.coverage_seed, h.hash, ff, bh, kind) < cov.covered;
    }
    if (!covered) return {1.0, 0.0};
    return {1.0 - cov.firing, cov.firing};
  }

  static inline const std::uint64_t kEmptyHash = text::fnv1a64("");

  const RecoverySpec* rec_ = nullptr;
  std::vector<High> high_;
  std::unordered_map<std::string, Bench> benches_;
  bool abft_correction_ = false;
};

void check_profile_in_design(const Design& design, const VulnerabilityProfile& profile) {
  std::optional<FfId> last;
  for (const auto& [key, counts] : profile.records()) {
    if (key.first == last) continue;
    last = key.first;
    if (!design.contains(key.first)) {
      throw std::invalid_argument("profile flip-flop " + std::to_string(key.first) + " is not in the design");
    }
  }
}

double relevant(const ExpectedCounts& c, ErrorKind kind) {
  return kind == ErrorKind::SDC ? c.omm : c.ut + c.hang + c.ed;
}

ExpectedCounts minus(ExpectedCounts a, const ExpectedCounts& b) {
  a.vanished -= b.vanished;
  a.omm -= b.omm;
  a.ut -= b.ut;
  a.hang -= b.hang;
  a.ed -= b.ed;
  return a;
}

}  // namespace

namespace {

// Calls fn(key, predicted counts) for every profile record in key order.
template <typename Fn>
void for_each_prediction(const Design& design, const VulnerabilityProfile& profile,
                         const ProtectionAssignment& assignment, const TechniqueLibrary& library, Fn&& fn) {
  check_profile_in_design(design, profile);
  const Predictor predictor(design, profile, assignment, library);
  std::unordered_map<FfId, const TechniqueSpec*> own;
  for (const auto& [ff, id] : assignment.per_ff) {
    if (!design.contains(ff)) throw std::invalid_argument("assigned flip-flop " + std::to_string(ff) + " is not in the design");
    own.emplace(ff, &predictor.check_per_ff(ff, id));
  }
  for (const auto& [key, counts] : profile.records()) {
    const auto it = own.find(key.first);
    fn(key, predictor.predict(key.first, key.second, counts, it == own.end() ? nullptr : it->second));
  }
}

ExpectedCounts predicted_totals(const Design& design, const VulnerabilityProfile& profile,
                                const ProtectionAssignment& assignment, const TechniqueLibrary& library) {
  ExpectedCounts t;
  for_each_prediction(design, profile, assignment, library, [&](const auto&, const ExpectedCounts& c) { t += c; });
  return t;
}

}  // namespace

ExpectedProfile predict_profile(const Design& design, const VulnerabilityProfile& profile,
                                const ProtectionAssignment& assignment, const TechniqueLibrary& library) {
  ExpectedProfile out;
  for_each_prediction(design, profile, assignment, library,
                      [&](const auto& key, const ExpectedCounts& c) { out.emplace_hint(out.end(), key, c); });
  return out;
}

ExpectedCounts totals(const VulnerabilityProfile& profile) {
  ExpectedCounts t;
  for (const auto& [key, c] : profile.records()) t += to_expected(c);
  return t;
}

ExpectedCounts totals(const ExpectedProfile& predicted) {
  ExpectedCounts t;
  for (const auto& [key, c] : predicted) t += c;
  return t;
}

double improvement(const ExpectedCounts& before, const ExpectedCounts& after, double g, ErrorKind kind) {
  if (!(g >= 1.0)) throw std::invalid_argument("gamma must be at least 1");
  const double b = kind == ErrorKind::SDC ? before.omm : before.ut + before.hang;
  const double a = kind == ErrorKind::SDC ? after.omm : after.ut + after.hang + after.ed;
  if (!(b > 0.0)) {
    throw std::domain_error(std::string("undefined improvement: no ") + std::string(to_string(kind)) +
                            "-causing errors before protection");
  }
  if (a <= 0.0) return std::numeric_limits<double>::infinity();
  return b / a / g;
}

CostReport evaluate_assignment(const Design& design, const VulnerabilityProfile& profile,
                               const ProtectionAssignment& assignment, const TechniqueLibrary& library) {
  const CoreKind core = design.core_kind();
  const auto& model = library.cost_model(core);
  const double n = static_cast<double>(design.size());

  double area_units = 0.0;
  double power_units = 0.0;
  double area = 0.0;
  double power = 0.0;
  std::vector<FfId> parity_ffs;
  std::set<std::string> used;
  for (const auto& [ff, id] : assignment.per_ff) {
    const auto& t = library.technique(id);
    used.insert(id);
    if (id == tech::kParity) {
      parity_ffs.push_back(ff);
      continue;
    }
    const auto& fig = t.on(core);
    area_units += (t.cell ? t.cell->area - 1.0 : 0.0) + fig.per_ff_area;
    power_units += per_ff_cost_units(id, design.at(ff), design, library, assignment.leap_ctrl_duty);
  }
  for (const auto& id : used) {
    const auto& fig = library.technique(id).on(core);
    area += fig.area;
    power += fig.power;
  }
  for (const auto& id : assignment.high_level) {
    const auto& fig = library.technique(id).on(core);
    area += fig.area;
    power += fig.power;
  }
  area += area_units * model.ff_area_share / n;
  power += power_units * model.ff_power_share / n;
  if (!parity_ffs.empty()) {
    const auto pc = optimized_plan(design, parity_ffs, library).cost;
    area += pc.area;
    power += pc.power;
  }
  if (assignment.uses_recovery(library)) {
    const auto& rf = library.recovery(assignment.recovery).on(core);
    area += rf.area;
    power += rf.power;
  }

  CostReport r;
  const auto inc = design_increase(assignment, core, library);
  r.area = area;
  r.power = power;
  r.exec = inc.exec;
  r.energy = compose_energy(power, inc.exec);
  r.gamma = gamma(inc.ff_increase, inc.exec);
  const auto before = totals(profile);
  const auto after = predicted_totals(design, profile, assignment, library);
  auto safe = [&](ErrorKind k) {
    try {
      return improvement(before, after, r.gamma, k);
    } catch (const std::domain_error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  r.sdc_improvement = safe(ErrorKind::SDC);
  r.due_improvement = safe(ErrorKind::DUE);
  return r;
}

namespace {

bool abft_covered_anywhere(const ProtectionAssignment& a, const TechniqueSpec& t, CoreKind core, FfId ff,
                           const VulnerabilityProfile& profile) {
  for (const auto& [bench, info] : profile.benchmarks()) {
    if (!info.abft) continue;
    for (auto kind : {ErrorKind::SDC, ErrorKind::DUE}) {
      if (is_covered(a, t, core, kind, ff, bench, info)) return true;
    }
  }
  return false;
}

std::string describe_target(double t) { return t == kMaxTarget ? "max" : text::format_double(t); }

}  // namespace

namespace {

SelectionResult greedy_select(const Design& design, const VulnerabilityProfile& profile,
                              const TechniqueLibrary& library, const Targets& targets,
                              const ProtectionAssignment& base, const SelectOptions& options) {
  for (const auto* t : {&targets.sdc, &targets.due}) {
    if (t->has_value() && !(**t >= 1.0)) throw std::invalid_argument("improvement targets must be at least 1");
  }
  check_profile_in_design(design, profile);
  for (const auto& id : options.per_ff) {
    const auto& t = library.technique(id);
    if (!t.per_ff) throw std::invalid_argument("technique '" + id + "' cannot protect individual flip-flops");
  }
  const CoreKind core = design.core_kind();
  const Predictor predictor(design, profile, base, library);
  const auto before = totals(profile);
  if (targets.sdc && !(before.omm > 0.0)) {
    throw std::domain_error("undefined improvement: the profile has no SDC-causing errors");
  }
  if (targets.due && !(before.ut + before.hang > 0.0)) {
    throw std::domain_error("undefined improvement: the profile has no DUE-causing errors");
  }

  SelectionResult result;
  result.assignment = base;
  auto& assignment = result.assignment;
  const bool due_blocked = targets.due.has_value() && base.abft_mode() == AbftMode::detection;

  // Technique per flip-flop and its per-FF effect, computed once.
  const bool harden_unrecoverable = targets.due.has_value();
  const TechniqueSpec* leap_ctrl =
      base.leap_ctrl_for_abft && library.has_technique(tech::kLeapCtrl) ? &library.technique(tech::kLeapCtrl) : nullptr;
  const TechniqueSpec* abft =
      base.abft_mode() == AbftMode::correction ? &library.technique(tech::kAbftCorrection) : nullptr;

  std::unordered_map<FfId, std::vector<std::pair<std::string, const OutcomeCounts*>>> by_ff;
  for (const auto& [key, counts] : profile.records()) by_ff[key.first].emplace_back(key.second, &counts);

  struct Entry {
    FfId id;
    std::string technique;
    double cost;
    ExpectedCounts base;
    ExpectedCounts protected_;
  };
  std::vector<Entry> entries;
  entries.reserve(design.size());
  ExpectedCounts current;
  for (const auto& ff : design.flip_flops()) {
    Entry e;
    e.id = ff.id;
    if (const auto* fixed = base.technique_of(ff.id)) {
      e.technique = *fixed;
    } else {
      e.technique = choose_technique(ff, design, base.recovery, library, options.per_ff, harden_unrecoverable);
      if (leap_ctrl && abft && e.technique == tech::kLeapDice &&
          abft_covered_anywhere(base, *abft, core, ff.id, profile)) {
        e.technique = std::string(tech::kLeapCtrl);
      }
    }
    const auto& spec = predictor.check_per_ff(ff.id, e.technique);
    e.cost = per_ff_cost_units(e.technique, ff, design, library, base.leap_ctrl_duty);
    if (const auto it = by_ff.find(ff.id); it != by_ff.end()) {
      for (const auto& [bench, counts] : it->second) {
        e.base += predictor.predict(ff.id, bench, *counts, nullptr);
        e.protected_ += predictor.predict(ff.id, bench, *counts, &spec);
      }
    }
    const auto* fixed = base.technique_of(ff.id);
    current += fixed ? e.protected_ : e.base;
    entries.push_back(std::move(e));
  }

  // γ only changes when the recovery first comes into use.
  double current_gamma = assignment_gamma(assignment, core, library);
  bool recovery_used = assignment.uses_recovery(library);
  auto met = [&](ErrorKind kind, double target, const ExpectedCounts& after) {
    if (target == kMaxTarget) return false;
    return improvement(before, after, current_gamma, kind) >= target;
  };
  auto ranked = [&](ErrorKind kind) {
    std::vector<const Entry*> order;
    for (const auto& e : entries) {
      if (!assignment.per_ff.contains(e.id)) order.push_back(&e);
    }
    auto key = [&](const Entry* e) {
      return (relevant(e->base, kind) - relevant(e->protected_, kind)) / std::max(e->cost, 1e-12);
    };
    std::stable_sort(order.begin(), order.end(), [&](const Entry* a, const Entry* b) {
      const double ka = key(a);
      const double kb = key(b);
      return ka != kb ? ka > kb : a->id < b->id;
    });
    return order;
  };
  auto protect = [&](const Entry& e) {
    assignment.per_ff[e.id] = e.technique;
    current += minus(e.protected_, e.base);
    if (!recovery_used && assignment.uses_recovery(library)) {
      recovery_used = true;
      current_gamma = assignment_gamma(assignment, core, library);
    }
  };
  auto run_phase = [&](ErrorKind kind, double target) {
    for (const auto* e : ranked(kind)) {
      if (met(kind, target, current)) return;
      protect(*e);
    }
  };

  std::vector<std::pair<ErrorKind, double>> phases;
  if (targets.sdc) phases.emplace_back(ErrorKind::SDC, *targets.sdc);
  if (targets.due && !due_blocked) phases.emplace_back(ErrorKind::DUE, *targets.due);
  for (const auto& [kind, target] : phases) run_phase(kind, target);

  // Confirm against the full prediction; the running sums can drift by
  // rounding, so keep adding until the recomputed improvements hold.
  auto official_met = [&](ErrorKind kind, double target, const CostReport& r) {
    if (target == kMaxTarget) return true;
    return (kind == ErrorKind::SDC ? r.sdc_improvement : r.due_improvement) >= target;
  };
  result.report = evaluate_assignment(design, profile, assignment, library);
  for (const auto& [kind, target] : phases) {
    while (!official_met(kind, target, result.report)) {
      const auto order = ranked(kind);
      if (order.empty()) break;
      protect(*order.front());
      result.report = evaluate_assignment(design, profile, assignment, library);
    }
  }

  // Best reachable: every flip-flop protected.
  ProtectionAssignment full = base;
  for (const auto& e : entries) full.per_ff[e.id] = e.technique;
  const auto best = evaluate_assignment(design, profile, full, library);
  result.max_sdc = best.sdc_improvement;
  result.max_due = best.due_improvement;

  std::ostringstream msg;
  for (const auto& [kind, target] : phases) {
    if (official_met(kind, target, result.report)) continue;
    result.feasible = false;
    const double mx = kind == ErrorKind::SDC ? result.max_sdc : result.max_due;
    msg << (msg.tellp() > 0 ? "; " : "") << to_string(kind) << " target " << describe_target(target)
        << "x is infeasible, max achievable " << format_improvement(mx) << "x";
  }
  if (due_blocked) {
    result.feasible = false;
    msg << (msg.tellp() > 0 ? "; " : "") << "DUE target " << describe_target(*targets.due)
        << "x is infeasible: ABFT detection cannot improve DUE";
  }
  result.message = msg.str();
  return result;
}

}  // namespace

SelectionResult select_to_target(const Design& design, const VulnerabilityProfile& profile,
                                 const TechniqueLibrary& library, const Targets& targets,
                                 const ProtectionAssignment& base, const SelectOptions& options) {
  auto result = greedy_select(design, profile, library, targets, base, options);
  // The greedy ranking only sees per-FF costs. Design-level overheads such as
  // recovery hardware can make plain hardening cheaper, so try it as well
  // when hardening is allowed (not for "max", which favours improvement).
  const std::string harden(tech::kLeapDice);
  const bool max_target = targets.sdc == kMaxTarget || targets.due == kMaxTarget;
  if (max_target || !options.per_ff.contains(harden) || options.per_ff.size() == 1) return result;
  SelectOptions plain;
  plain.per_ff = {harden};
  auto alt = greedy_select(design, profile, library, targets, base, plain);
  const bool better = alt.feasible == result.feasible ? (alt.feasible && alt.report.energy < result.report.energy)
                                                      : alt.feasible;
  if (!better) return result;
  alt.max_sdc = std::max(alt.max_sdc, result.max_sdc);
  alt.max_due = std::max(alt.max_due, result.max_due);
  return alt;
}

SelectionResult select_to_target(const Design& design, const VulnerabilityProfile& profile,
                                 const TechniqueLibrary& library, const Targets& targets, std::string_view recovery,
                                 const SelectOptions& options) {
  ProtectionAssignment base;
  base.recovery = std::string(recovery);
  return select_to_target(design, profile, library, targets, base, options);
}

CoverageMap draw_abft_coverage(const Design& design, const VulnerabilityProfile& profile,
                               const TechniqueLibrary& library, AbftMode mode, std::uint64_t seed) {
  CoverageMap map;
  if (mode == AbftMode::none) return map;
  const auto& t = library.technique(mode == AbftMode::correction ? tech::kAbftCorrection : tech::kAbftDetection);
  const auto& fig = t.on(design.core_kind());
  for (const auto& [bench, info] : profile.benchmarks()) {
    if (!info.abft) continue;
    for (const auto& ff : design.flip_flops()) {
      if (coverage_draw(seed, t.id, ff.id, bench, ErrorKind::SDC) < fig.sdc.covered) map.sdc.insert({ff.id, bench});
      if (coverage_draw(seed, t.id, ff.id, bench, ErrorKind::DUE) < fig.due.covered) map.due.insert({ff.id, bench});
    }
  }
  return map;
}

ProtectionAssignment layer_abft(const ProtectionAssignment& assignment, const CoverageMap& coverage, AbftMode mode,
                                const VulnerabilityProfile& profile, const TechniqueLibrary& library,
                                bool use_leap_ctrl) {
  if (mode == AbftMode::none || coverage.empty()) return assignment;
  const auto present = assignment.abft_mode();
  if (present != AbftMode::none && present != mode) {
    throw std::invalid_argument("ABFT correction and detection are mutually exclusive");
  }
  const std::string id(mode == AbftMode::correction ? tech::kAbftCorrection : tech::kAbftDetection);
  library.technique(id);
  ProtectionAssignment out = assignment;
  if (!out.has_high_level(id)) out.high_level.insert(out.high_level.begin(), id);
  out.coverage[id] = coverage;
  if (mode == AbftMode::correction && use_leap_ctrl) {
    const auto& benches = profile.benchmarks();
    const auto plain = std::count_if(benches.begin(), benches.end(), [](const auto& b) { return !b.second.abft; });
    out.leap_ctrl_for_abft = true;
    out.leap_ctrl_duty = benches.empty() ? 1.0 : static_cast<double>(plain) / static_cast<double>(benches.size());
  }
  return out;
}

AbftCoverageStats abft_coverage_stats(const CoverageMap& coverage, const Design& design,
                                      const std::vector<std::string>& benchmarks) {
  AbftCoverageStats s;
  if (design.size() == 0 || benchmarks.empty()) return s;
  const double n = static_cast<double>(design.size());
  for (auto kind : {ErrorKind::SDC, ErrorKind::DUE}) {
    std::size_t any = 0;
    std::size_t all = 0;
    for (const auto& ff : design.flip_flops()) {
      std::size_t hits = 0;
      for (const auto& b : benchmarks) hits += coverage.covers(kind, ff.id, b) ? 1 : 0;
      any += hits > 0 ? 1 : 0;
      all += hits == benchmarks.size() ? 1 : 0;
    }
    (kind == ErrorKind::SDC ? s.sdc_union : s.due_union) = static_cast<double>(any) / n;
    (kind == ErrorKind::SDC ? s.sdc_intersection : s.due_intersection) = static_cast<double>(all) / n;
  }
  return s;
}

ProtectionAssignment lhl_fallback(const ProtectionAssignment& assignment, const Design& design,
                                  const TechniqueLibrary& library) {
  library.technique(tech::kLhl);
  ProtectionAssignment out = assignment;
  for (const auto& ff : design.flip_flops()) out.per_ff.try_emplace(ff.id, tech::kLhl);
  return out;
}

std::string format_improvement(double x) {
  if (std::isinf(x) && x > 0) return "max";
  if (std::isnan(x)) return "nan";
  return text::format_double(x);
}

std::string cost_report_row(const CostReport& r) {
  std::ostringstream os;
  os << text::format_double(r.area * 100.0) << ',' << text::format_double(r.power * 100.0) << ','
     << text::format_double(r.energy * 100.0) << ',' << text::format_double(r.exec * 100.0) << ','
     << text::format_double(r.gamma) << ',' << format_improvement(r.sdc_improvement) << ','
     << format_improvement(r.due_improvement);
  return os.str();
}

void write_assignment(std::ostream& out, const ProtectionAssignment& a) {
  out << "#! recovery=" << a.recovery << " high_level=";
  if (a.high_level.empty()) out << "-";
  for (std::size_t i = 0; i < a.high_level.size(); ++i) out << (i ? "," : "") << a.high_level[i];
  out << " coverage_seed=" << a.coverage_seed << " leap_ctrl_duty=" << text::format_double(a.leap_ctrl_duty)
      << " leap_ctrl_for_abft=" << (a.leap_ctrl_for_abft ? 1 : 0) << "\n";
  for (const auto& [id, map] : a.coverage) {
    for (auto kind : {ErrorKind::SDC, ErrorKind::DUE}) {
      for (const auto& [ff, bench] : kind == ErrorKind::SDC ? map.sdc : map.due) {
        out << "#! cover=" << id << " kind=" << to_string(kind) << " ff=" << ff;
        if (!bench.empty()) out << " benchmark=" << bench;
        out << "\n";
      }
    }
  }
  out << "ff_id,technique\n";
  for (const auto& [ff, id] : a.per_ff) out << ff << ',' << id << "\n";
}

std::string serialize_assignment(const ProtectionAssignment& a) {
  std::ostringstream os;
  write_assignment(os, a);
  return os.str();
}

ProtectionAssignment parse_assignment(std::istream& in, std::string_view source_name) {
  auto fail = [&](std::size_t line_no, const std::string& what) {
    return ParseError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + what);
  };
  ProtectionAssignment a;
  bool header = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    if (line.starts_with("#!")) {
      const auto kv = text::parse_directives(line.substr(2));
      if (!kv.empty() && kv.front().first == "cover") {
        std::string tech_id = kv.front().second;
        std::optional<ErrorKind> kind;
        std::optional<FfId> ff;
        std::string bench;
        for (std::size_t i = 1; i < kv.size(); ++i) {
          const auto& [k, v] = kv[i];
          std::int64_t id = 0;
          if (k == "kind" && (v == "SDC" || v == "DUE")) {
            kind = v == "SDC" ? ErrorKind::SDC : ErrorKind::DUE;
          } else if (k == "ff" && text::parse_int(v, id)) {
            ff = id;
          } else if (k == "benchmark") {
            bench = v;
          } else {
            throw fail(line_no, "bad coverage entry '" + k + "=" + v + "'");
          }
        }
        if (!kind || !ff) throw fail(line_no, "coverage entry needs kind and ff");
        auto& map = a.coverage[tech_id];
        (*kind == ErrorKind::SDC ? map.sdc : map.due).insert({*ff, bench});
        continue;
      }
      for (const auto& [k, v] : kv) {
        bool ok = true;
        if (k == "recovery") {
          a.recovery = v;
        } else if (k == "high_level") {
          a.high_level.clear();
          if (v != "-") {
            for (auto part : text::split(v, ',')) a.high_level.emplace_back(text::trim(part));
          }
        } else if (k == "coverage_seed") {
          ok = text::parse_uint(v, a.coverage_seed);
        } else if (k == "leap_ctrl_duty") {
          ok = text::parse_double(v, a.leap_ctrl_duty) && a.leap_ctrl_duty >= 0.0 && a.leap_ctrl_duty <= 1.0;
        } else if (k == "leap_ctrl_for_abft") {
          ok = v == "0" || v == "1";
          a.leap_ctrl_for_abft = v == "1";
        } else {
          throw fail(line_no, "unknown directive '" + k + "'");
        }
        if (!ok) throw fail(line_no, "bad value for '" + k + "'");
      }
      continue;
    }
    if (line.starts_with('#')) continue;
    if (!header) {
      if (line != "ff_id,technique") throw fail(line_no, "expected header 'ff_id,technique'");
      header = true;
      continue;
    }
    const auto fields = text::split(line, ',');
    std::int64_t ff = 0;
    if (fields.size() != 2 || !text::parse_int(text::trim(fields[0]), ff)) throw fail(line_no, "expected 'ff_id,technique'");
    const auto id = std::string(text::trim(fields[1]));
    if (id.empty()) throw fail(line_no, "empty technique");
    if (!a.per_ff.emplace(ff, id).second) throw fail(line_no, "duplicate flip-flop id " + std::to_string(ff));
  }
  if (!header) throw fail(line_no, "missing header line");
  return a;
}

}  // namespace resilex
