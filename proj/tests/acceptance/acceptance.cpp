// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "resilex/dependence.hpp"
#include "resilex/explorer.hpp"
#include "resilex/parity.hpp"
#include "resilex/selector.hpp"
#include "resilex/toycore/injector.hpp"
#include "resilex/toycore/programs.hpp"

namespace {

using namespace resilex;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
  void expect(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(10);
  s << x;
  return s.str();
}

void time_limit(Verdict& v, Clock::time_point start, double limit) {
  const double t = seconds_since(start);
  v.expect(t < limit, "took " + fmt(t) + " s, limit " + fmt(limit) + " s");
  if (v.pass) v.detail += (v.detail.empty() ? "" : "; ") + std::string("time ") + fmt(t) + " s";
}

Verdict combination_counts() {
  Verdict v;
  const auto start = Clock::now();
  EnumerationCounts ino;
  EnumerationCounts ooo;
  const auto a = enumerate_combinations(CoreKind::InO, &ino);
  const auto b = enumerate_combinations(CoreKind::OoO, &ooo);
  v.expect(a.size() == 417, "InO rows " + std::to_string(a.size()));
  v.expect(b.size() == 169, "OoO rows " + std::to_string(b.size()));
  v.expect(a.size() + b.size() == 586, "total rows");
  const std::vector<std::size_t> want_ino{127, 3, 14, 2, 144, 127};
  const std::vector<std::size_t> want_ooo{31, 7, 30, 2, 68, 31};
  auto parts = [](const EnumerationCounts& c) {
    return std::vector<std::size_t>{c.no_recovery,    c.bounded_recovery, c.replay_recovery,
                                    c.abft_alone,     c.abft_correction,  c.abft_detection};
  };
  v.expect(parts(ino) == want_ino, "InO sub-counts differ");
  v.expect(parts(ooo) == want_ooo, "OoO sub-counts differ");
  time_limit(v, start, 1.0);
  return v;
}

double round_up_2(double x) { return std::ceil(x * 100.0 - 1e-9) / 100.0; }

Verdict gamma_values() {
  Verdict v;
  struct Case {
    double ff;
    double exec;
    double exact;
    double printed;
  };
  for (const auto& c : {Case{0.38, 0.0, 1.38, 1.38}, Case{0.0, 0.406, 1.406, 1.41}, Case{0.20, 0.062, 1.2744, 1.28}}) {
    const double g = gamma(c.ff, c.exec);
    v.expect(std::abs(g - c.exact) <= 1e-9, "gamma " + fmt(g) + " vs " + fmt(c.exact));
    v.expect(std::abs(round_up_2(g) - c.printed) < 1e-12, "2-decimal value of " + fmt(g) + " vs " + fmt(c.printed));
  }
  // The bundled library reproduces the same products.
  const auto& lib = default_library();
  ProtectionAssignment dfc;
  dfc.high_level = {"dfc"};
  v.expect(std::abs(assignment_gamma(dfc, CoreKind::InO, lib) - 1.2744) <= 1e-9, "library DFC gamma");
  ProtectionAssignment cfcss;
  cfcss.high_level = {"cfcss"};
  v.expect(std::abs(assignment_gamma(cfcss, CoreKind::InO, lib) - 1.406) <= 1e-9, "library CFCSS gamma");
  ProtectionAssignment monitor;
  monitor.high_level = {"monitor"};
  v.expect(std::abs(assignment_gamma(monitor, CoreKind::OoO, lib) - 1.38) <= 1e-9, "library monitor gamma");
  if (v.pass) v.detail = "1.38/1.406/1.2744 exact; two decimals rounded up give 1.38/1.41/1.28 (1.2744 rounds half-up to 1.27)";
  return v;
}

Verdict improvement_oracle() {
  Verdict v;
  rng::Engine g = rng::make_engine(1001);
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    ExpectedCounts b;
    ExpectedCounts a;
    b.omm = static_cast<double>(1 + rng::below(g, 10'000));
    b.ut = static_cast<double>(1 + rng::below(g, 10'000));
    b.hang = static_cast<double>(rng::below(g, 10'000));
    a.omm = static_cast<double>(1 + rng::below(g, 10'000));
    a.ut = static_cast<double>(rng::below(g, 10'000));
    a.hang = static_cast<double>(rng::below(g, 10'000));
    a.ed = static_cast<double>(1 + rng::below(g, 10'000));
    const double gam = rng::uniform(g, 1.0, 3.0);
    for (auto kind : {ErrorKind::SDC, ErrorKind::DUE}) {
      const bool sdc = kind == ErrorKind::SDC;
      const double want = testing::direct_improvement(b.omm, b.ut, b.hang, a.omm, a.ut, a.hang, a.ed, gam, sdc);
      const double got = improvement(b, a, gam, kind);
      v.expect(got == want, "vector " + std::to_string(i) + ": " + fmt(got) + " vs " + fmt(want));
      const double unit = improvement(b, a, 1.0, kind);
      v.expect(std::abs(got - unit / gam) <= 1e-12 * unit, "gamma scaling at vector " + std::to_string(i));
      ++checked;
    }
  }
  if (v.pass) v.detail = std::to_string(checked) + " checks";
  return v;
}

Verdict cost_composition() {
  Verdict v;
  const double e = compose_energy(0.01, 0.062);
  v.expect(std::abs(e - 0.07262) <= 1e-12, "compose_energy gives " + fmt(e));
  v.expect(std::round(e * 1000.0) / 10.0 == 7.3, "percent rounds to " + fmt(std::round(e * 1000.0) / 10.0));

  const auto& lib = default_library();
  rng::Engine g = rng::make_engine(1003);
  const Design ooo = testing::random_design(g, {.flip_flops = 120, .core = CoreKind::OoO});
  const VulnerabilityProfile ooo_profile = testing::random_profile(g, ooo, {});
  int rows = 0;
  for (const auto& [id, t] : lib.techniques()) {
    for (const auto& [core, figures] : t.cores) {
      if (figures.exec != 0.0) continue;
      const Design& d = core == CoreKind::InO ? testing::toy_design() : ooo;
      const VulnerabilityProfile& p = core == CoreKind::InO ? testing::toy_profile() : ooo_profile;
      ProtectionAssignment a;
      if (t.per_ff) {
        for (const auto& ff : d.flip_flops()) a.per_ff[ff.id] = id;
      } else if (!t.benchmark_conditional) {
        a.high_level = {id};
      } else {
        continue;
      }
      const auto r = evaluate_assignment(d, p, a, lib);
      v.expect(r.exec == 0.0 && r.energy == r.power, id + " P " + fmt(r.power) + " E " + fmt(r.energy));
      ++rows;
    }
  }
  v.expect(rows > 0, "no zero-exec rows");
  if (v.pass) v.detail = "0.07262 -> 7.3%; " + std::to_string(rows) + " zero-exec rows with P = E";
  return v;
}

std::vector<FfId> ids_of(const Design& d) {
  std::vector<FfId> ids;
  for (const auto& f : d.flip_flops()) ids.push_back(f.id);
  return ids;
}

Verdict parity_spacing() {
  Verdict v;
  const auto start = Clock::now();
  rng::Engine g = rng::make_engine(1005);
  std::size_t designs = 0;
  for (int i = 0; i < 24; ++i) {
    const std::size_t n = 50 + rng::below(g, 451);
    const auto d = testing::random_design(g, {.flip_flops = n, .area_per_ff = rng::uniform(g, 1.2, 4.0)});
    const auto ids = ids_of(d);
    const auto plan = optimized_plan(d, ids);
    std::vector<std::vector<FfId>> groups;
    for (const auto& grp : plan.groups) groups.push_back(grp.members);
    const auto report = check_spacing(plan, d);
    v.expect(report.violations.empty(), std::to_string(report.violations.size()) + " violations, design " +
                                            std::to_string(i));
    const auto brute = testing::brute_violations(groups, d, kMinGroupSpacing);
    v.expect(brute == 0, std::to_string(brute) + " brute-force violations, design " + std::to_string(i));
    v.expect(plan.protected_count() == n, "plan misses flip-flops");
    ++designs;
  }
  v.detail = std::to_string(designs) + " placements";
  time_limit(v, start, 10.0);
  return v;
}

Verdict parity_ordering() {
  Verdict v;
  const auto& d = testing::toy_design();
  const auto ids = ids_of(d);
  const auto best = optimized_plan(d, ids);
  for (auto h : {ParityHeuristic::size, ParityHeuristic::vulnerability, ParityHeuristic::locality,
                 ParityHeuristic::timing}) {
    double cheapest_power = 1e300;
    double cheapest_area = 1e300;
    for (std::size_t size : {4u, 8u, 16u, 32u}) {
      const auto plan = plan_parity(d, ids, &testing::toy_profile(), h, size);
      const auto cost = parity_cost(plan, d);
      cheapest_power = std::min(cheapest_power, cost.power);
      cheapest_area = std::min(cheapest_area, cost.area);
    }
    const auto mine = parity_cost(best, d);
    v.expect(mine.power <= cheapest_power, std::string(to_string(h)) + " power " + fmt(cheapest_power) + " < " +
                                               fmt(mine.power));
    v.expect(mine.area <= cheapest_area, std::string(to_string(h)) + " area " + fmt(cheapest_area) + " < " +
                                             fmt(mine.area));
  }
  if (v.pass) v.detail = "optimized power " + fmt(parity_cost(best, d).power);
  return v;
}

namespace tc = resilex::toycore;

std::uint64_t first_cycle_where(const tc::ToyProgram& p, const std::function<bool(const tc::MachineState&)>& pred) {
  tc::Core core(p, false);
  for (std::uint64_t i = 0; i < 10'000; ++i) {
    if (pred(core.state())) return i;
    if (core.step() != tc::StepStatus::Running) break;
  }
  throw std::runtime_error("predicate never held");
}

Verdict injector() {
  Verdict v;
  const auto start = Clock::now();
  const auto program = tc::bundled_program("matmul");
  const auto design = tc::make_toycore_design();
  tc::CampaignConfig c;
  c.benchmark = "matmul";
  c.injections = 10'000;
  c.seed = 2024;
  std::string reference;
  for (unsigned w : {1u, 2u, 8u}) {
    c.workers = w;
    const auto text = serialize_profile(tc::run_campaign(program, c, design));
    if (reference.empty()) reference = text;
    v.expect(text == reference, "workers " + std::to_string(w) + " differ");
  }

  const auto line = tc::ProgramBuilder("line").li(1, 7).out(1).halt().build();
  const auto line_golden = tc::run_golden(line);
  const auto bubble = first_cycle_where(line, [](const tc::MachineState& s) { return s.elements[tc::kIdexValid] == 0; });
  v.expect(tc::inject_one(line, line_golden, {{tc::kIdexA, 0}, bubble}) == OutcomeClass::Vanished, "dead state");

  const auto store = tc::ProgramBuilder("store").li(1, 5).store(1, 0, 100).load(2, 0, 100).out(2).halt().build();
  const auto store_golden = tc::run_golden(store);
  const auto at_store = first_cycle_where(store, [](const tc::MachineState& s) {
    return s.elements[tc::kExmemValid] != 0 && s.elements[tc::kExmemOp] == 2;
  });
  v.expect(tc::inject_one(store, store_golden, {{tc::kExmemStoreData, 3}, at_store}) == OutcomeClass::OMM,
           "pre-store flip");

  v.expect(tc::inject_one(line, line_golden, {{tc::kPc, tc::element_info(tc::kPc).width - 1}, 1}) ==
               OutcomeClass::UT,
           "pc trap");

  const auto loop = tc::ProgramBuilder("loop")
                        .li(1, 20)
                        .li(2, 1)
                        .label("loop")
                        .sub(1, 1, 2)
                        .beqz(1, "end")
                        .jump("loop")
                        .label("end")
                        .out(1)
                        .halt()
                        .build();
  const auto loop_golden = tc::run_golden(loop);
  v.expect(tc::inject_one(loop, loop_golden, {{tc::kReg1, 30}, loop_golden.cycles / 2}) == OutcomeClass::Hang,
           "runaway loop");
  v.detail = "10000 injections identical over 1/2/8 workers; four handcrafted outcomes";
  time_limit(v, start, 60.0);
  return v;
}

Verdict selector_sweep() {
  Verdict v;
  const auto start = Clock::now();
  const auto& d = testing::toy_design();
  const auto& p = testing::toy_profile();
  const auto& lib = default_library();
  for (auto kind : {ErrorKind::SDC, ErrorKind::DUE}) {
    double last = -1.0;
    for (double t : default_target_grid()) {
      Targets targets;
      (kind == ErrorKind::SDC ? targets.sdc : targets.due) = t;
      const auto res = select_to_target(d, p, lib, targets, recovery::kFlush);
      const std::string where = std::string(to_string(kind)) + " " + fmt(t);
      v.expect(res.feasible, where + " infeasible: " + res.message);
      if (!res.feasible) continue;
      v.expect(res.report.energy >= last, where + " energy fell");
      last = res.report.energy;
      const double gam = assignment_gamma(res.assignment, d.core_kind(), lib);
      const double got = improvement(totals(p), totals(predict_profile(d, p, res.assignment, lib)), gam, kind);
      const double reach = std::isinf(t) ? (kind == ErrorKind::SDC ? res.max_sdc : res.max_due) : t;
      v.expect(got >= reach, where + " predicted " + fmt(got));
    }
  }
  time_limit(v, start, 30.0);
  return v;
}

Verdict cross_layer_dominance() {
  Verdict v;
  const auto& d = testing::toy_design();
  const auto& lib = default_library();
  std::ostringstream summary;
  for (const auto& bench : testing::toy_profile().benchmark_names()) {
    const auto p = testing::toy_profile().restrict_to({bench});
    const Targets t{50.0, std::nullopt};
    const auto mixed = select_to_target(d, p, lib, t, recovery::kFlush, {{"leap_dice", "parity"}});
    const auto dice = select_to_target(d, p, lib, t, recovery::kNone, {{"leap_dice"}});
    v.expect(mixed.feasible && dice.feasible, bench + " infeasible");
    v.expect(mixed.report.energy <= dice.report.energy,
             bench + ": " + fmt(mixed.report.energy) + " > " + fmt(dice.report.energy));
    summary << bench << " " << fmt(dice.report.energy / std::max(mixed.report.energy, 1e-300)) << "x ";
  }
  if (v.pass) v.detail = "energy ratio " + summary.str();
  return v;
}

Verdict joint_targets() {
  Verdict v;
  const auto& d = testing::toy_design();
  const auto& p = testing::toy_profile();
  const auto& lib = default_library();
  for (auto r : {recovery::kNone, recovery::kFlush, recovery::kIr, recovery::kEir}) {
    const auto res = select_to_target(d, p, lib, {50.0, 50.0}, r);
    const std::string name(r);
    v.expect(res.feasible, name + " infeasible: " + res.message);
    if (!res.feasible) continue;
    const auto after = totals(predict_profile(d, p, res.assignment, lib));
    const double gam = assignment_gamma(res.assignment, d.core_kind(), lib);
    const double sdc = improvement(totals(p), after, gam, ErrorKind::SDC);
    const double due = improvement(totals(p), after, gam, ErrorKind::DUE);
    v.expect(sdc >= 50.0 && due >= 50.0, name + ": " + fmt(sdc) + " / " + fmt(due));
  }
  return v;
}

Verdict detection_without_recovery() {
  Verdict v;
  rng::Engine g = rng::make_engine(1011);
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    const auto d = testing::random_design(g, {.flip_flops = 40 + rng::below(g, 100)});
    const auto p = testing::random_profile(g, d, {.detection = rng::bernoulli(g, 0.5)});
    ProtectionAssignment a;
    double detected_omm = 0.0;
    for (const auto& ff : d.flip_flops()) {
      if (!rng::bernoulli(g, 0.4)) continue;
      a.per_ff[ff.id] = std::string(tech::kParity);
      for (const auto& [key, counts] : p.records()) {
        if (key.first == ff.id) detected_omm += static_cast<double>(counts.omm);
      }
    }
    if (detected_omm == 0.0 || totals(p).due() == 0.0) continue;
    const auto r = evaluate_assignment(d, p, a);
    v.expect(r.due_improvement < 1.0, "profile " + std::to_string(i) + " DUE " + fmt(r.due_improvement));
    ++checked;
  }
  v.expect(checked >= 30, "only " + std::to_string(checked) + " profiles checked");
  if (v.pass) v.detail = std::to_string(checked) + " profiles";
  return v;
}

Verdict similarity() {
  Verdict v;
  using Sets = std::vector<std::set<FfId>>;
  const Sets same{{1, 2, 3}, {1, 2, 3}};
  const Sets disjoint{{1, 2}, {3, 4}};
  const Sets overlap{{1, 2, 3}, {2, 3, 4}};
  v.expect(subset_similarity(same) == 1.0, "identical");
  v.expect(subset_similarity(disjoint) == 0.0, "disjoint");
  v.expect(subset_similarity(overlap) == 0.5, "overlap");
  rng::Engine g = rng::make_engine(1013);
  for (int i = 0; i < 200; ++i) {
    Sets sets(2 + rng::below(g, 5));
    for (auto& s : sets) {
      for (FfId id = 0; id < 30; ++id) {
        if (rng::bernoulli(g, 0.3)) s.insert(id);
      }
    }
    sets[0].insert(0);
    const double base = subset_similarity(sets);
    v.expect(base == testing::counted_similarity(sets), "oracle mismatch " + std::to_string(i));
    for (int k = 0; k < 5; ++k) {
      rng::shuffle(sets, g);
      v.expect(subset_similarity(sets) == base, "order changed similarity " + std::to_string(i));
    }
  }
  return v;
}

Verdict lhl_fallback_trials() {
  Verdict v;
  const auto start = Clock::now();
  const auto& d = testing::toy_design();
  const auto& p = testing::toy_profile();
  const auto splits = make_splits(p.benchmark_names(), 4, 50, 13);
  DependenceOptions o;
  o.base.recovery = std::string(recovery::kFlush);
  o.permutations = 1000;
  std::size_t checked = 0;
  for (auto kind : {ErrorKind::SDC, ErrorKind::DUE}) {
    const auto r = trained_vs_validated(d, p, default_library(), splits, 50.0, kind, o);
    for (const auto& t : r.trials) {
      if (!t.feasible) continue;
      v.expect(t.after_lhl >= t.validated, std::string(to_string(kind)) + " trial " + std::to_string(t.index) +
                                               ": " + fmt(t.after_lhl) + " < " + fmt(t.validated));
      ++checked;
    }
  }
  v.expect(checked > 0, "no feasible trial");
  v.detail = std::to_string(checked) + " feasible trials";
  time_limit(v, start, 60.0);
  return v;
}

Verdict sample_sizes() {
  Verdict v;
  const auto fine = tc::required_sample_size(0.001, 0.95, 0.5);
  const auto coarse = tc::required_sample_size(0.01, 0.95, 0.5);
  v.expect(fine == 960'365, "margin 0.001 gives " + std::to_string(fine));
  v.expect(coarse == 9'604, "margin 0.01 gives " + std::to_string(coarse));
  v.expect(fine == testing::direct_sample_size(0.001, 0.95, 0.5), "oracle disagrees at 0.001");
  v.expect(coarse == testing::direct_sample_size(0.01, 0.95, 0.5), "oracle disagrees at 0.01");
  return v;
}

Verdict pareto() {
  Verdict v;
  rng::Engine g = rng::make_engine(1017);
  for (int round = 0; round < 20; ++round) {
    std::vector<ParetoPoint> pts;
    std::vector<testing::Point2> raw;
    for (std::size_t i = 0; i < 100; ++i) {
      // Coarse values so ties and duplicates occur.
      const double e = static_cast<double>(rng::below(g, 40));
      const double x = static_cast<double>(rng::below(g, 40));
      pts.push_back({e, x, i});
      raw.push_back({e, x});
    }
    const auto front = pareto_frontier(pts);
    std::set<std::size_t> got;
    for (const auto& f : front) got.insert(f.index);
    const auto want_v = testing::brute_pareto(raw);
    const std::set<std::size_t> want(want_v.begin(), want_v.end());
    v.expect(got == want, "frontier differs in round " + std::to_string(round));
    for (std::size_t i = 1; i < front.size(); ++i) {
      v.expect(front[i].improvement >= front[i - 1].improvement && front[i].energy >= front[i - 1].energy,
               "frontier not monotone in round " + std::to_string(round));
    }
  }
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"combination counts", combination_counts},
      {"gamma values", gamma_values},
      {"improvement oracle", improvement_oracle},
      {"cost composition", cost_composition},
      {"parity spacing", parity_spacing},
      {"parity heuristic ordering", parity_ordering},
      {"injector determinism and classification", injector},
      {"selector monotonicity", selector_sweep},
      {"cross-layer dominance", cross_layer_dominance},
      {"joint targets", joint_targets},
      {"detection without recovery", detection_without_recovery},
      {"similarity", similarity},
      {"LHL fallback", lhl_fallback_trials},
      {"sample size", sample_sizes},
      {"pareto frontier", pareto},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    std::printf("%s %zu: %s%s%s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                v.detail.empty() ? "" : " | ", v.detail.c_str());
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
