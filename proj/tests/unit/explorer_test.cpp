#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "resilex/explorer.hpp"

namespace resilex {
namespace {

Combination combo(std::set<std::string> techniques, std::string recovery = "none",
                  AbftMode abft = AbftMode::none) {
  Combination c;
  c.techniques = std::move(techniques);
  c.recovery = std::move(recovery);
  c.abft = abft;
  return c;
}

const EvaluatedPoint& at(const std::vector<EvaluatedPoint>& pts, ErrorKind kind, double target) {
  for (const auto& p : pts) {
    if (p.kind == kind && p.target == target) return p;
  }
  throw std::out_of_range("missing point");
}

TEST(Enumerate, RowCounts) {
  EnumerationCounts ino;
  EnumerationCounts ooo;
  const auto a = enumerate_combinations(CoreKind::InO, &ino);
  const auto b = enumerate_combinations(CoreKind::OoO, &ooo);
  EXPECT_EQ(a.size(), 417u);
  EXPECT_EQ(b.size(), 169u);
  EXPECT_EQ(a.size() + b.size(), 586u);
  EXPECT_EQ(ino.no_recovery, 127u);
  EXPECT_EQ(ino.bounded_recovery, 3u);
  EXPECT_EQ(ino.replay_recovery, 14u);
  EXPECT_EQ(ino.abft_alone, 2u);
  EXPECT_EQ(ino.abft_correction, 144u);
  EXPECT_EQ(ino.abft_detection, 127u);
  EXPECT_EQ(ooo.no_recovery, 31u);
  EXPECT_EQ(ooo.bounded_recovery, 7u);
  EXPECT_EQ(ooo.replay_recovery, 30u);
  EXPECT_EQ(ooo.abft_alone, 2u);
  EXPECT_EQ(ooo.abft_correction, 68u);
  EXPECT_EQ(ooo.abft_detection, 31u);
}

TEST(Enumerate, NoDuplicatesAndValidPairings) {
  for (auto core : {CoreKind::InO, CoreKind::OoO}) {
    const auto all = enumerate_combinations(core);
    EXPECT_EQ(std::set<Combination>(all.begin(), all.end()).size(), all.size());
    for (const auto& c : all) {
      EXPECT_EQ(c.core, core);
      for (const auto& t : c.techniques) EXPECT_TRUE(default_library().technique(t).applies_to(core)) << t;
      if (c.recovery == recovery::kFlush || c.recovery == recovery::kRob) {
        EXPECT_FALSE(c.techniques.contains("dfc"));
        EXPECT_FALSE(c.techniques.contains("leap_dice"));
      }
    }
  }
}

TEST(Evaluate, UnitTargetCostsNothing) {
  ExploreOptions o;
  o.targets = {1.0};
  o.kinds = {ErrorKind::SDC};
  const auto pts =
      evaluate_combination(combo({"leap_dice"}), testing::toy_design(), testing::toy_profile(), default_library(), o);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_DOUBLE_EQ(pts[0].report.energy, 0.0);
  EXPECT_TRUE(pts[0].feasible);
}

TEST(Evaluate, ParityWithFlushHardensBeyondBoundary) {
  const auto& d = testing::toy_design();
  const auto& p = testing::toy_profile();
  const auto res = select_to_target(d, p, default_library(), {kMaxTarget, std::nullopt}, "flush",
                                    {{"leap_dice", "parity"}});
  std::size_t beyond = 0;
  for (const auto& [ff, t] : res.assignment.per_ff) {
    if (!d.beyond_recovery_boundary(d.at(ff).stage)) continue;
    ++beyond;
    EXPECT_EQ(t, tech::kLeapDice) << ff;
  }
  EXPECT_GT(beyond, 0u);
}

TEST(Evaluate, ParityAndFlushNoDearerThanHardeningAlone) {
  const auto& d = testing::toy_design();
  const auto& p = testing::toy_profile();
  ExploreOptions o;
  o.targets = {2.0, 5.0, 50.0};
  const auto dice = evaluate_combination(combo({"leap_dice"}), d, p, default_library(), o);
  const auto mixed = evaluate_combination(combo({"leap_dice", "parity"}, "flush"), d, p, default_library(), o);
  for (auto kind : {ErrorKind::SDC, ErrorKind::DUE}) {
    for (double t : o.targets) {
      const auto& a = at(mixed, kind, t);
      const auto& b = at(dice, kind, t);
      ASSERT_TRUE(a.feasible && b.feasible);
      EXPECT_LE(a.report.energy, b.report.energy + 1e-12) << to_string(kind) << " " << t;
    }
  }
}

TEST(Evaluate, InapplicableTechniqueThrows) {
  EXPECT_THROW(evaluate_combination(combo({"monitor"}), testing::toy_design(), testing::toy_profile()),
               std::invalid_argument);
}

TEST(Evaluate, AbftDetectionNeverOnDueFrontier) {
  const auto& d = testing::toy_design();
  const auto& p = testing::toy_profile();
  std::vector<Combination> combos{combo({}, "none", AbftMode::detection),
                                  combo({"parity"}, "none", AbftMode::detection), combo({"leap_dice"})};
  ExploreOptions o;
  o.workers = 1;
  const auto pts = explore(combos, d, p, default_library(), o);
  for (const auto& f : frontier_of(pts, ErrorKind::DUE)) {
    EXPECT_NE(pts[f.index].combination.abft, AbftMode::detection);
  }
  for (const auto& pt : pts) {
    if (pt.combination.abft == AbftMode::detection && pt.kind == ErrorKind::DUE) EXPECT_FALSE(pt.feasible);
  }
}

TEST(Explore, WorkerCountDoesNotChangeResults) {
  const auto& d = testing::toy_design();
  const auto& p = testing::toy_profile();
  const auto all = enumerate_combinations(CoreKind::InO);
  std::vector<Combination> some;
  for (std::size_t i = 0; i < all.size(); i += 23) some.push_back(all[i]);
  ExploreOptions one;
  one.workers = 1;
  ExploreOptions three;
  three.workers = 3;
  std::ostringstream a;
  std::ostringstream b;
  write_explore_csv(a, explore(some, d, p, default_library(), one));
  write_explore_csv(b, explore(some, d, p, default_library(), three));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Explore, InfeasiblePointsCarryTheMaximum) {
  const auto& d = testing::toy_design();
  const auto& p = testing::toy_profile();
  ExploreOptions o;
  o.targets = {1e12};
  const auto pts = evaluate_combination(combo({"leap_dice"}), d, p, default_library(), o);
  for (const auto& pt : pts) {
    EXPECT_FALSE(pt.feasible);
    EXPECT_GT(pt.max_achievable, 1.0);
    EXPECT_LT(pt.max_achievable, 1e12);
  }
}

// Synthetic out-of-order core: the toy core only exercises InO.
TEST(Explore, SyntheticOutOfOrderProfile) {
  rng::Engine g = rng::make_engine(79);
  const auto d = testing::random_design(g, {.flip_flops = 150, .core = CoreKind::OoO});
  const auto p = testing::random_profile(g, d, {.benchmarks = {"b0", "b1", "b2", "b3"}, .abft = {"b1"}});
  const auto all = enumerate_combinations(CoreKind::OoO);
  std::vector<Combination> some;
  for (std::size_t i = 0; i < all.size(); i += 11) some.push_back(all[i]);
  ExploreOptions o;
  o.targets = {2.0, 50.0};
  const auto pts = explore(some, d, p, default_library(), o);
  EXPECT_EQ(pts.size(), some.size() * 4);
  for (const auto& pt : pts) {
    if (!pt.feasible) continue;
    const double x = pt.kind == ErrorKind::SDC ? pt.report.sdc_improvement : pt.report.due_improvement;
    EXPECT_GE(x, pt.target) << pt.combination.name();
    EXPECT_GE(pt.report.gamma, 1.0);
  }
  const auto rob = select_to_target(d, p, default_library(), {kMaxTarget, std::nullopt}, "rob");
  for (const auto& [ff, t] : rob.assignment.per_ff) {
    if (d.beyond_recovery_boundary(d.at(ff).stage)) EXPECT_EQ(t, tech::kLeapDice);
  }
}

TEST(Pareto, SinglePointAndDomination) {
  const std::vector<ParetoPoint> one{{0.02, 50.0, 0}};
  EXPECT_EQ(pareto_frontier(one), one);
  const std::vector<ParetoPoint> two{{0.05, 10.0, 0}, {0.04, 20.0, 1}};
  const auto f = pareto_frontier(two);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].index, 1u);
  EXPECT_THROW(pareto_frontier(std::vector<ParetoPoint>{}), std::invalid_argument);
}

TEST(Pareto, MatchesBruteForceOnRandomClouds) {
  rng::Engine g = rng::make_engine(83);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ParetoPoint> pts;
    std::vector<testing::Point2> raw;
    for (std::size_t i = 0; i < 100; ++i) {
      // Coarse grid so ties and duplicates occur.
      const double e = static_cast<double>(rng::below(g, 30)) / 100.0;
      const double x = 1.0 + static_cast<double>(rng::below(g, 40));
      pts.push_back({e, x, i});
      raw.push_back({e, x});
    }
    const auto f = pareto_frontier(pts);
    std::set<std::size_t> got;
    for (const auto& p : f) got.insert(p.index);
    const auto want = testing::brute_pareto(raw);
    EXPECT_EQ(got, std::set<std::size_t>(want.begin(), want.end()));
    for (std::size_t i = 1; i < f.size(); ++i) {
      EXPECT_LE(f[i - 1].improvement, f[i].improvement);
      EXPECT_LE(f[i - 1].energy, f[i].energy);
    }
  }
}

TEST(BoundRegion, StepsAreMonotone) {
  const std::vector<ParetoPoint> one{{0.02, 50.0, 0}};
  const auto c1 = bound_region(pareto_frontier(one));
  ASSERT_EQ(c1.size(), 1u);
  EXPECT_EQ(c1[0], (Step{50.0, 0.02}));
  EXPECT_DOUBLE_EQ(bound_energy(c1, 10.0), 0.02);
  EXPECT_TRUE(std::isinf(bound_energy(c1, 60.0)));

  const std::vector<ParetoPoint> three{{0.01, 2.0, 0}, {0.03, 10.0, 1}, {0.08, 100.0, 2}};
  const auto c3 = bound_region(pareto_frontier(three));
  ASSERT_EQ(c3.size(), 3u);
  for (std::size_t i = 1; i < c3.size(); ++i) {
    EXPECT_LT(c3[i - 1].improvement, c3[i].improvement);
    EXPECT_LE(c3[i - 1].energy, c3[i].energy);
  }
}

TEST(BoundRegion, NoEvaluatedPointBelowTheCurve) {
  const auto& d = testing::toy_design();
  const auto& p = testing::toy_profile();
  const auto all = enumerate_combinations(CoreKind::InO);
  std::vector<Combination> some;
  for (std::size_t i = 0; i < all.size(); i += 9) some.push_back(all[i]);
  const auto pts = explore(some, d, p);
  for (auto kind : {ErrorKind::SDC, ErrorKind::DUE}) {
    const auto frontier = frontier_of(pts, kind);
    const auto curve = bound_region(frontier);
    for (const auto& pt : pts) {
      if (!pt.feasible || pt.kind != kind) continue;
      const double x = kind == ErrorKind::SDC ? pt.report.sdc_improvement : pt.report.due_improvement;
      if (std::isnan(x)) continue;
      EXPECT_GE(pt.report.energy, bound_energy(curve, x) - 1e-12) << pt.combination.name();
    }
    for (const auto& f : frontier) EXPECT_LT(f.index, pts.size());
  }
}

TEST(Labels, TargetLabelsAndCsvHeader) {
  EXPECT_EQ(target_label(ErrorKind::SDC, 50.0), "sdc:50");
  EXPECT_EQ(target_label(ErrorKind::DUE, kMaxTarget), "due:max");
  std::ostringstream out;
  write_explore_csv(out, {});
  EXPECT_EQ(out.str().substr(0, kExploreHeader.size()), kExploreHeader);
}

}  // namespace
}  // namespace resilex
