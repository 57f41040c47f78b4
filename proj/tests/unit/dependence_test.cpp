#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "resilex/dependence.hpp"

namespace resilex {
namespace {

using FfSet = std::set<FfId>;

double similarity(std::vector<FfSet> s) { return subset_similarity(s); }

Design line_design(std::size_t n) {
  std::vector<FlipFlop> ffs;
  for (std::size_t i = 0; i < n; ++i) {
    ffs.push_back({static_cast<FfId>(i), "s", Stage::execute, 2.0 * static_cast<double>(i), 0, 0});
  }
  return Design(CoreKind::InO, std::move(ffs), 22.0);
}

// Benchmarks named in `hot` put errors on [first, first + count).
void add_hot(VulnerabilityProfile& p, const std::string& bench, FfId first, FfId count, std::uint64_t weight) {
  p.set_benchmark(bench, {});
  for (FfId f = first; f < first + count; ++f) {
    OutcomeCounts c;
    c.omm = weight + static_cast<std::uint64_t>(f % 3);
    c.ut = weight / 2 + 1;
    c.vanished = 5;
    p.add(f, bench, c);
  }
}

SplitTrial split(std::vector<std::string> train, std::vector<std::string> validate) {
  SplitTrial s;
  s.training = std::move(train);
  s.validation = std::move(validate);
  return s;
}

DependenceOptions hardening_only() {
  DependenceOptions o;
  o.per_ff = {"leap_dice"};
  o.permutations = 200;
  o.workers = 1;
  return o;
}

TEST(Splits, SizesDisjointAndReproducible) {
  std::vector<std::string> names;
  for (int i = 0; i < 11; ++i) names.push_back("b" + std::to_string(i));
  const auto splits = make_splits(names, 4, 50, 7);
  ASSERT_EQ(splits.size(), 50u);
  for (const auto& s : splits) {
    EXPECT_EQ(s.training.size(), 4u);
    EXPECT_EQ(s.validation.size(), 7u);
    std::set<std::string> all(s.training.begin(), s.training.end());
    for (const auto& v : s.validation) EXPECT_TRUE(all.insert(v).second) << v;
    EXPECT_EQ(all.size(), names.size());
  }
  EXPECT_EQ(make_splits(names, 4, 1, 7), make_splits(names, 4, 1, 7));
  EXPECT_EQ(make_splits(names, 4, 1, 7)[0], splits[0]);
  EXPECT_NE(make_splits(names, 4, 50, 8), splits);
}

TEST(Splits, RejectsBadSizes) {
  const std::vector<std::string> names{"a", "b", "c"};
  EXPECT_THROW(make_splits(names, 3, 1, 1), std::invalid_argument);
  EXPECT_THROW(make_splits(names, 0, 1, 1), std::invalid_argument);
  EXPECT_THROW(make_splits(names, 1, 0, 1), std::invalid_argument);
  EXPECT_THROW(make_splits({"a", "a", "b"}, 1, 1, 1), std::invalid_argument);
}

TEST(TrainedVsValidated, IdenticalProfilesGiveNoGap) {
  const auto d = line_design(30);
  VulnerabilityProfile p;
  add_hot(p, "a", 0, 30, 8);
  add_hot(p, "b", 0, 30, 8);
  const std::vector<SplitTrial> splits{split({"a"}, {"b"})};
  const auto r = trained_vs_validated(d, p, default_library(), splits, 10.0, ErrorKind::SDC, hardening_only());
  ASSERT_EQ(r.feasible_trials, 1u);
  EXPECT_GE(r.trained, 10.0);
  EXPECT_DOUBLE_EQ(r.validated, r.trained);
  EXPECT_DOUBLE_EQ(r.underestimate, 0.0);
}

TEST(TrainedVsValidated, DisjointVulnerabilityIsOverestimated) {
  const auto d = line_design(40);
  VulnerabilityProfile p;
  add_hot(p, "t", 0, 20, 8);
  add_hot(p, "v", 20, 20, 8);
  const std::vector<SplitTrial> splits{split({"t"}, {"v"})};
  const auto r = trained_vs_validated(d, p, default_library(), splits, 10.0, ErrorKind::SDC, hardening_only());
  ASSERT_EQ(r.feasible_trials, 1u);
  EXPECT_GE(r.trained, 10.0);
  EXPECT_LT(r.validated, r.trained);
  EXPECT_NEAR(r.underestimate, (r.validated - r.trained) / r.trained, 1e-12);

  // Direct recomputation of the validated value.
  const auto& trial = r.trials.at(0);
  EXPECT_NEAR(trial.validated, r.validated, 1e-12);
  EXPECT_NEAR(r.after_lhl, trial.after_lhl, 1e-12);
  EXPECT_GT(r.after_lhl, r.validated);
}

TEST(TrainedVsValidated, InfeasibleTrialsAreReportedButNotAveraged) {
  const auto d = line_design(20);
  VulnerabilityProfile p;
  add_hot(p, "a", 0, 20, 8);
  add_hot(p, "b", 0, 20, 8);
  const std::vector<SplitTrial> splits{split({"a"}, {"b"})};
  const auto r = trained_vs_validated(d, p, default_library(), splits, 1e9, ErrorKind::SDC, hardening_only());
  ASSERT_EQ(r.trials.size(), 1u);
  EXPECT_FALSE(r.trials[0].feasible);
  EXPECT_FALSE(r.trials[0].message.empty());
  EXPECT_EQ(r.feasible_trials, 0u);
}

TEST(TrainedVsValidated, UnknownBenchmarkRejected) {
  const auto d = line_design(10);
  VulnerabilityProfile p;
  add_hot(p, "a", 0, 10, 4);
  const std::vector<SplitTrial> splits{split({"a"}, {"zzz"})};
  EXPECT_THROW(trained_vs_validated(d, p, default_library(), splits, 2.0, ErrorKind::SDC), std::invalid_argument);
}

TEST(TrainedVsValidated, LhlNeverLowersValidatedImprovementOnToyProfile) {
  const auto& d = testing::toy_design();
  const auto& p = testing::toy_profile();
  const auto splits = make_splits(p.benchmark_names(), 3, 12, 5);
  DependenceOptions o;
  o.base.recovery = "flush";
  o.permutations = 500;
  for (auto kind : {ErrorKind::SDC, ErrorKind::DUE}) {
    const auto r = trained_vs_validated(d, p, default_library(), splits, 50.0, kind, o);
    for (const auto& t : r.trials) {
      if (!t.feasible) continue;
      EXPECT_GE(t.after_lhl, t.validated * (1 - 1e-12)) << t.index;
    }
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
  }
}

TEST(TrainedVsValidated, WorkerCountDoesNotChangeReport) {
  const auto& d = testing::toy_design();
  const auto& p = testing::toy_profile();
  const auto splits = make_splits(p.benchmark_names(), 4, 6, 2);
  DependenceOptions one = hardening_only();
  DependenceOptions three = hardening_only();
  three.workers = 3;
  std::vector<DependenceReport> a{trained_vs_validated(d, p, default_library(), splits, 20.0, ErrorKind::SDC, one)};
  std::vector<DependenceReport> b{trained_vs_validated(d, p, default_library(), splits, 20.0, ErrorKind::SDC, three)};
  std::ostringstream sa;
  std::ostringstream sb;
  write_dependence_csv(sa, a);
  write_dependence_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a[0].p_value, b[0].p_value);
}

TEST(PermutationTest, EdgeCases) {
  EXPECT_TRUE(std::isnan(sign_flip_p_value(std::vector<double>{}, 100, 1)));
  const std::vector<double> nan_only{std::nan("")};
  EXPECT_TRUE(std::isnan(sign_flip_p_value(nan_only, 100, 1)));
  const std::vector<double> zeros(10, 0.0);
  EXPECT_DOUBLE_EQ(sign_flip_p_value(zeros, 99, 1), 1.0);
  const std::vector<double> shifted(30, -2.0);
  EXPECT_LT(sign_flip_p_value(shifted, 999, 1), 0.01);
  EXPECT_THROW(sign_flip_p_value(shifted, 0, 1), std::invalid_argument);
}

TEST(Similarity, Examples) {
  EXPECT_DOUBLE_EQ(similarity({{1, 2, 3}, {1, 2, 3}}), 1.0);
  EXPECT_DOUBLE_EQ(similarity({{1, 2}, {3, 4}}), 0.0);
  EXPECT_DOUBLE_EQ(similarity({{1, 2, 3}, {2, 3, 4}}), 0.5);
  EXPECT_THROW(similarity({{1}}), std::invalid_argument);
  EXPECT_THROW(similarity({{}, {}}), std::invalid_argument);
}

TEST(Similarity, OrderInvariantAndMatchesCounting) {
  rng::Engine g = rng::make_engine(89);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<FfSet> subsets(2 + rng::below(g, 4));
    for (auto& s : subsets) {
      for (FfId f = 0; f < 20; ++f) {
        if (rng::bernoulli(g, 0.6)) s.insert(f);
      }
      s.insert(0);
    }
    const double base = subset_similarity(subsets);
    EXPECT_DOUBLE_EQ(base, testing::counted_similarity(subsets));
    auto shuffled = subsets;
    rng::shuffle(shuffled, g);
    EXPECT_DOUBLE_EQ(subset_similarity(shuffled), base);
    const bool all_equal = std::all_of(subsets.begin(), subsets.end(), [&](const FfSet& s) { return s == subsets[0]; });
    EXPECT_EQ(base == 1.0, all_equal);
  }
}

TEST(Deciles, TenFlipFlopsGiveSingletons) {
  VulnerabilityProfile p;
  add_hot(p, "a", 0, 10, 3);
  const auto deciles = decile_subsets(p, "a");
  ASSERT_EQ(deciles.size(), 10u);
  for (const auto& s : deciles) EXPECT_EQ(s.size(), 1u);
}

TEST(Deciles, UniformProfileFallsBackToIdOrder) {
  VulnerabilityProfile p;
  p.set_benchmark("a", {});
  for (FfId f = 0; f < 25; ++f) {
    OutcomeCounts c;
    c.omm = 4;
    p.add(f, "a", c);
  }
  const auto deciles = decile_subsets(p, "a");
  EXPECT_EQ(deciles[0], (FfSet{0, 1, 2}));
  EXPECT_EQ(deciles[4], (FfSet{12, 13, 14}));
  EXPECT_EQ(deciles[5], (FfSet{15, 16}));
  EXPECT_EQ(deciles[9], (FfSet{23, 24}));
}

TEST(Deciles, PartitionWithSizesWithinOne) {
  rng::Engine g = rng::make_engine(97);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = testing::random_design(g, {.flip_flops = 10 + rng::below(g, 200)});
    const auto p = testing::random_profile(g, d, {});
    const auto deciles = decile_subsets(p, "b1");
    ASSERT_EQ(deciles.size(), 10u);
    std::size_t total = 0;
    FfSet all;
    std::size_t lo = SIZE_MAX;
    std::size_t hi = 0;
    for (const auto& s : deciles) {
      total += s.size();
      all.insert(s.begin(), s.end());
      lo = std::min(lo, s.size());
      hi = std::max(hi, s.size());
    }
    EXPECT_EQ(total, p.flip_flops().size());
    EXPECT_EQ(all, p.flip_flops());
    EXPECT_LE(hi - lo, 1u);
    EXPECT_GE(deciles.front().size(), deciles.back().size());
  }
}

TEST(Deciles, SharedHotStructuresRankTopDecileMostSimilar) {
  rng::Engine g = rng::make_engine(101);
  VulnerabilityProfile p;
  for (int b = 0; b < 4; ++b) {
    const std::string name = "b" + std::to_string(b);
    p.set_benchmark(name, {});
    for (FfId f = 0; f < 100; ++f) {
      OutcomeCounts c;
      c.vanished = 10;
      // Ten hot flip-flops shared by every benchmark, noise elsewhere.
      c.omm = f < 10 ? 1000 + rng::below(g, 10) : rng::below(g, 50);
      p.add(f, name, c);
    }
  }
  const auto rows = decile_similarity(p);
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0].decile, 1u);
  EXPECT_DOUBLE_EQ(rows[0].similarity, 1.0);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[0].similarity, rows[i].similarity);

  std::ostringstream out;
  write_decile_csv(out, rows);
  EXPECT_EQ(out.str().substr(0, kDecileHeader.size()), kDecileHeader);
}

}  // namespace
}  // namespace resilex
