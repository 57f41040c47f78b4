#include <gtest/gtest.h>

#include <string>

#include "resilex/random.hpp"
#include "resilex/technique.hpp"

namespace resilex {
namespace {

const TechniqueLibrary& lib() { return default_library(); }

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  if (at != std::string::npos) text.replace(at, from.size(), to);
  return text;
}

TEST(Library, BundledCellFigures) {
  const auto& dice = lib().technique(tech::kLeapDice);
  EXPECT_DOUBLE_EQ(dice.ser_scale, 2.0e-4);
  ASSERT_TRUE(dice.cell.has_value());
  EXPECT_DOUBLE_EQ(dice.cell->energy, 1.8);
  EXPECT_DOUBLE_EQ(lib().technique(tech::kLhl).ser_scale, 0.25);
  EXPECT_FALSE(lib().technique(tech::kMonitor).applies_to(CoreKind::InO));
  EXPECT_TRUE(lib().technique(tech::kMonitor).applies_to(CoreKind::OoO));
}

TEST(Library, EveryTechniqueAndRecoveryIsPresent) {
  for (auto id : {tech::kLeapDice, tech::kLhl, tech::kLeapCtrl, tech::kEds, tech::kParity, tech::kDfc,
                  tech::kMonitor, tech::kAssertions, tech::kCfcss, tech::kEddi, tech::kEddiNoReadback,
                  tech::kAbftCorrection, tech::kAbftDetection}) {
    EXPECT_TRUE(lib().has_technique(id)) << id;
  }
  for (auto id : {recovery::kNone, recovery::kFlush, recovery::kRob, recovery::kIr, recovery::kEir}) {
    EXPECT_TRUE(lib().has_recovery(id)) << id;
  }
  EXPECT_THROW(lib().technique("nope"), std::invalid_argument);
  EXPECT_THROW(lib().recovery("nope"), std::invalid_argument);
}

TEST(Library, RoundTripsBitExactly) {
  const auto text = serialize_library(lib());
  const auto back = parse_library(text);
  EXPECT_EQ(back, lib());
  EXPECT_EQ(serialize_library(back), text);
}

TEST(Library, RejectsOutOfRangeCoverage) {
  auto broken = lib();
  auto spec = broken.technique(tech::kDfc);
  spec.cores.at(CoreKind::InO).sdc.covered = 1.3;
  broken.add(spec);
  EXPECT_THROW(broken.validate(), std::invalid_argument);
}

TEST(Library, RejectsBadFileContents) {
  const std::string text(default_library_text());
  EXPECT_THROW(parse_library(replace_once(text, "\"ser_scale\": 0.25", "\"ser_scale\": 1.5")),
               std::invalid_argument);
  EXPECT_THROW(parse_library(replace_once(text, "\"layer\": \"circuit\"", "\"layer\": \"quantum\"")), ParseError);
  EXPECT_THROW(parse_library("{ not json"), ParseError);
}

TEST(Library, DetectModesHaveRecoveriesAndHardenModesDoNot) {
  for (const auto& [id, spec] : lib().techniques()) {
    if (spec.mode == Mode::harden) continue;
    for (const auto& r : spec.recoveries) EXPECT_TRUE(lib().has_recovery(r)) << id << " " << r;
  }
  for (const auto& [id, r] : lib().recoveries()) {
    if (id == recovery::kFlush || id == recovery::kRob) {
      for (const auto& [core, f] : r.cores) EXPECT_FALSE(f.unrecoverable.empty()) << id;
    }
    if (id == recovery::kIr || id == recovery::kEir) {
      for (const auto& [core, f] : r.cores) {
        for (Stage s : kAllStages) {
          if (s != Stage::other) EXPECT_FALSE(f.unrecoverable.contains(s)) << id;
        }
      }
    }
  }
}

TEST(ComposeEnergy, KnownRows) {
  EXPECT_NEAR(compose_energy(0.01, 0.062), 0.07262, 1e-12);
  EXPECT_EQ(compose_energy(0.0, 0.156), 0.156);
  EXPECT_EQ(compose_energy(0.093, 0.0), 0.093);
}

TEST(ComposeEnergy, ZeroTermIsIdentity) {
  rng::Engine g = rng::make_engine(23);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng::uniform(g, 0.0, 5.0);
    EXPECT_EQ(compose_energy(0.0, x), x);
    EXPECT_EQ(compose_energy(x, 0.0), x);
    const double y = rng::uniform(g, 0.0, 5.0);
    EXPECT_NEAR(compose_energy(x, y), (1 + x) * (1 + y) - 1, 1e-12 * (1 + x) * (1 + y));
  }
}

TEST(ResidualRates, HardenDetectAndUncovered) {
  const auto dice = residual_rates(lib().technique(tech::kLeapDice), CoreKind::InO, ErrorKind::SDC, true);
  EXPECT_DOUBLE_EQ(dice.residual, 2.0e-4);
  EXPECT_DOUBLE_EQ(dice.detected, 0.0);

  const auto parity = residual_rates(lib().technique(tech::kParity), CoreKind::InO, ErrorKind::DUE, true);
  EXPECT_DOUBLE_EQ(parity.residual, 0.0);
  EXPECT_DOUBLE_EQ(parity.detected, 1.0);

  const auto dfc = residual_rates(lib().technique(tech::kDfc), CoreKind::InO, ErrorKind::SDC, true);
  EXPECT_DOUBLE_EQ(dfc.residual, 0.70);
  EXPECT_DOUBLE_EQ(dfc.detected, 0.30);

  const auto missed = residual_rates(lib().technique(tech::kDfc), CoreKind::InO, ErrorKind::SDC, false);
  EXPECT_DOUBLE_EQ(missed.residual, 1.0);
  EXPECT_DOUBLE_EQ(missed.detected, 0.0);

  EXPECT_THROW(residual_rates(lib().technique(tech::kMonitor), CoreKind::InO, ErrorKind::SDC, true),
               std::invalid_argument);
}

TEST(ResidualRates, ComponentsNeverExceedOne) {
  for (const auto& [id, spec] : lib().techniques()) {
    for (const auto& [core, fig] : spec.cores) {
      for (ErrorKind k : {ErrorKind::SDC, ErrorKind::DUE}) {
        for (bool covered : {false, true}) {
          for (bool abft : {false, true}) {
            const auto r = residual_rates(spec, core, k, covered, abft);
            EXPECT_GE(r.residual, 0.0) << id;
            EXPECT_GE(r.detected, 0.0) << id;
            EXPECT_LE(r.residual + r.detected, 1.0 + 1e-15) << id;
          }
        }
      }
    }
  }
}

TEST(ResidualRates, ReadbackVariantDetectsMore) {
  const auto& with = lib().technique(tech::kEddi);
  const auto& without = lib().technique(tech::kEddiNoReadback);
  for (const auto& [core, fig] : with.cores) {
    for (ErrorKind k : {ErrorKind::SDC, ErrorKind::DUE}) {
      if (!without.applies_to(core)) continue;
      EXPECT_GT(residual_rates(with, core, k, true).detected, residual_rates(without, core, k, true).detected);
    }
  }
  EXPECT_DOUBLE_EQ(with.on(CoreKind::InO).sdc.firing, 0.987);
  EXPECT_DOUBLE_EQ(without.on(CoreKind::InO).sdc.firing, 0.861);
}

TEST(RecoveryReach, StageRules) {
  const FlipFlop wb{0, "wb", Stage::writeback, 0, 0, 0};
  const FlipFlop ex{1, "ex", Stage::execute, 0, 0, 0};
  EXPECT_FALSE(recovery_reach(lib().recovery(recovery::kFlush), CoreKind::InO, wb));
  EXPECT_TRUE(recovery_reach(lib().recovery(recovery::kFlush), CoreKind::InO, ex));
  for (Stage s : kAllStages) {
    const FlipFlop ff{2, "x", s, 0, 0, 0};
    EXPECT_TRUE(recovery_reach(lib().recovery(recovery::kIr), CoreKind::InO, ff));
    EXPECT_TRUE(recovery_reach(lib().recovery(recovery::kEir), CoreKind::OoO, ff));
    EXPECT_FALSE(recovery_reach(lib().recovery(recovery::kNone), CoreKind::InO, ff));
  }
}

}  // namespace
}  // namespace resilex
