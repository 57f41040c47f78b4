#pragma once

// Hand-rolled generators and shared fixtures for the tests.

#include <cstdint>
#include <string>
#include <vector>

#include "resilex/design.hpp"
#include "resilex/profile.hpp"
#include "resilex/random.hpp"

namespace resilex::testing {

/// Directory of the bundled data files.
std::string data_dir();

/// The bundled toy-core design and its eight-benchmark profile.
const Design& toy_design();
const VulnerabilityProfile& toy_profile();

struct DesignShape {
  std::size_t flip_flops = 100;
  CoreKind core = CoreKind::InO;
  /// Placement area per flip-flop, in squared flip-flop lengths.
  double area_per_ff = 2.0;
  double max_slack_ps = 300.0;
  double xor2_delay_ps = 22.0;
};

/// Uniform random placement, stages and slack.
Design random_design(rng::Engine& g, const DesignShape& shape);

struct ProfileShape {
  std::vector<std::string> benchmarks{"b0", "b1", "b2"};
  /// Flip-flops whose errors always vanish.
  double vanish_share = 0.2;
  std::uint64_t max_count = 40;
  bool detection = false;
  /// Benchmarks flagged as running an ABFT kernel.
  std::vector<std::string> abft;
};

/// Random per-(ff, benchmark) outcome counts over every design flip-flop.
VulnerabilityProfile random_profile(rng::Engine& g, const Design& design, const ProfileShape& shape);

OutcomeCounts random_counts(rng::Engine& g, std::uint64_t max_count, bool detection);

}  // namespace resilex::testing
