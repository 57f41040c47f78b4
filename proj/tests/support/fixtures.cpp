#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

#ifndef RESILEX_TEST_DATA_DIR
#error "RESILEX_TEST_DATA_DIR must point at the bundled data directory"
#endif

namespace resilex::testing {

std::string data_dir() { return RESILEX_TEST_DATA_DIR; }

const Design& toy_design() {
  static const Design d = load_design(data_dir() + "/toycore_ino.design");
  return d;
}

const VulnerabilityProfile& toy_profile() {
  static const VulnerabilityProfile p = load_profile(data_dir() + "/toycore_ino.profile");
  return p;
}

Design random_design(rng::Engine& g, const DesignShape& shape) {
  const double side = std::sqrt(shape.area_per_ff * static_cast<double>(shape.flip_flops));
  constexpr Stage kStages[] = {Stage::fetch,     Stage::decode,    Stage::execute,     Stage::memory,
                               Stage::exception, Stage::writeback, Stage::post_commit, Stage::other};
  std::vector<FlipFlop> ffs;
  ffs.reserve(shape.flip_flops);
  for (std::size_t i = 0; i < shape.flip_flops; ++i) {
    FlipFlop f;
    f.id = static_cast<FfId>(i);
    f.structure = "s" + std::to_string(i % 7);
    f.stage = kStages[rng::below(g, std::size(kStages))];
    f.x = rng::uniform(g, 0.0, side);
    f.y = rng::uniform(g, 0.0, side);
    f.slack_ps = rng::uniform(g, 0.0, shape.max_slack_ps);
    ffs.push_back(std::move(f));
  }
  return Design(shape.core, std::move(ffs), shape.xor2_delay_ps);
}

OutcomeCounts random_counts(rng::Engine& g, std::uint64_t max_count, bool detection) {
  OutcomeCounts c;
  c.vanished = rng::below(g, max_count + 1);
  c.omm = rng::below(g, max_count / 4 + 1);
  c.ut = rng::below(g, max_count / 4 + 1);
  c.hang = rng::below(g, max_count / 8 + 1);
  c.ed = detection ? rng::below(g, max_count / 8 + 1) : 0;
  return c;
}

VulnerabilityProfile random_profile(rng::Engine& g, const Design& design, const ProfileShape& shape) {
  VulnerabilityProfile p;
  for (const auto& b : shape.benchmarks) {
    BenchmarkInfo info;
    info.golden_cycles = 1000;
    info.injections = 0;
    info.abft = std::find(shape.abft.begin(), shape.abft.end(), b) != shape.abft.end();
    info.detection_active = shape.detection;
    p.set_benchmark(b, info);
  }
  for (const auto& ff : design.flip_flops()) {
    const bool vanish = rng::bernoulli(g, shape.vanish_share);
    for (const auto& b : shape.benchmarks) {
      OutcomeCounts c;
      if (vanish) {
        c.vanished = 1 + rng::below(g, shape.max_count);
      } else {
        c = random_counts(g, shape.max_count, shape.detection);
      }
      if (c.total() > 0) p.add(ff.id, b, c);
    }
  }
  return p;
}

}  // namespace resilex::testing
