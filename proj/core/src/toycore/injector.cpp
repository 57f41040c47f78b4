#include "resilex/toycore/injector.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <stdexcept>

#include "resilex/parallel.hpp"
#include "resilex/random.hpp"
#include "resilex/text.hpp"

namespace resilex::toycore {

GoldenTrace run_golden(const ToyProgram& program, std::uint64_t cycle_ceiling,
                       std::uint64_t checkpoint_interval) {
  program.validate();
  if (checkpoint_interval == 0) throw std::invalid_argument("checkpoint interval must be positive");
  GoldenTrace trace;
  trace.checkpoint_interval = checkpoint_interval;
  Core core(program, /*detect_port=*/true);
  for (;;) {
    if (core.cycle() % checkpoint_interval == 0) trace.checkpoints.push_back(core.state());
    if (core.cycle() >= cycle_ceiling) {
      throw std::runtime_error("golden run does not terminate: '" + program.name + "' exceeds " +
                               std::to_string(cycle_ceiling) + " cycles");
    }
    const auto st = core.step();
    if (st == StepStatus::Halted) break;
    if (st == StepStatus::Trapped) {
      throw std::runtime_error("golden run of '" + program.name + "' traps at cycle " +
                               std::to_string(core.cycle()));
    }
    if (st == StepStatus::Detected) {
      throw std::runtime_error("golden run of '" + program.name + "' fires the detection port");
    }
  }
  trace.cycles = core.cycle();
  trace.output = core.state().output;
  return trace;
}

OutcomeClass inject_one(const ToyProgram& program, const GoldenTrace& golden, const InjectionPoint& point,
                        const InjectOptions& options) {
  if (golden.checkpoints.empty()) throw std::invalid_argument("golden trace has no checkpoints");
  if (point.cycle >= golden.cycles) return OutcomeClass::Vanished;  // after the golden halt

  const auto interval = golden.checkpoint_interval;
  const auto start = std::min<std::uint64_t>(point.cycle / interval, golden.checkpoints.size() - 1);
  Core core(program, options.detect_port, golden.checkpoints[start], start * interval);
  core.run(point.cycle);
  core.flip(point.target.element, point.target.bit);

  const auto hang_limit =
      static_cast<std::uint64_t>(std::floor(options.hang_multiplier * static_cast<double>(golden.cycles)));
  while (core.cycle() < hang_limit) {
    const auto cyc = core.cycle();
    if (cyc % interval == 0 && cyc > point.cycle) {
      const auto idx = cyc / interval;
      if (idx < golden.checkpoints.size() && same_observable_state(core.state(), golden.checkpoints[idx])) {
        return OutcomeClass::Vanished;
      }
    }
    switch (core.step()) {
      case StepStatus::Running: break;
      case StepStatus::Halted:
        return core.state().output == golden.output ? OutcomeClass::Vanished : OutcomeClass::OMM;
      case StepStatus::Trapped: return OutcomeClass::UT;
      case StepStatus::Detected: return OutcomeClass::ED;
    }
  }
  return OutcomeClass::Hang;
}

void CampaignConfig::validate() const {
  if (injections < 1) throw std::invalid_argument("injection count must be at least 1");
  if (injections > kMaxInjections) {
    throw std::invalid_argument("injection count " + std::to_string(injections) + " exceeds the ceiling of " +
                                std::to_string(kMaxInjections));
  }
  if (!(hang_multiplier > 1.0) || !std::isfinite(hang_multiplier)) {
    throw std::invalid_argument("hang multiplier must be a finite value > 1");
  }
  for (const auto& h : hooks) {
    if (h != kAbftHook) throw std::invalid_argument("unknown detection hook '" + h + "'");
  }
}

InjectionPoint draw_injection(std::uint64_t seed, std::uint64_t index, const StateBitMap& bits,
                              std::uint64_t golden_cycles) {
  auto g = rng::make_engine(seed, index);
  InjectionPoint p;
  p.target = bits[static_cast<std::size_t>(rng::below(g, bits.size()))];
  p.cycle = rng::below(g, golden_cycles);
  return p;
}

VulnerabilityProfile run_campaign(const ToyProgram& program, const CampaignConfig& config,
                                  const Design& design) {
  config.validate();
  const StateBitMap pipeline_bits(false);
  const StateBitMap bits(design.size() > pipeline_bits.size());
  for (std::size_t id = 0; id < bits.size(); ++id) {
    if (!design.contains(static_cast<FfId>(id))) {
      throw std::invalid_argument("design has no flip-flop " + std::to_string(id) +
                                  " for toy-core state bit " +
                                  std::string(element_info(bits[id].element).name) + "[" +
                                  std::to_string(bits[id].bit) + "]");
    }
  }

  const auto golden = run_golden(program);
  InjectOptions opts;
  opts.hang_multiplier = config.hang_multiplier;
  opts.detect_port = config.hooks.contains(std::string(kAbftHook));

  const unsigned workers = static_cast<unsigned>(
      std::min<std::uint64_t>(resolve_workers(config.workers), config.injections));
  std::vector<std::vector<OutcomeCounts>> partial(workers, std::vector<OutcomeCounts>(bits.size()));
  parallel_for(workers, workers, [&](std::size_t w) {
    auto& counts = partial[w];
    for (std::uint64_t i = w; i < config.injections; i += workers) {
      const auto point = draw_injection(config.seed, i, bits, golden.cycles);
      const auto id = bits.id_of(point.target.element, point.target.bit);
      counts[static_cast<std::size_t>(id)][inject_one(program, golden, point, opts)] += 1;
    }
  });

  VulnerabilityProfile profile;
  const std::string name = config.benchmark.empty() ? program.name : config.benchmark;
  BenchmarkInfo info;
  info.golden_cycles = golden.cycles;
  info.seed = config.seed;
  info.injections = config.injections;
  info.abft = program.abft;
  info.detection_active = opts.detect_port;
  profile.set_benchmark(name, info);
  for (std::size_t id = 0; id < bits.size(); ++id) {
    OutcomeCounts total;
    for (const auto& p : partial) total += p[id];
    profile.add(static_cast<FfId>(id), name, total);
  }
  return profile;
}

std::uint64_t required_sample_size(double margin, double confidence, double worst_p) {
  if (!(margin > 0.0 && margin < 1.0)) throw std::invalid_argument("margin must lie in (0, 1)");
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must lie in (0, 1)");
  if (!(worst_p >= 0.0 && worst_p <= 1.0)) throw std::invalid_argument("worst-case proportion must lie in [0, 1]");
  const boost::math::normal standard;
  const double z = boost::math::quantile(standard, 1.0 - (1.0 - confidence) / 2.0);
  return static_cast<std::uint64_t>(std::ceil(z * z * worst_p * (1.0 - worst_p) / (margin * margin)));
}

Design make_toycore_design(bool include_regfile) {
  const StateBitMap bits(include_regfile);
  auto g = rng::make_engine(0x70c0, 1);
  constexpr double kPitch = 0.9;
  constexpr double kRowHeight = 1.3;
  constexpr double kRowLength = 36.0;

  std::vector<FlipFlop> ffs;
  ffs.reserve(bits.size());
  double x = 0.0;
  double y = 0.0;
  std::size_t prev_element = kElementCount;
  for (std::size_t id = 0; id < bits.size(); ++id) {
    const auto [element, bit] = bits[id];
    const auto& info = element_info(element);
    if (element != prev_element) {
      // Each structure starts a fresh segment; wide ones wrap onto new rows.
      if (x + info.width * kPitch > kRowLength && x > 0.0) {
        x = 0.0;
        y += kRowHeight;
      }
      x += 1.5;
      prev_element = element;
    }
    if (x > kRowLength) {
      x = 1.5;
      y += kRowHeight;
    }
    FlipFlop ff;
    ff.id = static_cast<FfId>(id);
    ff.structure = std::string(info.name);
    ff.stage = info.stage;
    ff.x = x + rng::uniform(g, -0.12, 0.12);
    ff.y = y + 0.5 + rng::uniform(g, -0.12, 0.12);
    ff.slack_ps = info.critical ? rng::uniform(g, 0.0, 60.0) : rng::uniform(g, 150.0, 300.0);
    ffs.push_back(std::move(ff));
    x += kPitch;
  }
  for (auto& ff : ffs) {
    ff.x = std::round(ff.x * 1000.0) / 1000.0;
    ff.y = std::round(ff.y * 1000.0) / 1000.0;
    ff.slack_ps = std::round(ff.slack_ps * 10.0) / 10.0;
  }
  return Design(CoreKind::InO, std::move(ffs), 22.0);
}

}  // namespace resilex::toycore
