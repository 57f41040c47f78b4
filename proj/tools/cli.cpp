#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "manifest.hpp"
#include "resilex/dependence.hpp"
#include "resilex/explorer.hpp"
#include "resilex/parity.hpp"
#include "resilex/text.hpp"
#include "resilex/toycore/injector.hpp"
#include "resilex/toycore/programs.hpp"

#ifndef RESILEX_VERSION
#define RESILEX_VERSION "unknown"
#endif

namespace resilex::cli {

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + std::string(what) + " file '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path + "'");
  f << content;
  if (!f) throw InputError("failed writing '" + path + "'");
}

double parse_target(const std::string& s) {
  if (s == "max") return kMaxTarget;
  double v = 0.0;
  if (!text::parse_double(s, v) || !(v >= 1.0)) {
    throw InputError("target '" + s + "' must be a number >= 1 or 'max'");
  }
  return v;
}

ErrorKind parse_kind(const std::string& s) {
  if (s == "sdc" || s == "SDC") return ErrorKind::SDC;
  if (s == "due" || s == "DUE") return ErrorKind::DUE;
  throw InputError("error kind '" + s + "' must be sdc or due");
}

// Options shared by every subcommand.
struct Common {
  std::string design;
  std::string profile;
  std::string library;
  std::uint64_t seed = 1;
  std::string out;
  unsigned workers = 0;
};

void add_common(CLI::App* app, Common& c, bool design_required, bool profile_required) {
  auto* d = app->add_option("--design", c.design, "Design file");
  if (design_required) d->required();
  auto* p = app->add_option("--profile", c.profile, "Vulnerability profile file");
  if (profile_required) p->required();
  app->add_option("--library", c.library, "Technique library (JSON with comments); bundled one by default");
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app->add_option("--out", c.out, "Output file ('-' for stdout)");
  app->add_option("--workers", c.workers, "Worker threads (default: $RESILEX_WORKERS or all cores)");
}

// Inputs loaded with their digests recorded in the manifest.
struct Loaded {
  std::optional<Design> design;
  std::optional<VulnerabilityProfile> profile;
  std::unique_ptr<TechniqueLibrary> owned_library;
  const TechniqueLibrary* library = &default_library();
};

Loaded load_inputs(const Common& c, RunManifest& m) {
  Loaded l;
  if (!c.design.empty()) {
    const auto text = read_file(c.design, "design");
    std::istringstream in(text);
    l.design = parse_design(in, c.design);
    m.add_input("design", c.design, text);
  }
  if (!c.profile.empty()) {
    const auto text = read_file(c.profile, "profile");
    std::istringstream in(text);
    l.profile = parse_profile(in, c.profile);
    l.profile->validate();
    m.add_input("profile", c.profile, text);
  }
  if (!c.library.empty()) {
    const auto text = read_file(c.library, "library");
    l.owned_library = std::make_unique<TechniqueLibrary>(parse_library(text, c.library));
    l.library = l.owned_library.get();
    m.add_input("library", c.library, text);
  } else {
    m.add_input("library", "<bundled>", std::string(default_library_text()));
  }
  return l;
}

RunManifest make_manifest(const CLI::App* sub) {
  RunManifest m;
  m.command = sub->get_name();
  m.version = RESILEX_VERSION;
  m.timestamp = manifest_timestamp();
  for (const auto* opt : sub->get_options()) {
    if (opt->count() == 0 || opt->get_name() == "--help") continue;
    std::string value;
    for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    m.flags.emplace_back(opt->get_name(), value);
  }
  return m;
}

std::set<std::string> technique_set(const std::vector<std::string>& ids, const TechniqueLibrary& library) {
  std::set<std::string> out;
  for (const auto& id : ids) {
    if (!library.technique(id).per_ff) throw InputError("technique '" + id + "' is not a per-flip-flop technique");
    out.insert(id);
  }
  return out;
}

ProtectionAssignment make_base(const std::string& recovery, const std::vector<std::string>& high_level,
                               const std::string& abft, std::uint64_t seed, const Design& design,
                               const VulnerabilityProfile& profile, const TechniqueLibrary& library) {
  ProtectionAssignment base;
  base.recovery = recovery;
  base.coverage_seed = seed;
  library.recovery(recovery);
  for (const auto& id : high_level) {
    if (library.technique(id).per_ff) throw InputError("technique '" + id + "' is applied per flip-flop");
    base.high_level.push_back(id);
  }
  const auto mode = parse_abft_mode(abft);
  if (!mode) throw InputError("ABFT mode '" + abft + "' must be none, correction or detection");
  if (*mode != AbftMode::none) {
    base = layer_abft(base, draw_abft_coverage(design, profile, library, *mode, seed), *mode, profile, library);
  }
  return base;
}

// ---- inject ---------------------------------------------------------------

struct InjectArgs {
  Common common;
  std::vector<std::string> benchmarks;
  std::optional<std::uint64_t> count;
  std::optional<double> margin;
  double confidence = 0.95;
  double worst_p = 0.5;
  std::vector<std::string> hooks;
  double hang_multiplier = 2.0;
  std::string design_out;
};

int cmd_inject(const InjectArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  RunManifest m = make_manifest(sub);
  Design design = toycore::make_toycore_design();
  if (!a.common.design.empty()) {
    const auto text = read_file(a.common.design, "design");
    std::istringstream in(text);
    design = parse_design(in, a.common.design);
    m.add_input("design", a.common.design, text);
  }
  std::uint64_t count = a.count.value_or(1000);
  if (a.margin) count = toycore::required_sample_size(*a.margin, a.confidence, a.worst_p);
  m.resolved.emplace_back("injections", std::to_string(count));

  std::vector<std::string> names;
  for (const auto& b : a.benchmarks) {
    if (b == "all") {
      for (const auto& n : toycore::bundled_program_names()) names.push_back(n);
    } else {
      names.push_back(b);
    }
  }
  VulnerabilityProfile profile;
  for (const auto& name : names) {
    const auto program = toycore::bundled_program(name);
    toycore::CampaignConfig config;
    config.seed = a.common.seed;
    config.injections = count;
    config.benchmark = name;
    config.hang_multiplier = a.hang_multiplier;
    config.hooks = {a.hooks.begin(), a.hooks.end()};
    config.workers = a.common.workers;
    const auto one = toycore::run_campaign(program, config, design);
    for (const auto& [b, info] : one.benchmarks()) profile.set_benchmark(b, info);
    for (const auto& [key, c] : one.records()) profile.add(key.first, key.second, c);
    m.seeds.emplace_back(name, a.common.seed);
    err << name << ": " << count << " injections, golden " << one.benchmarks().at(name).golden_cycles
        << " cycles\n";
  }
  std::ostringstream report;
  m.write(report);
  write_profile(report, profile);
  emit(a.common.out, report.str(), out);
  if (!a.design_out.empty()) {
    std::ostringstream d;
    m.write(d);
    write_design(d, design);
    emit(a.design_out, d.str(), out);
  }
  return kSuccess;
}

// ---- plan-parity ----------------------------------------------------------

struct PlanArgs {
  Common common;
  std::string heuristic = "optimized";
  std::size_t group_size = 32;
  std::string assignment;
};

int cmd_plan(const PlanArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  RunManifest m = make_manifest(sub);
  const auto in = load_inputs(a.common, m);
  const auto heuristic = parse_parity_heuristic(a.heuristic);
  if (!heuristic) throw InputError("unknown parity heuristic '" + a.heuristic + "'");
  std::vector<FfId> ffs;
  if (!a.assignment.empty()) {
    const auto text = read_file(a.assignment, "assignment");
    std::istringstream s(text);
    const auto assignment = parse_assignment(s, a.assignment);
    m.add_input("assignment", a.assignment, text);
    for (const auto& [ff, id] : assignment.per_ff) {
      if (id == tech::kParity) ffs.push_back(ff);
    }
  } else {
    for (const auto& ff : in.design->flip_flops()) ffs.push_back(ff.id);
  }
  if (*heuristic == ParityHeuristic::vulnerability && !in.profile) {
    throw InputError("the vulnerability heuristic needs --profile");
  }
  const auto plan = *heuristic == ParityHeuristic::optimized
                        ? optimized_plan(*in.design, ffs, *in.library)
                        : plan_parity(*in.design, ffs, in.profile ? &*in.profile : nullptr, *heuristic,
                                      a.group_size, *in.library);
  const auto spacing = check_spacing(plan, *in.design);
  std::size_t pipelined = 0;
  for (const auto& g : plan.groups) pipelined += g.pipelined ? 1 : 0;
  err << plan.groups.size() << " groups (" << pipelined << " pipelined) over " << plan.protected_count()
      << " flip-flops; area " << text::format_double(plan.cost.area * 100.0) << "%, power "
      << text::format_double(plan.cost.power * 100.0) << "%; " << spacing.violations.size()
      << " spacing violations\n";
  std::ostringstream report;
  m.write(report);
  write_plan(report, plan);
  emit(a.common.out, report.str(), out);
  return kSuccess;
}

// ---- select ---------------------------------------------------------------

struct SelectArgs {
  Common common;
  std::optional<std::string> target_sdc;
  std::optional<std::string> target_due;
  std::string recovery{recovery::kNone};
  std::vector<std::string> techniques{std::string(tech::kLeapDice), std::string(tech::kParity)};
  std::vector<std::string> high_level;
  std::string abft = "none";
  std::string report;
};

int cmd_select(const SelectArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  RunManifest m = make_manifest(sub);
  const auto in = load_inputs(a.common, m);
  m.seeds.emplace_back("coverage", a.common.seed);
  Targets targets;
  if (a.target_sdc) targets.sdc = parse_target(*a.target_sdc);
  if (a.target_due) targets.due = parse_target(*a.target_due);
  if (!targets.sdc && !targets.due) throw InputError("give --target-sdc and/or --target-due");
  SelectOptions options;
  options.per_ff = technique_set(a.techniques, *in.library);
  const auto base =
      make_base(a.recovery, a.high_level, a.abft, a.common.seed, *in.design, *in.profile, *in.library);
  const auto result = select_to_target(*in.design, *in.profile, *in.library, targets, base, options);

  std::ostringstream csv;
  m.write(csv);
  csv << kCostReportHeader << ",feasible,protected_ffs\n"
      << cost_report_row(result.report) << ',' << (result.feasible ? 1 : 0) << ','
      << result.assignment.per_ff.size() << "\n";
  if (!a.common.out.empty()) {
    std::ostringstream assignment;
    m.write(assignment);
    write_assignment(assignment, result.assignment);
    emit(a.common.out, assignment.str(), out);
  }
  emit(a.report, csv.str(), out);
  err << result.assignment.per_ff.size() << " flip-flops protected; SDC "
      << format_improvement(result.report.sdc_improvement) << "x, DUE "
      << format_improvement(result.report.due_improvement) << "x, energy "
      << text::format_double(result.report.energy * 100.0) << "%\n";
  if (!result.feasible) {
    err << "infeasible: " << result.message << "\n";
    return kInfeasible;
  }
  return kSuccess;
}

// ---- explore --------------------------------------------------------------

struct ExploreArgs {
  Common common;
  std::vector<std::string> targets{"2", "5", "50", "500", "max"};
  std::vector<std::string> kinds{"sdc", "due"};
  std::string plot;
};

int cmd_explore(const ExploreArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  RunManifest m = make_manifest(sub);
  const auto in = load_inputs(a.common, m);
  m.seeds.emplace_back("coverage", a.common.seed);
  ExploreOptions options;
  options.targets.clear();
  for (const auto& t : a.targets) options.targets.push_back(parse_target(t));
  options.kinds.clear();
  for (const auto& k : a.kinds) options.kinds.push_back(parse_kind(k));
  options.coverage_seed = a.common.seed;
  options.workers = a.common.workers;
  const auto combos = enumerate_combinations(in.design->core_kind());
  const auto points = explore(combos, *in.design, *in.profile, *in.library, options);

  std::ostringstream csv;
  m.write(csv);
  write_explore_csv(csv, points);
  emit(a.common.out, csv.str(), out);

  std::ostringstream plot;
  m.write(plot);
  for (const auto kind : options.kinds) {
    const auto front = frontier_of(points, kind);
    err << to_string(kind) << " frontier: " << front.size() << " points\n";
    if (front.empty()) continue;
    write_plot_data(plot, bound_region(front), std::string(to_string(kind)) + " bound");
    plot << "\n\n";
  }
  if (!a.plot.empty()) emit(a.plot, plot.str(), out);
  err << combos.size() << " combinations, " << points.size() << " evaluated points\n";
  return kSuccess;
}

// ---- depend ---------------------------------------------------------------

struct DependArgs {
  Common common;
  std::size_t train_k = 4;
  std::size_t trials = 50;
  std::vector<std::string> targets{"5", "10", "20", "30", "40", "50", "500", "max"};
  std::vector<std::string> kinds{"sdc", "due"};
  std::string recovery{recovery::kNone};
  std::vector<std::string> techniques{std::string(tech::kLeapDice), std::string(tech::kParity)};
  std::vector<std::string> high_level;
  std::string abft = "none";
  bool no_lhl = false;
  std::size_t permutations = 10'000;
  std::string deciles;
};

int cmd_depend(const DependArgs& a, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  RunManifest m = make_manifest(sub);
  const auto in = load_inputs(a.common, m);
  m.seeds.emplace_back("splits", a.common.seed);
  m.seeds.emplace_back("permutations", a.common.seed);
  m.seeds.emplace_back("coverage", a.common.seed);
  const auto splits = make_splits(in.profile->benchmark_names(), a.train_k, a.trials, a.common.seed);
  DependenceOptions options;
  options.base = make_base(a.recovery, a.high_level, a.abft, a.common.seed, *in.design, *in.profile, *in.library);
  options.per_ff = technique_set(a.techniques, *in.library);
  options.lhl = !a.no_lhl;
  options.permutations = a.permutations;
  options.permutation_seed = a.common.seed;
  options.workers = a.common.workers;

  std::vector<DependenceReport> reports;
  bool any_empty = false;
  for (const auto& k : a.kinds) {
    for (const auto& t : a.targets) {
      const auto kind = parse_kind(k);
      const double target = parse_target(t);
      reports.push_back(trained_vs_validated(*in.design, *in.profile, *in.library, splits, target, kind, options));
      const auto& r = reports.back();
      err << target_label(kind, target) << ": " << r.feasible_trials << "/" << r.trials.size()
          << " trials feasible, underestimate " << text::format_double(r.underestimate * 100.0) << "%, p "
          << format_improvement(r.p_value) << "\n";
      for (const auto& trial : r.trials) {
        if (!trial.feasible) err << "  trial " << trial.index << " flagged: " << trial.message << "\n";
      }
      any_empty = any_empty || r.feasible_trials == 0;
    }
  }
  std::ostringstream csv;
  m.write(csv);
  write_dependence_csv(csv, reports);
  emit(a.common.out, csv.str(), out);
  if (!a.deciles.empty()) {
    std::ostringstream d;
    m.write(d);
    write_decile_csv(d, decile_similarity(*in.profile));
    emit(a.deciles, d.str(), out);
  }
  return any_empty ? kInfeasible : kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-layer soft-error resilience exploration", "resilex"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("resilex ") + RESILEX_VERSION);

  InjectArgs inj;
  auto* inject = app.add_subcommand("inject", "Run a fault-injection campaign on the toy core");
  add_common(inject, inj.common, false, false);
  inject->add_option("--benchmark", inj.benchmarks, "Bundled benchmark(s), or 'all'")->required()->delimiter(',');
  auto* count = inject->add_option("--count", inj.count, "Injections per benchmark (default 1000)");
  auto* margin = inject->add_option("--margin", inj.margin, "Error margin; derives the injection count");
  count->excludes(margin);
  inject->add_option("--confidence", inj.confidence, "Confidence level for --margin")->capture_default_str();
  inject->add_option("--worst-p", inj.worst_p, "Worst-case proportion for --margin")->capture_default_str();
  inject->add_option("--hooks", inj.hooks, "Detection hooks to enable (e.g. abft)")->delimiter(',');
  inject->add_option("--hang-multiplier", inj.hang_multiplier, "Hang threshold in golden run lengths")
      ->capture_default_str();
  inject->add_option("--design-out", inj.design_out, "Also write the injected design");

  PlanArgs pl;
  auto* plan = app.add_subcommand("plan-parity", "Group flip-flops into parity groups");
  add_common(plan, pl.common, true, false);
  plan->add_option("--heuristic", pl.heuristic, "size | vulnerability | locality | timing | optimized")
      ->capture_default_str();
  plan->add_option("--group-size", pl.group_size, "Group size for fixed heuristics (power of two <= 32)")
      ->capture_default_str();
  plan->add_option("--assignment", pl.assignment, "Plan only the parity flip-flops of this assignment");

  SelectArgs se;
  auto* select = app.add_subcommand("select", "Select protection meeting improvement targets");
  add_common(select, se.common, true, true);
  select->add_option("--target-sdc", se.target_sdc, "SDC improvement target (number or 'max')");
  select->add_option("--target-due", se.target_due, "DUE improvement target (number or 'max')");
  select->add_option("--recovery", se.recovery, "Recovery: none | flush | rob | ir | eir")->capture_default_str();
  select->add_option("--techniques", se.techniques, "Per-flip-flop techniques the selector may use")
      ->delimiter(',')
      ->capture_default_str();
  select->add_option("--high-level", se.high_level, "Architecture/software techniques applied design-wide")
      ->delimiter(',');
  select->add_option("--abft", se.abft, "ABFT mode: none | correction | detection")->capture_default_str();
  select->add_option("--report", se.report, "Cost CSV output ('-' or unset for stdout)");

  ExploreArgs ex;
  auto* explore_cmd = app.add_subcommand("explore", "Evaluate every cross-layer combination");
  add_common(explore_cmd, ex.common, true, true);
  explore_cmd->add_option("--targets", ex.targets, "Target grid")->delimiter(',')->capture_default_str();
  explore_cmd->add_option("--kinds", ex.kinds, "Error kinds to target")->delimiter(',')->capture_default_str();
  explore_cmd->add_option("--plot", ex.plot, "Frontier plot data output");

  DependArgs de;
  auto* depend = app.add_subcommand("depend", "Trained vs validated improvement over benchmark splits");
  add_common(depend, de.common, true, true);
  depend->add_option("--train-k", de.train_k, "Training benchmarks per trial")->capture_default_str();
  depend->add_option("--trials", de.trials, "Training/validation splits")->capture_default_str();
  depend->add_option("--targets", de.targets, "Target grid")->delimiter(',')->capture_default_str();
  depend->add_option("--kinds", de.kinds, "Error kinds to target")->delimiter(',')->capture_default_str();
  depend->add_option("--recovery", de.recovery, "Recovery: none | flush | rob | ir | eir")->capture_default_str();
  depend->add_option("--techniques", de.techniques, "Per-flip-flop techniques; 'none' for high-level only")
      ->delimiter(',')
      ->capture_default_str();
  depend->add_option("--high-level", de.high_level, "Architecture/software techniques applied design-wide")
      ->delimiter(',');
  depend->add_option("--abft", de.abft, "ABFT mode: none | correction | detection")->capture_default_str();
  depend->add_flag("--no-lhl", de.no_lhl, "Skip the LHL fallback column");
  depend->add_option("--permutations", de.permutations, "Permutations of the sign-flip test")
      ->capture_default_str();
  depend->add_option("--deciles", de.deciles, "Decile similarity CSV output");

  std::vector<const char*> argv{"resilex"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputError;
  }

  try {
    if (*inject) return cmd_inject(inj, inject, out, err);
    if (*plan) return cmd_plan(pl, plan, out, err);
    if (*select) return cmd_select(se, select, out, err);
    if (*explore_cmd) return cmd_explore(ex, explore_cmd, out, err);
    if (de.techniques == std::vector<std::string>{"none"}) de.techniques.clear();
    return cmd_depend(de, depend, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace resilex::cli
