#include "resilex/technique.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace resilex {

namespace detail {
extern const std::string_view kDefaultLibraryText;
}

using nlohmann::json;

std::string_view to_string(Layer layer) {
  switch (layer) {
    case Layer::circuit: return "circuit";
    case Layer::logic: return "logic";
    case Layer::architecture: return "architecture";
    case Layer::software: return "software";
    case Layer::algorithm: return "algorithm";
  }
  return "?";
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::harden: return "harden";
    case Mode::detect: return "detect";
    case Mode::detect_and_correct: return "detect_and_correct";
  }
  return "?";
}

std::string_view to_string(ErrorKind kind) { return kind == ErrorKind::SDC ? "SDC" : "DUE"; }

std::optional<Layer> parse_layer(std::string_view text) {
  for (auto l : {Layer::circuit, Layer::logic, Layer::architecture, Layer::software, Layer::algorithm}) {
    if (to_string(l) == text) return l;
  }
  return std::nullopt;
}

std::optional<Mode> parse_mode(std::string_view text) {
  for (auto m : {Mode::harden, Mode::detect, Mode::detect_and_correct}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

const CoreFigures& TechniqueSpec::on(CoreKind core) const {
  auto it = cores.find(core);
  if (it == cores.end()) {
    throw std::invalid_argument("technique '" + id + "' does not apply to the " + std::string(to_string(core)) +
                                " core");
  }
  return it->second;
}

const RecoveryFigures& RecoverySpec::on(CoreKind core) const {
  auto it = cores.find(core);
  if (it == cores.end()) {
    throw std::invalid_argument("recovery '" + id + "' is not available on the " + std::string(to_string(core)) +
                                " core");
  }
  return it->second;
}

void TechniqueLibrary::add(TechniqueSpec spec) {
  auto id = spec.id;
  techniques_[id] = std::move(spec);
}

void TechniqueLibrary::add(RecoverySpec spec) {
  auto id = spec.id;
  recoveries_[id] = std::move(spec);
}

const TechniqueSpec& TechniqueLibrary::technique(std::string_view id) const {
  auto it = techniques_.find(std::string(id));
  if (it == techniques_.end()) throw std::invalid_argument("unknown technique '" + std::string(id) + "'");
  return it->second;
}

const RecoverySpec& TechniqueLibrary::recovery(std::string_view id) const {
  auto it = recoveries_.find(std::string(id));
  if (it == recoveries_.end()) throw std::invalid_argument("unknown recovery '" + std::string(id) + "'");
  return it->second;
}

const CostModel& TechniqueLibrary::cost_model(CoreKind core) const {
  auto it = cost_models_.find(core);
  if (it == cost_models_.end()) {
    throw std::invalid_argument("library has no cost model for the " + std::string(to_string(core)) + " core");
  }
  return it->second;
}

namespace {

void check_fraction(double v, const std::string& what) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(what + " must lie in [0, 1], got " + std::to_string(v));
}

void check_nonneg(double v, const std::string& what) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(what + " must be a finite value >= 0");
}

void check_cell(const CellCost& c, const std::string& what) {
  for (double v : {c.area, c.power, c.delay, c.energy}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(what + ": cell multipliers must be positive");
  }
}

bool known_recovery_id(std::string_view id) {
  return id == recovery::kNone || id == recovery::kFlush || id == recovery::kRob || id == recovery::kIr ||
         id == recovery::kEir;
}

}  // namespace

void TechniqueLibrary::validate() const {
  for (const auto& [core, m] : cost_models_) {
    const std::string what = "cost model " + std::string(to_string(core));
    if (!(m.ff_area_share > 0.0 && m.ff_area_share <= 1.0)) throw std::invalid_argument(what + ": ff_area_share out of (0, 1]");
    if (!(m.ff_power_share > 0.0 && m.ff_power_share <= 1.0)) throw std::invalid_argument(what + ": ff_power_share out of (0, 1]");
  }
  for (double v : {parity_.xor2_area, parity_.xor2_power, parity_.register_area, parity_.register_power,
                   parity_.group_area, parity_.group_power}) {
    check_nonneg(v, "parity constant");
  }
  if (parity_.pipelined_size == 0 || parity_.unpipelined_size == 0) {
    throw std::invalid_argument("parity group sizes must be positive");
  }

  for (const auto& [id, t] : techniques_) {
    const std::string what = "technique '" + id + "'";
    if (t.cores.empty()) throw std::invalid_argument(what + " applies to no core");
    check_fraction(t.ser_scale, what + " ser_scale");
    check_fraction(t.economy_ser_scale, what + " economy_ser_scale");
    check_fraction(t.false_positive, what + " false_positive");
    check_nonneg(t.latency_cycles, what + " latency_cycles");
    if (t.cell) check_cell(*t.cell, what);
    if (t.economy_cell) check_cell(*t.economy_cell, what + " economy");
    if (t.mode == Mode::harden && !t.recoveries.empty()) {
      throw std::invalid_argument(what + ": harden-mode techniques take no recovery pairing");
    }
    if (t.mode == Mode::harden && !t.cell) throw std::invalid_argument(what + ": harden-mode technique needs a cell");
    for (const auto& r : t.recoveries) {
      if (!known_recovery_id(r)) throw std::invalid_argument(what + ": unknown recovery id '" + r + "'");
    }
    for (const auto& [core, f] : t.cores) {
      const std::string w = what + " on " + std::string(to_string(core));
      check_nonneg(f.area, w + " area");
      check_nonneg(f.power, w + " power");
      check_nonneg(f.exec, w + " exec");
      check_nonneg(f.ff_increase, w + " ff_increase");
      check_nonneg(f.per_ff_area, w + " per_ff_area");
      check_nonneg(f.per_ff_power, w + " per_ff_power");
      check_fraction(f.sdc.covered, w + " sdc coverage");
      check_fraction(f.sdc.firing, w + " sdc firing probability");
      check_fraction(f.due.covered, w + " due coverage");
      check_fraction(f.due.firing, w + " due firing probability");
    }
  }
  for (const auto& [id, r] : recoveries_) {
    const std::string what = "recovery '" + id + "'";
    if (!known_recovery_id(id)) throw std::invalid_argument("unknown recovery id '" + id + "'");
    for (const auto& [core, f] : r.cores) {
      const std::string w = what + " on " + std::string(to_string(core));
      check_nonneg(f.area, w + " area");
      check_nonneg(f.power, w + " power");
      check_nonneg(f.energy, w + " energy");
      check_nonneg(f.latency_cycles, w + " latency");
      check_nonneg(f.ff_increase, w + " ff_increase");
      const bool bounded = id == recovery::kFlush || id == recovery::kRob;
      if (bounded && f.unrecoverable.empty()) throw std::invalid_argument(w + ": needs an unrecoverable-stage rule");
      const bool replay = id == recovery::kIr || id == recovery::kEir;
      if (replay && !f.unrecoverable.empty()) throw std::invalid_argument(w + ": replay recovers every stage");
    }
  }
  for (const auto& [id, t] : techniques_) {
    for (const auto& r : t.recoveries) {
      if (!recoveries_.contains(r)) {
        throw std::invalid_argument("technique '" + id + "' pairs with undefined recovery '" + r + "'");
      }
    }
  }
}

namespace {

std::optional<CoreKind> core_key(const std::string& key) { return parse_core_kind(key); }

double num(const json& j, const char* key, double fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw ParseError(std::string("field '") + key + "' must be a number");
  return it->get<double>();
}

std::string str(const json& j, const char* key, bool required = true) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (required) throw ParseError(std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

CellCost cell_from(const json& j) {
  if (!j.is_object()) throw ParseError("cell must be an object");
  CellCost c;
  c.area = num(j, "area", 1.0);
  c.power = num(j, "power", 1.0);
  c.delay = num(j, "delay", 1.0);
  c.energy = num(j, "energy", 1.0);
  return c;
}

Coverage coverage_from(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) return {};
  Coverage c;
  c.covered = num(*it, "covered", 0.0);
  c.firing = num(*it, "firing", 0.0);
  return c;
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (auto a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ParseError(where + ": unknown field '" + it.key() + "'");
  }
}

TechniqueSpec technique_from(const json& j) {
  if (!j.is_object()) throw ParseError("technique entry must be an object");
  TechniqueSpec t;
  t.id = str(j, "id");
  const std::string where = "technique '" + t.id + "'";
  check_keys(j,
             {"id", "name", "layer", "mode", "per_ff", "cell", "ser_scale", "economy_cell", "economy_ser_scale",
              "cores", "latency_cycles", "false_positive", "recoveries", "benchmark_conditional", "source"},
             where);
  t.name = str(j, "name", false);
  const auto layer = parse_layer(str(j, "layer"));
  if (!layer) throw ParseError(where + ": unknown layer '" + str(j, "layer") + "'");
  t.layer = *layer;
  const auto mode = parse_mode(str(j, "mode"));
  if (!mode) throw ParseError(where + ": unknown mode '" + str(j, "mode") + "'");
  t.mode = *mode;
  t.per_ff = j.value("per_ff", false);
  if (j.contains("cell")) t.cell = cell_from(j["cell"]);
  t.ser_scale = num(j, "ser_scale", 1.0);
  if (j.contains("economy_cell")) t.economy_cell = cell_from(j["economy_cell"]);
  t.economy_ser_scale = num(j, "economy_ser_scale", 1.0);
  t.latency_cycles = num(j, "latency_cycles", 0.0);
  t.false_positive = num(j, "false_positive", 0.0);
  t.benchmark_conditional = j.value("benchmark_conditional", false);
  t.source = str(j, "source", false);
  if (j.contains("recoveries")) {
    for (const auto& r : j["recoveries"]) {
      if (!r.is_string()) throw ParseError(where + ": recovery ids must be strings");
      t.recoveries.insert(r.get<std::string>());
    }
  }
  if (!j.contains("cores") || !j["cores"].is_object()) throw ParseError(where + ": missing 'cores' object");
  for (auto it = j["cores"].begin(); it != j["cores"].end(); ++it) {
    const auto core = core_key(it.key());
    if (!core) throw ParseError(where + ": unknown core kind '" + it.key() + "'");
    const auto& c = it.value();
    check_keys(c, {"area", "power", "exec", "ff_increase", "sdc", "due", "per_ff_area", "per_ff_power"},
               where + " core " + it.key());
    CoreFigures f;
    f.area = num(c, "area", 0.0);
    f.power = num(c, "power", 0.0);
    f.exec = num(c, "exec", 0.0);
    f.ff_increase = num(c, "ff_increase", 0.0);
    f.per_ff_area = num(c, "per_ff_area", 0.0);
    f.per_ff_power = num(c, "per_ff_power", 0.0);
    f.sdc = coverage_from(c, "sdc");
    f.due = coverage_from(c, "due");
    t.cores[*core] = f;
  }
  return t;
}

RecoverySpec recovery_from(const json& j) {
  if (!j.is_object()) throw ParseError("recovery entry must be an object");
  RecoverySpec r;
  r.id = str(j, "id");
  const std::string where = "recovery '" + r.id + "'";
  check_keys(j, {"id", "name", "cores", "source"}, where);
  r.name = str(j, "name", false);
  r.source = str(j, "source", false);
  if (!j.contains("cores") || !j["cores"].is_object()) throw ParseError(where + ": missing 'cores' object");
  for (auto it = j["cores"].begin(); it != j["cores"].end(); ++it) {
    const auto core = core_key(it.key());
    if (!core) throw ParseError(where + ": unknown core kind '" + it.key() + "'");
    const auto& c = it.value();
    check_keys(c, {"area", "power", "energy", "latency_cycles", "ff_increase", "unrecoverable"},
               where + " core " + it.key());
    RecoveryFigures f;
    f.area = num(c, "area", 0.0);
    f.power = num(c, "power", 0.0);
    f.energy = num(c, "energy", 0.0);
    f.latency_cycles = num(c, "latency_cycles", 0.0);
    f.ff_increase = num(c, "ff_increase", 0.0);
    if (c.contains("unrecoverable")) {
      for (const auto& s : c["unrecoverable"]) {
        const auto stage = s.is_string() ? parse_stage(s.get<std::string>()) : std::nullopt;
        if (!stage) throw ParseError(where + ": unknown stage tag " + s.dump());
        f.unrecoverable.insert(*stage);
      }
    }
    r.cores[*core] = f;
  }
  return r;
}

json cell_to(const CellCost& c) {
  return json{{"area", c.area}, {"power", c.power}, {"delay", c.delay}, {"energy", c.energy}};
}

json coverage_to(const Coverage& c) { return json{{"covered", c.covered}, {"firing", c.firing}}; }

}  // namespace

TechniqueLibrary parse_library(std::string_view text, std::string_view source_name) {
  const std::string src(source_name);
  json root;
  try {
    root = json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ParseError(src + ": " + e.what());
  }
  TechniqueLibrary lib;
  try {
    if (!root.is_object()) throw ParseError("top level must be an object");
    check_keys(root, {"schema", "cost_model", "parity", "techniques", "recoveries"}, "library");
    if (root.value("schema", 0) != 1) throw ParseError("unsupported schema version");
    if (root.contains("cost_model")) {
      for (auto it = root["cost_model"].begin(); it != root["cost_model"].end(); ++it) {
        const auto core = core_key(it.key());
        if (!core) throw ParseError("cost_model: unknown core kind '" + it.key() + "'");
        lib.set_cost_model(*core, CostModel{num(it.value(), "ff_area_share", 0.0),
                                            num(it.value(), "ff_power_share", 0.0)});
      }
    }
    if (root.contains("parity")) {
      const auto& p = root["parity"];
      check_keys(p,
                 {"xor2_area", "xor2_power", "register_area", "register_power", "group_area", "group_power",
                  "unpipelined_size", "pipelined_size"},
                 "parity");
      ParityConstants pc;
      pc.xor2_area = num(p, "xor2_area", pc.xor2_area);
      pc.xor2_power = num(p, "xor2_power", pc.xor2_power);
      pc.register_area = num(p, "register_area", pc.register_area);
      pc.register_power = num(p, "register_power", pc.register_power);
      pc.group_area = num(p, "group_area", pc.group_area);
      pc.group_power = num(p, "group_power", pc.group_power);
      pc.unpipelined_size = p.value("unpipelined_size", pc.unpipelined_size);
      pc.pipelined_size = p.value("pipelined_size", pc.pipelined_size);
      lib.set_parity(pc);
    }
    for (const auto& t : root.value("techniques", json::array())) lib.add(technique_from(t));
    for (const auto& r : root.value("recoveries", json::array())) lib.add(recovery_from(r));
  } catch (const ParseError& e) {
    throw ParseError(src + ": " + e.what());
  } catch (const json::exception& e) {
    throw ParseError(src + ": " + e.what());
  }
  try {
    lib.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(src + ": " + e.what());
  }
  return lib;
}

TechniqueLibrary load_library(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open library file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_library(buf.str(), path);
}

std::string_view default_library_text() { return detail::kDefaultLibraryText; }

const TechniqueLibrary& default_library() {
  static const TechniqueLibrary lib = parse_library(detail::kDefaultLibraryText, "<bundled library>");
  return lib;
}

std::string serialize_library(const TechniqueLibrary& library) {
  json root;
  root["schema"] = 1;
  json cm = json::object();
  for (const auto& [core, m] : library.cost_models()) {
    cm[std::string(to_string(core))] = {{"ff_area_share", m.ff_area_share}, {"ff_power_share", m.ff_power_share}};
  }
  root["cost_model"] = cm;
  const auto& p = library.parity();
  root["parity"] = {{"xor2_area", p.xor2_area},         {"xor2_power", p.xor2_power},
                    {"register_area", p.register_area}, {"register_power", p.register_power},
                    {"group_area", p.group_area},       {"group_power", p.group_power},
                    {"unpipelined_size", p.unpipelined_size}, {"pipelined_size", p.pipelined_size}};
  json techniques = json::array();
  for (const auto& [id, t] : library.techniques()) {
    json j;
    j["id"] = t.id;
    j["name"] = t.name;
    j["layer"] = to_string(t.layer);
    j["mode"] = to_string(t.mode);
    j["per_ff"] = t.per_ff;
    if (t.cell) j["cell"] = cell_to(*t.cell);
    j["ser_scale"] = t.ser_scale;
    if (t.economy_cell) j["economy_cell"] = cell_to(*t.economy_cell);
    j["economy_ser_scale"] = t.economy_ser_scale;
    json cores = json::object();
    for (const auto& [core, f] : t.cores) {
      cores[std::string(to_string(core))] = {{"area", f.area},
                                             {"power", f.power},
                                             {"exec", f.exec},
                                             {"ff_increase", f.ff_increase},
                                             {"per_ff_area", f.per_ff_area},
                                             {"per_ff_power", f.per_ff_power},
                                             {"sdc", coverage_to(f.sdc)},
                                             {"due", coverage_to(f.due)}};
    }
    j["cores"] = cores;
    j["latency_cycles"] = t.latency_cycles;
    j["false_positive"] = t.false_positive;
    j["recoveries"] = t.recoveries;
    j["benchmark_conditional"] = t.benchmark_conditional;
    j["source"] = t.source;
    techniques.push_back(std::move(j));
  }
  root["techniques"] = techniques;
  json recoveries = json::array();
  for (const auto& [id, r] : library.recoveries()) {
    json j;
    j["id"] = r.id;
    j["name"] = r.name;
    json cores = json::object();
    for (const auto& [core, f] : r.cores) {
      json stages = json::array();
      for (auto s : f.unrecoverable) stages.push_back(to_string(s));
      cores[std::string(to_string(core))] = {{"area", f.area},
                                             {"power", f.power},
                                             {"energy", f.energy},
                                             {"latency_cycles", f.latency_cycles},
                                             {"ff_increase", f.ff_increase},
                                             {"unrecoverable", stages}};
    }
    j["cores"] = cores;
    j["source"] = r.source;
    recoveries.push_back(std::move(j));
  }
  root["recoveries"] = recoveries;
  return root.dump(2) + "\n";
}

double compose_energy(double power_delta, double exec_delta) {
  // Expanded form of (1 + p)(1 + e) - 1, exact when either term is zero.
  return power_delta + exec_delta + power_delta * exec_delta;
}

ResidualRates residual_rates(const TechniqueSpec& tech, CoreKind core, ErrorKind kind, bool covered,
                             bool abft_benchmark) {
  const auto& figures = tech.on(core);
  if (tech.mode == Mode::harden) {
    const bool economy = abft_benchmark && tech.economy_cell.has_value();
    return {economy ? tech.economy_ser_scale : tech.ser_scale, 0.0};
  }
  if (!covered) return {1.0, 0.0};
  const double p = kind == ErrorKind::SDC ? figures.sdc.firing : figures.due.firing;
  return {1.0 - p, p};
}

bool recovery_reach(const RecoverySpec& recovery, CoreKind core, const FlipFlop& ff) {
  return !recovery.on(core).unrecoverable.contains(ff.stage);
}

}  // namespace resilex
