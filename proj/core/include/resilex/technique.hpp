#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "resilex/design.hpp"

namespace resilex {

enum class Layer { circuit, logic, architecture, software, algorithm };
enum class Mode { harden, detect, detect_and_correct };
enum class ErrorKind { SDC, DUE };

std::string_view to_string(Layer layer);
std::string_view to_string(Mode mode);
std::string_view to_string(ErrorKind kind);
std::optional<Layer> parse_layer(std::string_view text);
std::optional<Mode> parse_mode(std::string_view text);

// Well-known technique and recovery ids of the bundled library.
namespace tech {
inline constexpr std::string_view kLeapDice = "leap_dice";
inline constexpr std::string_view kLhl = "lhl";
inline constexpr std::string_view kLeapCtrl = "leap_ctrl";
inline constexpr std::string_view kEds = "eds";
inline constexpr std::string_view kParity = "parity";
inline constexpr std::string_view kDfc = "dfc";
inline constexpr std::string_view kMonitor = "monitor";
inline constexpr std::string_view kAssertions = "assertions";
inline constexpr std::string_view kCfcss = "cfcss";
inline constexpr std::string_view kEddi = "eddi";
inline constexpr std::string_view kEddiNoReadback = "eddi_nosrb";
inline constexpr std::string_view kAbftCorrection = "abft_correction";
inline constexpr std::string_view kAbftDetection = "abft_detection";
}  // namespace tech

namespace recovery {
inline constexpr std::string_view kNone = "none";
inline constexpr std::string_view kFlush = "flush";
inline constexpr std::string_view kRob = "rob";
inline constexpr std::string_view kIr = "ir";
inline constexpr std::string_view kEir = "eir";
}  // namespace recovery

/// Per-flip-flop cell multipliers relative to a baseline flip-flop (= 1).
struct CellCost {
  double area = 1.0;
  double power = 1.0;
  double delay = 1.0;
  double energy = 1.0;
  bool operator==(const CellCost&) const = default;
};

/// Covered-FF fraction and per-error firing probability on covered FFs.
struct Coverage {
  double covered = 0.0;
  double firing = 0.0;
  bool operator==(const Coverage&) const = default;
};

/// Core-specific figures of a technique. Design-level fractions apply once;
/// per_ff_* are extra flip-flop-units per protected FF (on top of the cell).
struct CoreFigures {
  double area = 0.0;
  double power = 0.0;
  double exec = 0.0;
  double ff_increase = 0.0;
  Coverage sdc;
  Coverage due;
  double per_ff_area = 0.0;
  double per_ff_power = 0.0;
  bool operator==(const CoreFigures&) const = default;
};

struct TechniqueSpec {
  std::string id;
  std::string name;
  Layer layer = Layer::circuit;
  Mode mode = Mode::harden;
  /// Applied selectively to individual flip-flops (circuit/logic).
  bool per_ff = false;
  /// Cell multipliers (per-FF techniques other than parity).
  std::optional<CellCost> cell;
  /// Residual error-rate fraction for harden mode.
  double ser_scale = 1.0;
  /// Second operating point (LEAP-ctrl economy mode).
  std::optional<CellCost> economy_cell;
  double economy_ser_scale = 1.0;
  /// Applicability and per-core figures.
  std::map<CoreKind, CoreFigures> cores;
  double latency_cycles = 0.0;
  double false_positive = 0.0;
  /// Recoveries able to recover errors this technique detects.
  std::set<std::string> recoveries;
  /// Protection only on benchmarks that run the algorithmic variant.
  bool benchmark_conditional = false;
  std::string source;

  bool applies_to(CoreKind core) const { return cores.contains(core); }
  /// Throws std::invalid_argument when the technique does not apply.
  const CoreFigures& on(CoreKind core) const;
  bool detects() const { return mode != Mode::harden; }

  bool operator==(const TechniqueSpec&) const = default;
};

struct RecoveryFigures {
  double area = 0.0;
  double power = 0.0;
  double energy = 0.0;
  double latency_cycles = 0.0;
  double ff_increase = 0.0;
  std::set<Stage> unrecoverable;
  bool operator==(const RecoveryFigures&) const = default;
};

struct RecoverySpec {
  std::string id;
  std::string name;
  std::map<CoreKind, RecoveryFigures> cores;
  std::string source;

  bool applies_to(CoreKind core) const { return cores.contains(core); }
  const RecoveryFigures& on(CoreKind core) const;
  bool operator==(const RecoverySpec&) const = default;
};

/// Share of the baseline design's area/power taken by its flip-flops; one
/// flip-flop unit costs share / flip-flop count of the design.
struct CostModel {
  double ff_area_share = 0.0;
  double ff_power_share = 0.0;
  bool operator==(const CostModel&) const = default;
};

/// Parity predictor/checker constants in flip-flop units.
struct ParityConstants {
  double xor2_area = 0.45;
  double xor2_power = 0.2;
  double register_area = 1.0;
  double register_power = 1.0;
  double group_area = 2.0;
  double group_power = 2.4;
  std::size_t unpipelined_size = 32;
  std::size_t pipelined_size = 16;
  bool operator==(const ParityConstants&) const = default;
};

class TechniqueLibrary {
 public:
  TechniqueLibrary() = default;

  void add(TechniqueSpec spec);
  void add(RecoverySpec spec);
  void set_cost_model(CoreKind core, CostModel model) { cost_models_[core] = model; }
  void set_parity(ParityConstants p) { parity_ = p; }

  /// Throws std::invalid_argument naming the unknown id.
  const TechniqueSpec& technique(std::string_view id) const;
  const RecoverySpec& recovery(std::string_view id) const;
  bool has_technique(std::string_view id) const { return techniques_.contains(std::string(id)); }
  bool has_recovery(std::string_view id) const { return recoveries_.contains(std::string(id)); }
  const std::map<std::string, TechniqueSpec>& techniques() const { return techniques_; }
  const std::map<std::string, RecoverySpec>& recoveries() const { return recoveries_; }
  const CostModel& cost_model(CoreKind core) const;
  const std::map<CoreKind, CostModel>& cost_models() const { return cost_models_; }
  const ParityConstants& parity() const { return parity_; }

  /// Range and cross-reference checks; throws std::invalid_argument.
  void validate() const;

  bool operator==(const TechniqueLibrary&) const = default;

 private:
  std::map<std::string, TechniqueSpec> techniques_;
  std::map<std::string, RecoverySpec> recoveries_;
  std::map<CoreKind, CostModel> cost_models_;
  ParityConstants parity_;
};

/// Library file: JSON with `//` comments. Throws ParseError on syntax or
/// schema errors and std::invalid_argument on range violations.
TechniqueLibrary parse_library(std::string_view text, std::string_view source_name = "<library>");
TechniqueLibrary load_library(const std::string& path);
/// The bundled library compiled into the binary.
const TechniqueLibrary& default_library();
std::string_view default_library_text();
std::string serialize_library(const TechniqueLibrary& library);

/// (1 + power)(1 + exec) − 1.
double compose_energy(double power_delta, double exec_delta);

struct ResidualRates {
  double residual = 1.0;
  double detected = 0.0;
};

/// Per-error residual and detected fractions of `kind` errors at one FF.
/// `covered` says whether the FF lies in the technique's covered set (always
/// true for per-FF techniques applied to it); `abft_benchmark` selects the
/// economy operating point of dual-mode cells.
ResidualRates residual_rates(const TechniqueSpec& tech, CoreKind core, ErrorKind kind, bool covered,
                             bool abft_benchmark = false);

/// False iff the flip-flop's stage is unrecoverable for this recovery.
bool recovery_reach(const RecoverySpec& recovery, CoreKind core, const FlipFlop& ff);

}  // namespace resilex
