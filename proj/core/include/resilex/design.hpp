#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace resilex {

using FfId = std::int64_t;

/// Thrown for malformed input files. The message names the offending line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CoreKind { InO, OoO };

// Order matters: stages compare by pipeline position. `other` is not part of
// the pipeline order and never lies beyond a recovery boundary.
enum class Stage {
  fetch,
  decode,
  execute,
  memory,
  exception,
  writeback,
  post_commit,
  other,
};

inline constexpr std::array<Stage, 8> kAllStages = {
    Stage::fetch,     Stage::decode,    Stage::execute,     Stage::memory,
    Stage::exception, Stage::writeback, Stage::post_commit, Stage::other};

std::string_view to_string(CoreKind kind);
std::string_view to_string(Stage stage);
std::optional<CoreKind> parse_core_kind(std::string_view text);
std::optional<Stage> parse_stage(std::string_view text);

/// First stage whose flip-flops a flush (InO) or reorder-buffer (OoO)
/// recovery can no longer restore.
Stage default_recovery_boundary(CoreKind kind);

struct FlipFlop {
  FfId id = 0;
  std::string structure;
  Stage stage = Stage::other;
  double x = 0.0;
  double y = 0.0;
  double slack_ps = 0.0;

  bool operator==(const FlipFlop&) const = default;
};

double distance(const FlipFlop& a, const FlipFlop& b);

/// The protectable state of a core: every flip-flop with its placement and
/// timing slack. Immutable once built; constructors validate invariants.
class Design {
 public:
  Design(CoreKind core_kind, std::vector<FlipFlop> flip_flops, double xor2_delay_ps,
         std::optional<Stage> recovery_boundary = std::nullopt);

  CoreKind core_kind() const { return core_kind_; }
  double xor2_delay_ps() const { return xor2_delay_ps_; }
  Stage recovery_boundary() const { return recovery_boundary_; }
  std::span<const FlipFlop> flip_flops() const { return flip_flops_; }
  std::size_t size() const { return flip_flops_.size(); }

  const FlipFlop& at(FfId id) const;
  bool contains(FfId id) const { return index_.contains(id); }

  /// True when flush/RoB recovery cannot restore an error in this stage.
  bool beyond_recovery_boundary(Stage stage) const;

  /// Delay of a balanced XOR tree over `inputs` signals.
  double xor_tree_delay_ps(std::size_t inputs) const;

  bool operator==(const Design& other) const;

 private:
  CoreKind core_kind_;
  std::vector<FlipFlop> flip_flops_;
  double xor2_delay_ps_;
  Stage recovery_boundary_;
  std::unordered_map<FfId, std::size_t> index_;
};

/// Reads the line-oriented design format:
///
///   #! core_kind=InO
///   #! xor2_delay_ps=20
///   id,structure,stage,x,y,slack_ps
///   0,if.pc,fetch,0,0,85.5
///
/// `#!` lines carry design-level directives, other `#` lines are comments.
Design parse_design(std::istream& in, std::string_view source_name = "<design>");
Design load_design(const std::string& path);
void write_design(std::ostream& out, const Design& design);
std::string serialize_design(const Design& design);

/// Nearest-neighbour spacing, bucketed in flip-flop lengths as
/// [0,1), [1,2), [2,3), [3,4), [4,inf).
struct SpacingHistogram {
  static constexpr std::size_t kBuckets = 5;
  std::array<std::size_t, kBuckets> counts{};
  std::size_t total = 0;

  double fraction(std::size_t bucket) const;
  static std::size_t bucket_of(double distance);
  static std::string_view label(std::size_t bucket);
};

/// Histogram of each flip-flop's distance to its nearest neighbour.
/// Throws std::invalid_argument for fewer than two flip-flops.
SpacingHistogram neighbor_spacing_histogram(const Design& design);

/// Same histogram over an arbitrary point subset (used for parity groups).
SpacingHistogram neighbor_spacing_histogram(std::span<const FlipFlop> flip_flops);

}  // namespace resilex
