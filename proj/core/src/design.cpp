#include "resilex/design.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "resilex/text.hpp"

namespace resilex {

namespace {

constexpr std::string_view kDesignHeader = "id,structure,stage,x,y,slack_ps";

}  // namespace

std::string_view to_string(CoreKind kind) {
  return kind == CoreKind::InO ? "InO" : "OoO";
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::fetch: return "fetch";
    case Stage::decode: return "decode";
    case Stage::execute: return "execute";
    case Stage::memory: return "memory";
    case Stage::exception: return "exception";
    case Stage::writeback: return "writeback";
    case Stage::post_commit: return "post_commit";
    case Stage::other: return "other";
  }
  return "other";
}

std::optional<CoreKind> parse_core_kind(std::string_view text) {
  if (text == "InO" || text == "ino") return CoreKind::InO;
  if (text == "OoO" || text == "ooo") return CoreKind::OoO;
  return std::nullopt;
}

std::optional<Stage> parse_stage(std::string_view text) {
  for (Stage s : kAllStages) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

Stage default_recovery_boundary(CoreKind kind) {
  // InO: memory/exception/writeback state has reached architectural state.
  // OoO: only state past the reorder buffer is out of reach.
  return kind == CoreKind::InO ? Stage::memory : Stage::post_commit;
}

double distance(const FlipFlop& a, const FlipFlop& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

Design::Design(CoreKind core_kind, std::vector<FlipFlop> flip_flops, double xor2_delay_ps,
               std::optional<Stage> recovery_boundary)
    : core_kind_(core_kind),
      flip_flops_(std::move(flip_flops)),
      xor2_delay_ps_(xor2_delay_ps),
      recovery_boundary_(recovery_boundary.value_or(default_recovery_boundary(core_kind))) {
  if (!(xor2_delay_ps_ > 0.0) || !std::isfinite(xor2_delay_ps_)) {
    throw std::invalid_argument("xor2 delay must be a positive finite number");
  }
  if (recovery_boundary_ != default_recovery_boundary(core_kind_)) {
    throw std::invalid_argument("recovery boundary stage '" +
                                std::string(to_string(recovery_boundary_)) +
                                "' is inconsistent with core kind " +
                                std::string(to_string(core_kind_)));
  }
  index_.reserve(flip_flops_.size());
  for (std::size_t i = 0; i < flip_flops_.size(); ++i) {
    const auto& ff = flip_flops_[i];
    if (!(ff.x >= 0.0) || !(ff.y >= 0.0)) {
      throw std::invalid_argument("flip-flop " + std::to_string(ff.id) +
                                  " has a negative coordinate");
    }
    if (!(ff.slack_ps >= 0.0)) {
      throw std::invalid_argument("flip-flop " + std::to_string(ff.id) + " has negative slack");
    }
    if (!index_.emplace(ff.id, i).second) {
      throw std::invalid_argument("duplicate flip-flop id " + std::to_string(ff.id));
    }
  }
}

const FlipFlop& Design::at(FfId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown flip-flop id " + std::to_string(id));
  return flip_flops_[it->second];
}

bool Design::beyond_recovery_boundary(Stage stage) const {
  if (stage == Stage::other) return false;
  return static_cast<int>(stage) >= static_cast<int>(recovery_boundary_);
}

double Design::xor_tree_delay_ps(std::size_t inputs) const {
  if (inputs <= 1) return 0.0;
  return std::ceil(std::log2(static_cast<double>(inputs))) * xor2_delay_ps_;
}

bool Design::operator==(const Design& other) const {
  return core_kind_ == other.core_kind_ && xor2_delay_ps_ == other.xor2_delay_ps_ &&
         recovery_boundary_ == other.recovery_boundary_ && flip_flops_ == other.flip_flops_;
}

Design parse_design(std::istream& in, std::string_view source_name) {
  std::optional<CoreKind> core_kind;
  std::optional<double> xor2_delay;
  std::optional<Stage> boundary;
  std::vector<FlipFlop> ffs;
  std::map<FfId, std::size_t> seen;  // id -> line
  bool header_seen = false;

  auto fail = [&](std::size_t line_no, const std::string& what) -> ParseError {
    return ParseError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + what);
  };

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    if (line.starts_with("#!")) {
      for (const auto& [key, value] : text::parse_directives(line.substr(2))) {
        if (key == "core_kind") {
          core_kind = parse_core_kind(value);
          if (!core_kind) throw fail(line_no, "unknown core kind '" + value + "'");
        } else if (key == "xor2_delay_ps") {
          double v = 0;
          if (!text::parse_double(value, v)) throw fail(line_no, "bad xor2_delay_ps '" + value + "'");
          xor2_delay = v;
        } else if (key == "recovery_boundary") {
          boundary = parse_stage(value);
          if (!boundary) throw fail(line_no, "unknown stage tag '" + value + "'");
        } else {
          throw fail(line_no, "unknown directive '" + key + "'");
        }
      }
      continue;
    }
    if (line.front() == '#') continue;
    if (!header_seen) {
      if (line != kDesignHeader) {
        throw fail(line_no, "expected header '" + std::string(kDesignHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = text::split(line, ',');
    if (fields.size() != 6) throw fail(line_no, "expected 6 fields, got " + std::to_string(fields.size()));
    FlipFlop ff;
    if (!text::parse_int(fields[0], ff.id)) throw fail(line_no, "bad flip-flop id");
    ff.structure = std::string(fields[1]);
    if (ff.structure.empty()) throw fail(line_no, "empty structure name");
    auto stage = parse_stage(fields[2]);
    if (!stage) throw fail(line_no, "unknown stage tag '" + std::string(fields[2]) + "'");
    ff.stage = *stage;
    if (!text::parse_double(fields[3], ff.x) || !text::parse_double(fields[4], ff.y)) {
      throw fail(line_no, "bad coordinate");
    }
    if (!text::parse_double(fields[5], ff.slack_ps)) throw fail(line_no, "bad slack");
    if (!(ff.x >= 0.0) || !(ff.y >= 0.0) || !std::isfinite(ff.x) || !std::isfinite(ff.y)) {
      throw fail(line_no, "negative coordinate");
    }
    if (!(ff.slack_ps >= 0.0) || !std::isfinite(ff.slack_ps)) throw fail(line_no, "negative slack");
    if (auto [it, inserted] = seen.emplace(ff.id, line_no); !inserted) {
      throw fail(line_no, "duplicate flip-flop id " + std::to_string(ff.id) + " (first on line " +
                              std::to_string(it->second) + ")");
    }
    ffs.push_back(std::move(ff));
  }
  if (!header_seen) throw fail(line_no, "missing header line");
  if (!core_kind) throw fail(line_no, "missing '#! core_kind=' directive");
  if (!xor2_delay) throw fail(line_no, "missing '#! xor2_delay_ps=' directive");
  try {
    return Design(*core_kind, std::move(ffs), *xor2_delay, boundary);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string(source_name) + ": " + e.what());
  }
}

Design load_design(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open design file '" + path + "'");
  return parse_design(in, path);
}

void write_design(std::ostream& out, const Design& design) {
  out << "#! core_kind=" << to_string(design.core_kind()) << '\n';
  out << "#! xor2_delay_ps=" << text::format_double(design.xor2_delay_ps()) << '\n';
  out << "#! recovery_boundary=" << to_string(design.recovery_boundary()) << '\n';
  out << kDesignHeader << '\n';
  for (const auto& ff : design.flip_flops()) {
    out << ff.id << ',' << ff.structure << ',' << to_string(ff.stage) << ','
        << text::format_double(ff.x) << ',' << text::format_double(ff.y) << ','
        << text::format_double(ff.slack_ps) << '\n';
  }
}

std::string serialize_design(const Design& design) {
  std::ostringstream out;
  write_design(out, design);
  return out.str();
}

double SpacingHistogram::fraction(std::size_t bucket) const {
  return total == 0 ? 0.0 : static_cast<double>(counts.at(bucket)) / static_cast<double>(total);
}

std::size_t SpacingHistogram::bucket_of(double d) {
  if (d < 1.0) return 0;
  if (d < 2.0) return 1;
  if (d < 3.0) return 2;
  if (d < 4.0) return 3;
  return 4;
}

std::string_view SpacingHistogram::label(std::size_t bucket) {
  static constexpr std::array<std::string_view, kBuckets> labels = {"<1", "1-2", "2-3", "3-4", ">4"};
  return labels.at(bucket);
}

namespace {

// Uniform grid with unit cells; nearest-neighbour queries walk square rings
// outward until the ring's lower distance bound exceeds the best found.
class PointGrid {
 public:
  explicit PointGrid(std::span<const FlipFlop> pts) : pts_(pts) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cells_[key(cell(pts[i].x), cell(pts[i].y))].push_back(i);
      min_cx_ = std::min(min_cx_, cell(pts[i].x));
      max_cx_ = std::max(max_cx_, cell(pts[i].x));
      min_cy_ = std::min(min_cy_, cell(pts[i].y));
      max_cy_ = std::max(max_cy_, cell(pts[i].y));
    }
  }

  double nearest(std::size_t i) const {
    const auto cx = cell(pts_[i].x);
    const auto cy = cell(pts_[i].y);
    const auto max_ring = std::max({cx - min_cx_, max_cx_ - cx, cy - min_cy_, max_cy_ - cy});
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t r = 0; r <= max_ring; ++r) {
      // Points in ring r are at least (r - 1) cell widths away.
      if (r >= 1 && static_cast<double>(r - 1) > best) break;
      for (std::int64_t dx = -r; dx <= r; ++dx) {
        for (std::int64_t dy = -r; dy <= r; ++dy) {
          if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
          auto it = cells_.find(key(cx + dx, cy + dy));
          if (it == cells_.end()) continue;
          for (auto j : it->second) {
            if (j == i) continue;
            best = std::min(best, distance(pts_[i], pts_[j]));
          }
        }
      }
    }
    return best;
  }

 private:
  static std::int64_t cell(double v) { return static_cast<std::int64_t>(std::floor(v)); }
  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ static_cast<std::uint64_t>(cy & 0xffffffff);
  }

  std::span<const FlipFlop> pts_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
  std::int64_t min_cx_ = std::numeric_limits<std::int64_t>::max();
  std::int64_t max_cx_ = std::numeric_limits<std::int64_t>::min();
  std::int64_t min_cy_ = std::numeric_limits<std::int64_t>::max();
  std::int64_t max_cy_ = std::numeric_limits<std::int64_t>::min();
};

}  // namespace

SpacingHistogram neighbor_spacing_histogram(std::span<const FlipFlop> flip_flops) {
  if (flip_flops.size() < 2) {
    throw std::invalid_argument("spacing histogram needs at least two flip-flops");
  }
  SpacingHistogram h;
  PointGrid grid(flip_flops);
  for (std::size_t i = 0; i < flip_flops.size(); ++i) {
    ++h.counts[SpacingHistogram::bucket_of(grid.nearest(i))];
    ++h.total;
  }
  return h;
}

SpacingHistogram neighbor_spacing_histogram(const Design& design) {
  return neighbor_spacing_histogram(design.flip_flops());
}

}  // namespace resilex
