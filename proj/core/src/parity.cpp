#include "resilex/parity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "resilex/text.hpp"

namespace resilex {

std::string_view to_string(ParityHeuristic h) {
  switch (h) {
    case ParityHeuristic::size: return "size";
    case ParityHeuristic::vulnerability: return "vulnerability";
    case ParityHeuristic::locality: return "locality";
    case ParityHeuristic::timing: return "timing";
    case ParityHeuristic::optimized: return "optimized";
  }
  return "?";
}

std::optional<ParityHeuristic> parse_parity_heuristic(std::string_view text) {
  for (auto h : {ParityHeuristic::size, ParityHeuristic::vulnerability, ParityHeuristic::locality,
                 ParityHeuristic::timing, ParityHeuristic::optimized}) {
    if (to_string(h) == text) return h;
  }
  return std::nullopt;
}

std::size_t ParityPlan::protected_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

std::size_t staging_registers(std::size_t group_size) {
  if (group_size <= 1) return 0;
  const auto levels = static_cast<std::size_t>(std::bit_width(group_size - 1));  // ceil(log2 g)
  return (group_size + 3) / 4 * ((levels + 1) / 2);
}

bool needs_pipelining(const Design& design, std::span<const FfId> members) {
  const double delay = design.xor_tree_delay_ps(members.size());
  return std::any_of(members.begin(), members.end(),
                     [&](FfId id) { return !(design.at(id).slack_ps > delay); });
}

std::pair<double, double> parity_group_units(std::size_t group_size, bool pipelined, const ParityConstants& k) {
  if (group_size == 0) return {0.0, 0.0};
  // g-1 predictor XORs plus g checker XORs (the last one compares).
  const double xors = static_cast<double>(2 * group_size - 1);
  const double registers = 1.0 + (pipelined ? static_cast<double>(staging_registers(group_size)) : 0.0);
  return {k.xor2_area * xors + k.register_area * registers + k.group_area,
          k.xor2_power * xors + k.register_power * registers + k.group_power};
}

CostVector parity_cost(const ParityPlan& plan, const Design& design, const TechniqueLibrary& library) {
  CostVector c;
  if (plan.groups.empty()) return c;
  double area = 0.0;
  double power = 0.0;
  for (const auto& g : plan.groups) {
    const auto [a, p] = parity_group_units(g.size(), g.pipelined, library.parity());
    area += a;
    power += p;
  }
  const auto& model = library.cost_model(design.core_kind());
  const double n = static_cast<double>(design.size());
  c.area = area * model.ff_area_share / n;
  c.power = power * model.ff_power_share / n;
  c.energy = compose_energy(c.power, 0.0);
  return c;
}

namespace {

struct WorkGroup {
  std::vector<FfId> members;
  bool pipelined = false;
};

struct Caps {
  std::size_t unpipelined = 32;
  std::size_t pipelined = 16;
  std::size_t of(bool piped) const { return piped ? pipelined : unpipelined; }
};

void check_inputs(const Design& design, std::span<const FfId> ffs) {
  if (ffs.empty()) throw std::invalid_argument("parity planning needs at least one flip-flop");
  std::unordered_set<FfId> seen;
  for (auto id : ffs) {
    if (!design.contains(id)) throw std::invalid_argument("flip-flop " + std::to_string(id) + " is not in the design");
    if (!seen.insert(id).second) throw std::invalid_argument("flip-flop " + std::to_string(id) + " listed twice");
  }
}

class Repairer {
 public:
  Repairer(const Design& design, Caps caps) : design_(design), caps_(caps) {}

  // Greedy exchange, nearest violation first. Every step strictly lowers the
  // number of violating pairs, so the loop terminates.
  void run(std::vector<WorkGroup>& groups) const {
    for (;;) {
      std::size_t gi = 0;
      FfId a = 0;
      FfId b = 0;
      if (!nearest_violation(groups, gi, a, b)) return;
      auto& g = groups[gi].members;
      const auto va = violations_of(a, g, a);
      const auto vb = violations_of(b, g, b);
      const FfId mover = va > vb ? a : (vb > va ? b : std::max(a, b));
      relocate(groups, gi, mover);
    }
  }

 private:
  double dist(FfId x, FfId y) const { return distance(design_.at(x), design_.at(y)); }

  std::size_t violations_of(FfId f, const std::vector<FfId>& members, FfId skip) const {
    std::size_t n = 0;
    for (auto m : members) {
      if (m != skip && m != f && dist(f, m) < kMinGroupSpacing) ++n;
    }
    return n;
  }

  bool nearest_violation(const std::vector<WorkGroup>& groups, std::size_t& gi, FfId& a, FfId& b) const {
    bool found = false;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const auto& m = groups[i].members;
      for (std::size_t x = 0; x < m.size(); ++x) {
        for (std::size_t y = x + 1; y < m.size(); ++y) {
          const double d = dist(m[x], m[y]);
          if (d >= kMinGroupSpacing) continue;
          const FfId lo = std::min(m[x], m[y]);
          const FfId hi = std::max(m[x], m[y]);
          const bool better = !found || d < best ||
                              (d == best && std::tie(i, lo, hi) < std::tie(gi, a, b));
          if (better) {
            found = true;
            best = d;
            gi = i;
            a = lo;
            b = hi;
          }
        }
      }
    }
    return found;
  }

  // `f` may sit in `group` (of the given size once it is there) without
  // breaking spacing, the size cap or the group's timing.
  bool fits(FfId f, const WorkGroup& group, std::size_t size_after, FfId skip) const {
    if (size_after > caps_.of(group.pipelined)) return false;
    if (!group.pipelined && !(design_.at(f).slack_ps > design_.xor_tree_delay_ps(size_after))) return false;
    return violations_of(f, group.members, skip) == 0;
  }

  void relocate(std::vector<WorkGroup>& groups, std::size_t gi, FfId f) const {
    auto erase = [](std::vector<FfId>& v, FfId id) { v.erase(std::find(v.begin(), v.end(), id)); };
    // Swap with a member of another group when both land violation-free.
    for (std::size_t hi = 0; hi < groups.size(); ++hi) {
      if (hi == gi) continue;
      auto& h = groups[hi];
      std::vector<FfId> candidates = h.members;
      std::sort(candidates.begin(), candidates.end());
      for (auto other : candidates) {
        if (fits(f, h, h.members.size(), other) && fits(other, groups[gi], groups[gi].members.size(), f)) {
          erase(groups[gi].members, f);
          erase(h.members, other);
          groups[gi].members.push_back(other);
          h.members.push_back(f);
          return;
        }
      }
    }
    // Move into a group with room.
    for (std::size_t hi = 0; hi < groups.size(); ++hi) {
      if (hi == gi) continue;
      auto& h = groups[hi];
      if (fits(f, h, h.members.size() + 1, f)) {
        erase(groups[gi].members, f);
        h.members.push_back(f);
        return;
      }
    }
    erase(groups[gi].members, f);
    WorkGroup fresh;
    fresh.members = {f};
    fresh.pipelined = needs_pipelining(design_, fresh.members);
    groups.push_back(std::move(fresh));
  }

  const Design& design_;
  Caps caps_;
};

ParityPlan finish(const Design& design, std::vector<WorkGroup> groups, Caps caps, ParityHeuristic h,
                  std::size_t group_size, const TechniqueLibrary& library) {
  Repairer(design, caps).run(groups);
  ParityPlan plan;
  plan.heuristic = h;
  plan.group_size = group_size;
  for (auto& g : groups) {
    if (g.members.empty()) continue;
    std::sort(g.members.begin(), g.members.end());
    ParityGroup out;
    out.members = std::move(g.members);
    out.pipelined = needs_pipelining(design, out.members);
    out.staging_registers = out.pipelined ? staging_registers(out.size()) : 0;
    plan.groups.push_back(std::move(out));
  }
  plan.cost = parity_cost(plan, design, library);
  return plan;
}

std::vector<FfId> locality_order(const Design& design, std::span<const FfId> ffs, std::size_t group_size) {
  const std::size_t n = ffs.size();
  const std::size_t k = (n + group_size - 1) / group_size;
  std::vector<FfId> by_place(ffs.begin(), ffs.end());
  std::sort(by_place.begin(), by_place.end(), [&](FfId a, FfId b) {
    const auto& fa = design.at(a);
    const auto& fb = design.at(b);
    return std::tie(fa.y, fa.x, a) < std::tie(fb.y, fb.x, b);
  });
  std::vector<std::pair<double, double>> centroid(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto& f = design.at(by_place[(2 * c + 1) * n / (2 * k)]);
    centroid[c] = {f.x, f.y};
  }
  std::vector<std::size_t> label(n, k);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = design.at(ffs[i]);
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = std::hypot(f.x - centroid[c].first, f.y - centroid[c].second);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (label[i] != best) {
        label[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<double> sx(k, 0.0), sy(k, 0.0);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = design.at(ffs[i]);
      sx[label[i]] += f.x;
      sy[label[i]] += f.y;
      ++cnt[label[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (cnt[c] > 0) centroid[c] = {sx[c] / static_cast<double>(cnt[c]), sy[c] / static_cast<double>(cnt[c])};
    }
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(label[a], ffs[a]) < std::tie(label[b], ffs[b]);
  });
  std::vector<FfId> out;
  out.reserve(n);
  for (auto i : idx) out.push_back(ffs[i]);
  return out;
}

}  // namespace

ParityPlan plan_parity(const Design& design, std::span<const FfId> ffs, const VulnerabilityProfile* profile,
                       ParityHeuristic heuristic, std::size_t group_size, const TechniqueLibrary& library) {
  check_inputs(design, ffs);
  const auto& k = library.parity();
  if (heuristic == ParityHeuristic::optimized) return optimized_plan(design, ffs, library);
  if (group_size == 0 || !std::has_single_bit(group_size)) {
    throw std::invalid_argument("parity group size must be a power of two");
  }
  if (group_size > k.unpipelined_size) {
    throw std::invalid_argument("parity group size " + std::to_string(group_size) + " exceeds the cap of " +
                                std::to_string(k.unpipelined_size));
  }

  std::vector<FfId> order(ffs.begin(), ffs.end());
  switch (heuristic) {
    case ParityHeuristic::size: break;
    case ParityHeuristic::vulnerability: {
      if (profile == nullptr) throw std::invalid_argument("the vulnerability heuristic needs a profile");
      std::unordered_map<FfId, std::uint64_t> weight;
      for (const auto& [key, counts] : profile->records()) weight[key.first] += counts.non_vanished();
      std::stable_sort(order.begin(), order.end(), [&](FfId a, FfId b) {
        const auto wa = weight[a];
        const auto wb = weight[b];
        return wa != wb ? wa > wb : a < b;
      });
      break;
    }
    case ParityHeuristic::locality: order = locality_order(design, ffs, group_size); break;
    case ParityHeuristic::timing:
      std::stable_sort(order.begin(), order.end(), [&](FfId a, FfId b) {
        const double sa = design.at(a).slack_ps;
        const double sb = design.at(b).slack_ps;
        return sa != sb ? sa < sb : a < b;
      });
      break;
    case ParityHeuristic::optimized: break;
  }

  const Caps caps{group_size, std::min(group_size, k.pipelined_size)};
  std::vector<WorkGroup> groups;
  for (std::size_t start = 0; start < order.size(); start += group_size) {
    const std::size_t end = std::min(order.size(), start + group_size);
    std::span<const FfId> chunk(order.data() + start, end - start);
    if (!needs_pipelining(design, chunk)) {
      groups.push_back({{chunk.begin(), chunk.end()}, false});
      continue;
    }
    for (std::size_t s = 0; s < chunk.size(); s += caps.pipelined) {
      auto sub = chunk.subspan(s, std::min(caps.pipelined, chunk.size() - s));
      groups.push_back({{sub.begin(), sub.end()}, needs_pipelining(design, sub)});
    }
  }
  return finish(design, std::move(groups), caps, heuristic, group_size, library);
}

ParityPlan optimized_plan(const Design& design, std::span<const FfId> ffs, const TechniqueLibrary& library) {
  check_inputs(design, ffs);
  const auto& k = library.parity();
  const Caps caps{k.unpipelined_size, k.pipelined_size};
  const double threshold = design.xor_tree_delay_ps(k.unpipelined_size);

  std::vector<FfId> fast;
  std::vector<FfId> slow;
  for (auto id : ffs) (design.at(id).slack_ps > threshold ? fast : slow).push_back(id);

  std::vector<WorkGroup> groups;
  // Round-robin over id order keeps neighbouring flip-flops apart.
  auto spread = [&](std::vector<FfId>& members, bool pipelined) {
    if (members.empty()) return;
    std::sort(members.begin(), members.end());
    const std::size_t cap = caps.of(pipelined);
    const std::size_t count = (members.size() + cap - 1) / cap;
    const std::size_t first = groups.size();
    groups.resize(first + count, WorkGroup{{}, pipelined});
    for (std::size_t i = 0; i < members.size(); ++i) groups[first + i % count].members.push_back(members[i]);
  };
  spread(fast, false);
  spread(slow, true);
  return finish(design, std::move(groups), caps, ParityHeuristic::optimized, 0, library);
}

SpacingReport check_spacing(const ParityPlan& plan, const Design& design) {
  SpacingReport report;
  for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) {
    const auto& m = plan.groups[gi].members;
    if (m.size() < 2) continue;
    std::vector<FlipFlop> pts;
    pts.reserve(m.size());
    for (auto id : m) pts.push_back(design.at(id));
    for (std::size_t a = 0; a < pts.size(); ++a) {
      for (std::size_t b = a + 1; b < pts.size(); ++b) {
        const double d = distance(pts[a], pts[b]);
        if (d < kMinGroupSpacing) {
          report.violations.push_back({gi, std::min(m[a], m[b]), std::max(m[a], m[b]), d});
        }
      }
    }
    const auto h = neighbor_spacing_histogram(pts);
    for (std::size_t b = 0; b < SpacingHistogram::kBuckets; ++b) report.within_group.counts[b] += h.counts[b];
    report.within_group.total += h.total;
  }
  return report;
}

void write_plan(std::ostream& out, const ParityPlan& plan) {
  out << "#! heuristic=" << to_string(plan.heuristic) << " group_size=" << plan.group_size << "\n";
  out << "group_id,pipelined,ff_ids\n";
  for (std::size_t i = 0; i < plan.groups.size(); ++i) {
    const auto& g = plan.groups[i];
    out << i << ',' << (g.pipelined ? 1 : 0) << ',';
    for (std::size_t j = 0; j < g.members.size(); ++j) out << (j ? " " : "") << g.members[j];
    out << "\n";
  }
  out << "#! cost_area=" << text::format_double(plan.cost.area)
      << " cost_power=" << text::format_double(plan.cost.power)
      << " cost_energy=" << text::format_double(plan.cost.energy) << "\n";
}

std::string serialize_plan(const ParityPlan& plan) {
  std::ostringstream os;
  write_plan(os, plan);
  return os.str();
}

ParityPlan parse_plan(std::istream& in, std::string_view source_name) {
  auto fail = [&](std::size_t line_no, const std::string& what) {
    return ParseError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + what);
  };
  ParityPlan plan;
  bool header = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    if (line.starts_with("#!")) {
      for (const auto& [key, value] : text::parse_directives(line.substr(2))) {
        bool ok = true;
        std::uint64_t u = 0;
        if (key == "heuristic") {
          const auto h = parse_parity_heuristic(value);
          if (!h) throw fail(line_no, "unknown heuristic '" + value + "'");
          plan.heuristic = *h;
        } else if (key == "group_size") {
          ok = text::parse_uint(value, u);
          plan.group_size = static_cast<std::size_t>(u);
        } else if (key == "cost_area") {
          ok = text::parse_double(value, plan.cost.area);
        } else if (key == "cost_power") {
          ok = text::parse_double(value, plan.cost.power);
        } else if (key == "cost_energy") {
          ok = text::parse_double(value, plan.cost.energy);
        } else {
          throw fail(line_no, "unknown directive '" + key + "'");
        }
        if (!ok) throw fail(line_no, "bad value for '" + key + "'");
      }
      continue;
    }
    if (line.starts_with('#')) continue;
    if (!header) {
      if (line != "group_id,pipelined,ff_ids") throw fail(line_no, "expected header 'group_id,pipelined,ff_ids'");
      header = true;
      continue;
    }
    const auto fields = text::split(line, ',');
    if (fields.size() != 3) throw fail(line_no, "expected 3 fields");
    std::uint64_t gid = 0;
    if (!text::parse_uint(text::trim(fields[0]), gid) || gid != plan.groups.size()) {
      throw fail(line_no, "group ids must count up from 0");
    }
    const auto piped = text::trim(fields[1]);
    if (piped != "0" && piped != "1") throw fail(line_no, "pipelined must be 0 or 1");
    ParityGroup g;
    g.pipelined = piped == "1";
    for (auto tok : text::split(text::trim(fields[2]), ' ')) {
      tok = text::trim(tok);
      if (tok.empty()) continue;
      std::int64_t id = 0;
      if (!text::parse_int(tok, id)) throw fail(line_no, "bad flip-flop id '" + std::string(tok) + "'");
      g.members.push_back(id);
    }
    if (g.members.empty()) throw fail(line_no, "empty group");
    g.staging_registers = g.pipelined ? staging_registers(g.size()) : 0;
    plan.groups.push_back(std::move(g));
  }
  if (!header) throw fail(line_no, "missing header line");
  return plan;
}

}  // namespace resilex
