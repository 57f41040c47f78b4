#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace resilex::testing {

SpacingHistogram brute_spacing(std::span<const FlipFlop> ffs) {
  SpacingHistogram h;
  for (std::size_t i = 0; i < ffs.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ffs.size(); ++j) {
      if (i == j) continue;
      const double dx = ffs[i].x - ffs[j].x;
      const double dy = ffs[i].y - ffs[j].y;
      best = std::min(best, std::sqrt(dx * dx + dy * dy));
    }
    std::size_t bucket = 4;
    if (best < 1.0) {
      bucket = 0;
    } else if (best < 2.0) {
      bucket = 1;
    } else if (best < 3.0) {
      bucket = 2;
    } else if (best < 4.0) {
      bucket = 3;
    }
    ++h.counts[bucket];
    ++h.total;
  }
  return h;
}

std::size_t brute_violations(const std::vector<std::vector<FfId>>& groups, const Design& design,
                             double min_distance) {
  std::size_t n = 0;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = i + 1; j < g.size(); ++j) {
        const auto& a = design.at(g[i]);
        const auto& b = design.at(g[j]);
        if (std::hypot(a.x - b.x, a.y - b.y) < min_distance) ++n;
      }
    }
  }
  return n;
}

double direct_improvement(double omm_before, double ut_before, double hang_before, double omm_after,
                          double ut_after, double hang_after, double ed_after, double gamma, bool sdc) {
  const double before = sdc ? omm_before : ut_before + hang_before;
  const double after = sdc ? omm_after : ut_after + hang_after + ed_after;
  if (after == 0.0) return std::numeric_limits<double>::infinity();
  return before / after / gamma;
}

double normal_quantile_two_sided(double confidence) {
  // Find z with P(|Z| > z) = 1 - confidence, i.e. erfc(z / sqrt 2) = 1 - c.
  const double target = 1.0 - confidence;
  double lo = 0.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::uint64_t direct_sample_size(double margin, double confidence, double p) {
  const double z = normal_quantile_two_sided(confidence);
  return static_cast<std::uint64_t>(std::ceil(z * z * p * (1.0 - p) / (margin * margin)));
}

std::vector<std::size_t> brute_pareto(std::span<const Point2> points) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
      const auto& p = points[i];
      const auto& q = points[j];
      dominated = q.energy <= p.energy && q.improvement >= p.improvement &&
                  (q.energy < p.energy || q.improvement > p.improvement);
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

ProfileStats scan_stats(const VulnerabilityProfile& profile) {
  std::map<FfId, std::pair<bool, bool>> seen;
  for (const auto& [key, c] : profile.records()) {
    auto& s = seen[key.first];
    s.first = s.first || c.omm > 0;
    s.second = s.second || (c.ut + c.hang + c.ed) > 0;
  }
  ProfileStats st;
  st.flip_flops = seen.size();
  std::size_t sdc = 0, due = 0, both = 0, either = 0;
  for (const auto& [ff, s] : seen) {
    sdc += s.first;
    due += s.second;
    both += s.first && s.second;
    either += s.first || s.second;
  }
  const double n = static_cast<double>(seen.size());
  st.sdc = sdc / n;
  st.due = due / n;
  st.both = both / n;
  st.either = either / n;
  st.always_vanish = (seen.size() - either) / n;
  return st;
}

double counted_similarity(const std::vector<std::set<FfId>>& subsets) {
  std::map<FfId, std::size_t> count;
  for (const auto& s : subsets) {
    for (auto ff : s) ++count[ff];
  }
  std::size_t common = 0;
  for (const auto& [ff, c] : count) common += c == subsets.size();
  return static_cast<double>(common) / static_cast<double>(count.size());
}

}  // namespace resilex::testing
