#include "resilex/profile.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "resilex/text.hpp"

namespace resilex {

namespace {
constexpr std::string_view kProfileHeader = "ff_id,benchmark,vanished,omm,ut,hang,ed,total";
}

std::string_view to_string(OutcomeClass c) {
  switch (c) {
    case OutcomeClass::Vanished: return "Vanished";
    case OutcomeClass::OMM: return "OMM";
    case OutcomeClass::UT: return "UT";
    case OutcomeClass::Hang: return "Hang";
    case OutcomeClass::ED: return "ED";
  }
  return "?";
}

ExpectedCounts to_expected(const OutcomeCounts& c) {
  return {static_cast<double>(c.vanished), static_cast<double>(c.omm), static_cast<double>(c.ut),
          static_cast<double>(c.hang), static_cast<double>(c.ed)};
}

void VulnerabilityProfile::set_benchmark(const std::string& name, BenchmarkInfo info) {
  if (name.empty() || name.find(',') != std::string::npos ||
      name.find_first_of(" \t=") != std::string::npos) {
    throw std::invalid_argument("invalid benchmark name '" + name + "'");
  }
  benchmarks_[name] = info;
}

void VulnerabilityProfile::add(FfId ff, const std::string& benchmark, const OutcomeCounts& counts) {
  if (!benchmarks_.contains(benchmark)) {
    throw std::invalid_argument("benchmark '" + benchmark + "' not declared in profile");
  }
  records_[{ff, benchmark}] += counts;
}

std::vector<std::string> VulnerabilityProfile::benchmark_names() const {
  std::vector<std::string> out;
  out.reserve(benchmarks_.size());
  for (const auto& [name, info] : benchmarks_) out.push_back(name);
  return out;
}

std::set<FfId> VulnerabilityProfile::flip_flops() const {
  std::set<FfId> out;
  for (const auto& [key, counts] : records_) out.insert(key.first);
  return out;
}

const OutcomeCounts* VulnerabilityProfile::find(FfId ff, const std::string& benchmark) const {
  auto it = records_.find({ff, benchmark});
  return it == records_.end() ? nullptr : &it->second;
}

VulnerabilityProfile VulnerabilityProfile::restrict_to(const std::vector<std::string>& benchmarks) const {
  VulnerabilityProfile out;
  for (const auto& b : benchmarks) {
    auto it = benchmarks_.find(b);
    if (it == benchmarks_.end()) throw std::invalid_argument("profile has no benchmark '" + b + "'");
    out.benchmarks_[b] = it->second;
  }
  for (const auto& [key, counts] : records_) {
    if (out.benchmarks_.contains(key.second)) out.records_.emplace(key, counts);
  }
  return out;
}

void VulnerabilityProfile::validate() const {
  for (const auto& [key, counts] : records_) {
    auto it = benchmarks_.find(key.second);
    if (it == benchmarks_.end()) {
      throw std::invalid_argument("record for undeclared benchmark '" + key.second + "'");
    }
    if (!it->second.detection_active && counts.ed != 0) {
      throw std::invalid_argument("flip-flop " + std::to_string(key.first) + " on '" + key.second +
                                  "' has ED outcomes but no detection was active");
    }
  }
}

VulnerabilityProfile parse_profile(std::istream& in, std::string_view source_name) {
  VulnerabilityProfile profile;
  bool header_seen = false;
  auto fail = [&](std::size_t line_no, const std::string& what) {
    return ParseError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + what);
  };

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    if (line.starts_with("#!")) {
      std::string name;
      BenchmarkInfo info;
      for (const auto& [key, value] : text::parse_directives(line.substr(2))) {
        std::uint64_t v = 0;
        const bool numeric = text::parse_uint(value, v);
        if (key == "benchmark") {
          name = value;
        } else if (key == "golden_cycles" && numeric) {
          info.golden_cycles = v;
        } else if (key == "seed" && numeric) {
          info.seed = v;
        } else if (key == "injections" && numeric) {
          info.injections = v;
        } else if (key == "abft" && numeric) {
          info.abft = v != 0;
        } else if (key == "hooks" && numeric) {
          info.detection_active = v != 0;
        } else {
          throw fail(line_no, "bad profile directive '" + key + "=" + value + "'");
        }
      }
      if (name.empty()) throw fail(line_no, "profile directive without benchmark name");
      try {
        profile.set_benchmark(name, info);
      } catch (const std::invalid_argument& e) {
        throw fail(line_no, e.what());
      }
      continue;
    }
    if (line.front() == '#') continue;
    if (!header_seen) {
      if (line != kProfileHeader) throw fail(line_no, "expected header '" + std::string(kProfileHeader) + "'");
      header_seen = true;
      continue;
    }
    const auto f = text::split(line, ',');
    if (f.size() != 8) throw fail(line_no, "expected 8 fields, got " + std::to_string(f.size()));
    FfId id = 0;
    if (!text::parse_int(f[0], id)) throw fail(line_no, "bad flip-flop id");
    const std::string bench(f[1]);
    OutcomeCounts c;
    std::uint64_t total = 0;
    if (!text::parse_uint(f[2], c.vanished) || !text::parse_uint(f[3], c.omm) ||
        !text::parse_uint(f[4], c.ut) || !text::parse_uint(f[5], c.hang) ||
        !text::parse_uint(f[6], c.ed) || !text::parse_uint(f[7], total)) {
      throw fail(line_no, "bad outcome count");
    }
    if (c.total() != total) throw fail(line_no, "class counts do not sum to total");
    if (!profile.benchmarks().contains(bench)) {
      throw fail(line_no, "benchmark '" + bench + "' has no '#! benchmark=' header");
    }
    if (profile.find(id, bench)) {
      throw fail(line_no, "duplicate record for flip-flop " + std::to_string(id) + " on '" + bench + "'");
    }
    profile.add(id, bench, c);
  }
  if (!header_seen) throw fail(line_no, "missing header line");
  try {
    profile.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string(source_name) + ": " + e.what());
  }
  return profile;
}

VulnerabilityProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open profile file '" + path + "'");
  return parse_profile(in, path);
}

void write_profile(std::ostream& out, const VulnerabilityProfile& profile) {
  for (const auto& [name, info] : profile.benchmarks()) {
    out << "#! benchmark=" << name << " golden_cycles=" << info.golden_cycles
        << " seed=" << info.seed << " injections=" << info.injections
        << " abft=" << (info.abft ? 1 : 0) << " hooks=" << (info.detection_active ? 1 : 0) << '\n';
  }
  out << kProfileHeader << '\n';
  for (const auto& [key, c] : profile.records()) {
    out << key.first << ',' << key.second << ',' << c.vanished << ',' << c.omm << ',' << c.ut << ','
        << c.hang << ',' << c.ed << ',' << c.total() << '\n';
  }
}

std::string serialize_profile(const VulnerabilityProfile& profile) {
  std::ostringstream out;
  write_profile(out, profile);
  return out.str();
}

ProfileStats profile_stats(const VulnerabilityProfile& profile) {
  std::map<FfId, std::pair<bool, bool>> per_ff;  // (any sdc, any due)
  for (const auto& [key, c] : profile.records()) {
    auto& [sdc, due] = per_ff[key.first];
    sdc = sdc || c.sdc() > 0;
    due = due || c.due() > 0;
  }
  ProfileStats s;
  s.flip_flops = per_ff.size();
  if (per_ff.empty()) return s;
  std::size_t n_sdc = 0, n_due = 0, n_both = 0, n_either = 0;
  for (const auto& [id, flags] : per_ff) {
    n_sdc += flags.first;
    n_due += flags.second;
    n_both += flags.first && flags.second;
    n_either += flags.first || flags.second;
  }
  const double n = static_cast<double>(per_ff.size());
  s.sdc = static_cast<double>(n_sdc) / n;
  s.due = static_cast<double>(n_due) / n;
  s.both = static_cast<double>(n_both) / n;
  s.either = static_cast<double>(n_either) / n;
  s.always_vanish = static_cast<double>(per_ff.size() - n_either) / n;
  return s;
}

}  // namespace resilex
