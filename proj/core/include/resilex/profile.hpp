#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "resilex/design.hpp"

namespace resilex {

/// Outcome of one injected flip-flop error.
enum class OutcomeClass { Vanished, OMM, UT, Hang, ED };

inline constexpr std::array<OutcomeClass, 5> kAllOutcomes = {
    OutcomeClass::Vanished, OutcomeClass::OMM, OutcomeClass::UT, OutcomeClass::Hang,
    OutcomeClass::ED};

std::string_view to_string(OutcomeClass c);

/// Outcome tallies for one (flip-flop, benchmark) pair. `T` is an integer
/// for measured counts and double for predicted (expected) counts.
template <typename T>
struct BasicOutcomeCounts {
  T vanished{};
  T omm{};
  T ut{};
  T hang{};
  T ed{};

  T total() const { return vanished + omm + ut + hang + ed; }
  /// SDC-causing errors.
  T sdc() const { return omm; }
  /// DUE-causing errors.
  T due() const { return ut + hang + ed; }
  T non_vanished() const { return omm + ut + hang + ed; }

  T& operator[](OutcomeClass c) {
    switch (c) {
      case OutcomeClass::Vanished: return vanished;
      case OutcomeClass::OMM: return omm;
      case OutcomeClass::UT: return ut;
      case OutcomeClass::Hang: return hang;
      case OutcomeClass::ED: return ed;
    }
    return vanished;
  }
  T operator[](OutcomeClass c) const { return const_cast<BasicOutcomeCounts&>(*this)[c]; }

  BasicOutcomeCounts& operator+=(const BasicOutcomeCounts& o) {
    vanished += o.vanished;
    omm += o.omm;
    ut += o.ut;
    hang += o.hang;
    ed += o.ed;
    return *this;
  }
  bool operator==(const BasicOutcomeCounts&) const = default;
};

using OutcomeCounts = BasicOutcomeCounts<std::uint64_t>;
using ExpectedCounts = BasicOutcomeCounts<double>;

ExpectedCounts to_expected(const OutcomeCounts& c);

/// Per-benchmark campaign metadata carried in profile headers.
struct BenchmarkInfo {
  std::uint64_t golden_cycles = 0;
  std::uint64_t seed = 0;
  std::uint64_t injections = 0;
  /// The benchmark runs an ABFT-protected kernel (ABFT techniques apply).
  bool abft = false;
  /// Detection hooks were active during the campaign.
  bool detection_active = false;

  bool operator==(const BenchmarkInfo&) const = default;
};

/// Measured outcome counts per (flip-flop, benchmark).
class VulnerabilityProfile {
 public:
  using Key = std::pair<FfId, std::string>;

  void set_benchmark(const std::string& name, BenchmarkInfo info);
  /// Adds counts to a record, creating it when absent. The benchmark must
  /// have been declared with set_benchmark first.
  void add(FfId ff, const std::string& benchmark, const OutcomeCounts& counts);

  const std::map<Key, OutcomeCounts>& records() const { return records_; }
  const std::map<std::string, BenchmarkInfo>& benchmarks() const { return benchmarks_; }
  std::vector<std::string> benchmark_names() const;
  std::set<FfId> flip_flops() const;
  bool empty() const { return records_.empty(); }

  const OutcomeCounts* find(FfId ff, const std::string& benchmark) const;

  /// Records restricted to the listed benchmarks.
  VulnerabilityProfile restrict_to(const std::vector<std::string>& benchmarks) const;

  /// Checks the structural invariants (ED = 0 without detection, every
  /// record's benchmark declared). Throws std::invalid_argument.
  void validate() const;

  bool operator==(const VulnerabilityProfile&) const = default;

 private:
  std::map<Key, OutcomeCounts> records_;
  std::map<std::string, BenchmarkInfo> benchmarks_;
};

/// Reads/writes the profile format:
///
///   #! benchmark=matmul golden_cycles=8123 seed=1 injections=10000 abft=0 hooks=0
///   ff_id,benchmark,vanished,omm,ut,hang,ed,total
///   0,matmul,30,2,0,1,0,33
VulnerabilityProfile parse_profile(std::istream& in, std::string_view source_name = "<profile>");
VulnerabilityProfile load_profile(const std::string& path);
void write_profile(std::ostream& out, const VulnerabilityProfile& profile);
std::string serialize_profile(const VulnerabilityProfile& profile);

/// Fractions of flip-flops (over every flip-flop in the profile) whose
/// errors caused at least one SDC / DUE in any benchmark.
struct ProfileStats {
  std::size_t flip_flops = 0;
  double sdc = 0.0;
  double due = 0.0;
  double both = 0.0;
  double either = 0.0;
  double always_vanish = 0.0;
};

ProfileStats profile_stats(const VulnerabilityProfile& profile);

}  // namespace resilex
