#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace resilex::cli {

/// Provenance block embedded at the top of every report as `#` comment
/// lines. Two runs with equal manifests produce identical reports.
struct RunManifest {
  struct Input {
    std::string role;
    std::string path;
    std::string digest;  // FNV-1a 64, hex
  };

  std::string command;
  std::vector<std::pair<std::string, std::string>> flags;
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::vector<Input> inputs;
  /// Values derived from the flags, e.g. a sample size.
  std::vector<std::pair<std::string, std::string>> resolved;
  std::string version;
  std::string timestamp;

  void add_input(std::string role, std::string path, const std::string& content);
  void write(std::ostream& out) const;
};

/// ISO-8601 UTC time from SOURCE_DATE_EPOCH, or the Unix epoch when it is
/// unset, so default runs are reproducible.
std::string manifest_timestamp();
std::string format_utc(std::int64_t seconds);

/// Parses `# key: value` manifest lines back out of a report.
std::vector<std::pair<std::string, std::string>> read_manifest_lines(std::istream& in);

}  // namespace resilex::cli
