#include "manifest.hpp"

#include <cstdlib>
#include <ctime>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "resilex/text.hpp"

namespace resilex::cli {

void RunManifest::add_input(std::string role, std::string path, const std::string& content) {
  inputs.push_back({std::move(role), std::move(path), text::hex64(text::fnv1a64(content))});
}

void RunManifest::write(std::ostream& out) const {
  out << "# tool: resilex " << version << "\n";
  out << "# command: " << command << "\n";
  for (const auto& [name, value] : flags) out << "# flag: " << name << "=" << value << "\n";
  for (const auto& [name, value] : seeds) out << "# seed: " << name << "=" << value << "\n";
  for (const auto& in : inputs) out << "# input: " << in.role << "=" << in.path << " fnv1a64=" << in.digest << "\n";
  for (const auto& [name, value] : resolved) out << "# resolved: " << name << "=" << value << "\n";
  out << "# timestamp: " << timestamp << "\n";
}

std::string format_utc(std::int64_t seconds) {
  const std::time_t t = static_cast<std::time_t>(seconds);
  std::tm tm{};
  if (gmtime_r(&t, &tm) == nullptr) throw std::invalid_argument("timestamp out of range");
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_timestamp() {
  std::int64_t seconds = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env != nullptr && *env != '\0') {
    if (!text::parse_int(env, seconds)) {
      throw std::invalid_argument("SOURCE_DATE_EPOCH must be an integer, got '" + std::string(env) + "'");
    }
  }
  return format_utc(seconds);
}

std::vector<std::pair<std::string, std::string>> read_manifest_lines(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.starts_with("# ")) continue;
    const auto colon = line.find(": ", 2);
    if (colon == std::string::npos) continue;
    out.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
  }
  return out;
}

}  // namespace resilex::cli
