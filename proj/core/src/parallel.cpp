#include "resilex/parallel.hpp"

#include <cstdlib>

#include "resilex/text.hpp"

namespace resilex {

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv(kWorkersEnv)) {
    std::uint64_t v = 0;
    if (text::parse_uint(env, v) && v > 0 && v <= 1024) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace resilex
