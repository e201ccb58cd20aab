#include "r4style/parallel.hpp"

#include <cstdlib>
#include <string>

namespace r4style {

std::size_t thread_budget() {
  if (const char* env = std::getenv("R4STYLE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace r4style
