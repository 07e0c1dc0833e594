#include "factorcv/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <string_view>

namespace factorcv {

unsigned default_thread_count() {
  if (const char* env = std::getenv("FACTORCV_THREADS")) {
    const std::string_view text(env);
    unsigned v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec == std::errc() && res.ptr == text.data() + text.size() && v >= 1)
      return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace factorcv
