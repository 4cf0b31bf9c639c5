#include "ctxf/parallel.hpp"

#include <cstdlib>
#include <string>

namespace ctxf {

int thread_count() {
  static const int count = [] {
    const char* env = std::getenv("CTXF_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    try {
      int v = std::stoi(env);
      return v >= 1 ? v : 1;
    } catch (const std::exception&) {
      return 1;
    }
  }();
  return count;
}

}  // namespace ctxf
