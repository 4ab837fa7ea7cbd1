#include "seqtraj/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace seqtraj {
namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads.store(n < 1 ? 1 : n); }

int num_threads() { return g_threads.load(); }

int threads_from_env(int fallback) {
  const char* raw = std::getenv("SEQTRAJ_THREADS");
  if (raw == nullptr || *raw == '\0') return fallback;
  try {
    const int n = std::stoi(raw);
    return n >= 1 ? n : fallback;
  } catch (const std::exception&) {
    return fallback;
  }
}

}  // namespace seqtraj
