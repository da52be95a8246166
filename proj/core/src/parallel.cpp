#include "conelq/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace conelq {

int worker_count() {
  if (const char* env = std::getenv("CONELQ_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int n, const std::function<void(int, int)>& body) {
  if (n <= 0) return;
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<long long>(n) * w / workers);
    const int end = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([&, w, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace conelq
