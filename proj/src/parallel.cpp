#include "erpmvs/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace erpmvs {

void parallel_for_chunks(std::int64_t first, std::int64_t last, std::int64_t chunk,
                         int threads,
                         const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (last <= first) return;
  if (chunk < 1) chunk = 1;
  const std::int64_t n_chunks = (last - first + chunk - 1) / chunk;
  if (threads <= 1 || n_chunks == 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) {
      const std::int64_t b = first + c * chunk;
      fn(b, std::min(b + chunk, last));
    }
    return;
  }

  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::int64_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= n_chunks) return;
      const std::int64_t b = first + c * chunk;
      try {
        fn(b, std::min(b + chunk, last));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  const int n_workers = static_cast<int>(std::min<std::int64_t>(threads, n_chunks));
  pool.reserve(n_workers);
  for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace erpmvs
