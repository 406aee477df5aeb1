#include "pomp/kernels.hpp"

#include <exception>
#include <mutex>

#include <omp.h>

namespace pomp {

int WorkerCount() { return omp_get_max_threads(); }

void ParallelFor(int n, const std::function<void(int)>& fn, ExecPolicy policy) {
  if (policy == ExecPolicy::kSerial || n <= 1 || WorkerCount() == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  // Exceptions cannot cross the parallel region; the first one is rethrown.
  std::exception_ptr error;
  std::mutex mu;
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

std::vector<double> EvaluateBatch(int n, const std::function<double(int)>& fn,
                                  ExecPolicy policy) {
  std::vector<double> out(static_cast<std::size_t>(n));
  ParallelFor(n, [&](int i) { out[static_cast<std::size_t>(i)] = fn(i); }, policy);
  return out;
}

}  // namespace pomp
