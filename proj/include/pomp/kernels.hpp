#ifndef POMP_KERNELS_HPP_
#define POMP_KERNELS_HPP_

#include <cstdint>
#include <functional>
#include <vector>

namespace pomp {

// Every parallel kernel has a serial twin with identical results. The serial
// path is the reference used by tests and benchmarks.
enum class ExecPolicy { kSerial, kParallel };

int WorkerCount();

// out[i] = fn(i) for i in [0, n). fn must be safe to call concurrently for
// distinct i.
void ParallelFor(int n, const std::function<void(int)>& fn, ExecPolicy policy);

// Scores a batch; score[i] = fn(i).
std::vector<double> EvaluateBatch(int n, const std::function<double(int)>& fn,
                                  ExecPolicy policy);

}  // namespace pomp

#endif  // POMP_KERNELS_HPP_
