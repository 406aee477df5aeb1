#ifndef POMP_RNG_HPP_
#define POMP_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pomp {

// splitmix64 finalizer.
inline std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a child seed from a root and a path of stream identifiers. All
// randomness in the toolkit flows root -> phase -> episode through this.
inline std::uint64_t DeriveSeed(std::uint64_t root,
                                std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = MixSeed(root);
  for (std::uint64_t p : path) s = MixSeed(s ^ MixSeed(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Stream tags used with DeriveSeed.
enum SeedStream : std::uint64_t {
  kStreamSearch = 1,
  kStreamTrain = 2,
  kStreamEval = 3,
  kStreamEpisode = 4,
  kStreamPsi = 5,
  kStreamCem = 6,
  kStreamPolicy = 7,
  kStreamValidation = 8,
  kStreamInit = 9,
  kStreamCorpus = 10,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double Uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }
  // Uniform integer in [0, n).
  int UniformInt(int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(engine_);
  }
  double Normal(double stddev = 1.0) {
    return std::normal_distribution<double>(0.0, stddev)(engine_);
  }
  bool Bernoulli(double p) { return Uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pomp

#endif  // POMP_RNG_HPP_
