#ifndef POMP_SEARCH_HPP_
#define POMP_SEARCH_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pomp/dsl.hpp"
#include "pomp/interpreter.hpp"
#include "pomp/kernels.hpp"
#include "pomp/progspace.hpp"
#include "pomp/tasks.hpp"

namespace pomp {

struct CemConfig {
  int population_size = 64;
  double noise_sigma = 0.5;
  double elite_fraction = 0.05;
  bool sigma_decay = true;
  double sigma_decay_rate = 0.999;
  int max_iterations = 1000;
  double gamma = 0.99;
  int restarts = 10;
  // Stop once the elite-mean score has stayed within plateau_tolerance for
  // plateau_window consecutive iterations.
  int plateau_window = 50;
  double plateau_tolerance = 1e-6;

  int EliteCount() const;
  void Validate() const;  // throws ConfigError
};

struct CemIteration {
  int iteration = 0;
  double best_score = 0.0;
  double mean_score = 0.0;
  double elite_mean_score = 0.0;
  double sigma = 0.0;
  long evaluations = 0;  // cumulative objective calls
};

struct CemResult {
  LatentVector best_latent{};
  double best_score = 0.0;
  LatentVector center{};
  std::vector<CemIteration> history;
  long evaluations = 0;
  bool converged = false;
};

// Objective gets the candidate and an evaluation seed shared by every
// candidate of the same iteration.
using Objective = std::function<double(const LatentVector&, std::uint64_t eval_seed)>;

struct CandidateEvent {
  int iteration;
  int candidate;
  double score;
  const LatentVector* latent;
};
using CandidateSink = std::function<void(const CandidateEvent&)>;

// Indices of the top `count` candidates. Ties break on the lexicographic
// order of the latent so the result does not depend on population order.
std::vector<int> SelectElites(const std::vector<LatentVector>& population,
                              const std::vector<double>& scores, int count);
LatentVector MeanOf(const std::vector<LatentVector>& population, const std::vector<int>& idx);

CemResult Cem(const Objective& objective, const CemConfig& config, std::uint64_t seed,
              ExecPolicy policy = ExecPolicy::kParallel, const CandidateSink& sink = {});

double Logistic(double x);
// 1 for an empty retrieved set, else logistic(-max cosine similarity).
double DiversityMultiplier(const LatentVector& z, const std::vector<LatentVector>& retrieved);

// Mode indices are 1-based; the terminating entry is implicit after the
// last element.
struct PsiSequence {
  std::vector<int> modes;
  std::string ToString() const;
};
inline constexpr int kMinPsiLength = 10;
PsiSequence SamplePsi(int k, Rng& rng);
PsiSequence SamplePsi(int k, std::uint64_t seed);

struct EvalSettings {
  int seeds = 8;
  ExecBudget budget;
  double gamma = 0.99;
};

// Mean discounted return of one execution on fresh instances seeded by
// DeriveSeed(eval_seed, {i}).
double ProgramReturn(const Program& program, const TaskFactory& factory,
                     std::uint64_t eval_seed, const EvalSettings& settings);

// Runs the programs in order on one instance, restarting the discount at
// each program. Returns (1/|psi|) * sum of per-program discounted returns.
double PsiReturn(const std::vector<const Program*>& sequence, TaskInstance& task,
                 const ExecBudget& budget, double gamma);

struct ModeSet {
  TaskId task = TaskId::kMaze;
  std::vector<LatentVector> latents;
  std::vector<Program> programs;
  int size() const { return static_cast<int>(programs.size()); }
};

// Mean over psi lists and evaluation seeds of PsiReturn, times the
// diversity multiplier against `prefix`. The candidate program is mode
// k + 1 where k = prefix size. List d with seed s runs on
// factory(DeriveSeed(eval_seed, {d, s})).
double CompatibilityObjective(const LatentVector& z, const ModeSet& prefix,
                              const std::vector<PsiSequence>& psis, const TaskFactory& factory,
                              std::uint64_t eval_seed, const EvalSettings& settings);

struct RetrievalConfig {
  CemConfig cem;
  EvalSettings eval;
  int psi_count = 4;  // D
  ExecPolicy policy = ExecPolicy::kParallel;
};

struct RestartRecord {
  int mode = 0;
  int restart = 0;
  double score = 0.0;
  int iterations = 0;
  long evaluations = 0;
  bool converged = false;
  std::string program;
};

struct EvaluationRecord {
  int mode;
  int restart;
  int iteration;
  int candidate;
  double score;
  const LatentVector* latent;
  long exec_count;  // rollouts behind this score
};
using EvaluationSink = std::function<void(const EvaluationRecord&)>;

struct RetrievalLog {
  std::vector<RestartRecord> restarts;
  std::vector<std::vector<PsiSequence>> psis;  // per mode
  long total_executions = 0;
};

struct RetrievalResult {
  ModeSet modes;
  RetrievalLog log;
};

enum class SearchVariant { kCemTimesM, kCemDivTopK, kCemDivTimesM, kFull };
std::string_view VariantName(SearchVariant v);
std::optional<SearchVariant> VariantFromName(std::string_view name);

RetrievalResult RetrieveModes(TaskId task, int mode_count, const TaskFactory& factory,
                              const RetrievalConfig& config, std::uint64_t seed,
                              const EvaluationSink& sink = {});

RetrievalResult RunVariant(SearchVariant variant, TaskId task, int mode_count,
                           const TaskFactory& factory, const RetrievalConfig& config,
                           std::uint64_t seed, const EvaluationSink& sink = {});

// Program executions behind one objective call under `config`.
long ExecutionsPerCall(SearchVariant variant, const RetrievalConfig& config);

}  // namespace pomp

#endif  // POMP_SEARCH_HPP_
