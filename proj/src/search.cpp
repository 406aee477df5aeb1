#include "pomp/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pomp/errors.hpp"
#include "pomp/rng.hpp"

namespace pomp {

int CemConfig::EliteCount() const {
  int k = static_cast<int>(std::ceil(elite_fraction * population_size - 1e-9));
  return std::clamp(k, 1, population_size);
}

void CemConfig::Validate() const {
  if (population_size < 2) throw ConfigError("cem.population_size must be >= 2");
  if (!(elite_fraction > 0.0 && elite_fraction <= 1.0))
    throw ConfigError("cem.elite_fraction must lie in (0, 1]");
  if (!(noise_sigma > 0.0)) throw ConfigError("cem.noise_sigma must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("cem.gamma must lie in (0, 1]");
  if (max_iterations < 1) throw ConfigError("cem.max_iterations must be >= 1");
  if (restarts < 1) throw ConfigError("cem.restarts must be >= 1");
  if (plateau_window < 1) throw ConfigError("cem.plateau_window must be >= 1");
  if (!(sigma_decay_rate > 0.0 && sigma_decay_rate <= 1.0))
    throw ConfigError("cem.sigma_decay_rate must lie in (0, 1]");
}

std::vector<int> SelectElites(const std::vector<LatentVector>& population,
                              const std::vector<double>& scores, int count) {
  std::vector<int> idx(population.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return population[a] < population[b];
  });
  idx.resize(static_cast<std::size_t>(std::min<int>(count, static_cast<int>(idx.size()))));
  return idx;
}

LatentVector MeanOf(const std::vector<LatentVector>& population, const std::vector<int>& idx) {
  LatentVector mean{};
  for (int i : idx)
    for (int d = 0; d < kLatentDim; ++d) mean[d] += population[i][d];
  for (double& v : mean) v /= static_cast<double>(idx.size());
  return mean;
}

CemResult Cem(const Objective& objective, const CemConfig& config, std::uint64_t seed,
              ExecPolicy policy, const CandidateSink& sink) {
  config.Validate();
  Rng rng(DeriveSeed(seed, {kStreamInit}));
  CemResult result;
  for (double& v : result.center) v = rng.Normal();
  result.best_score = -std::numeric_limits<double>::infinity();
  const int n = config.population_size;
  const int elites = config.EliteCount();
  double sigma = config.noise_sigma;
  std::vector<double> elite_means;
  std::vector<LatentVector> population(static_cast<std::size_t>(n));

  for (int it = 0; it < config.max_iterations; ++it) {
    std::uint64_t eval_seed = DeriveSeed(seed, {kStreamEval, static_cast<std::uint64_t>(it)});
    for (auto& z : population)
      for (int d = 0; d < kLatentDim; ++d) z[d] = result.center[d] + sigma * rng.Normal();
    auto scores = EvaluateBatch(
        n, [&](int i) { return objective(population[static_cast<std::size_t>(i)], eval_seed); },
        policy);
    result.evaluations += n;
    if (sink) {
      for (int i = 0; i < n; ++i) sink({it, i, scores[i], &population[i]});
    }
    auto top = SelectElites(population, scores, elites);
    result.center = MeanOf(population, top);
    if (scores[top[0]] > result.best_score) {
      result.best_score = scores[top[0]];
      result.best_latent = population[top[0]];
    }
    double elite_mean = 0.0;
    for (int i : top) elite_mean += scores[i];
    elite_mean /= static_cast<double>(top.size());
    CemIteration rec;
    rec.iteration = it;
    rec.best_score = scores[top[0]];
    rec.mean_score = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
    rec.elite_mean_score = elite_mean;
    rec.sigma = sigma;
    rec.evaluations = result.evaluations;
    result.history.push_back(rec);

    elite_means.push_back(elite_mean);
    if (static_cast<int>(elite_means.size()) >= config.plateau_window) {
      auto first = elite_means.end() - config.plateau_window;
      auto [lo, hi] = std::minmax_element(first, elite_means.end());
      if (*hi - *lo <= config.plateau_tolerance) {
        result.converged = true;
        break;
      }
    }
    if (config.sigma_decay) sigma *= config.sigma_decay_rate;
  }
  return result;
}

double Logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double DiversityMultiplier(const LatentVector& z, const std::vector<LatentVector>& retrieved) {
  if (retrieved.empty()) return 1.0;
  double best = -1.0;
  for (const auto& r : retrieved) best = std::max(best, CosineSimilarity(z, r));
  return Logistic(-best);
}

std::string PsiSequence::ToString() const {
  std::string out;
  for (int m : modes) out += std::to_string(m) + ' ';
  return out + "term";
}

PsiSequence SamplePsi(int k, Rng& rng) {
  if (k < 0) throw ConfigError("psi sampling needs k >= 0");
  const int fresh = k + 1;
  while (true) {
    PsiSequence psi;
    while (true) {
      int m = 1 + rng.UniformInt(fresh);
      psi.modes.push_back(m);
      if (m == fresh) break;
    }
    while (true) {
      int m = 1 + rng.UniformInt(fresh + 1);  // fresh + 1 stands for term
      if (m == fresh + 1) break;
      psi.modes.push_back(m);
    }
    if (static_cast<int>(psi.modes.size()) >= kMinPsiLength) return psi;
  }
}

PsiSequence SamplePsi(int k, std::uint64_t seed) {
  Rng rng(seed);
  return SamplePsi(k, rng);
}

double ProgramReturn(const Program& program, const TaskFactory& factory,
                     std::uint64_t eval_seed, const EvalSettings& settings) {
  double total = 0.0;
  for (int s = 0; s < settings.seeds; ++s) {
    auto task = factory(DeriveSeed(eval_seed, {static_cast<std::uint64_t>(s)}));
    total += Run(program, *task, settings.budget, settings.gamma).discounted_reward;
  }
  return total / settings.seeds;
}

double PsiReturn(const std::vector<const Program*>& sequence, TaskInstance& task,
                 const ExecBudget& budget, double gamma) {
  double total = 0.0;
  for (const Program* p : sequence) total += Run(*p, task, budget, gamma).discounted_reward;
  return total / static_cast<double>(sequence.size());
}

double CompatibilityObjective(const LatentVector& z, const ModeSet& prefix,
                              const std::vector<PsiSequence>& psis, const TaskFactory& factory,
                              std::uint64_t eval_seed, const EvalSettings& settings) {
  Program candidate = Decode(z);
  const int k = prefix.size();
  double total = 0.0;
  std::vector<const Program*> sequence;
  for (std::size_t d = 0; d < psis.size(); ++d) {
    sequence.clear();
    for (int m : psis[d].modes)
      sequence.push_back(m == k + 1 ? &candidate : &prefix.programs[static_cast<std::size_t>(m - 1)]);
    for (int s = 0; s < settings.seeds; ++s) {
      auto task = factory(DeriveSeed(eval_seed, {d, static_cast<std::uint64_t>(s)}));
      total += PsiReturn(sequence, *task, settings.budget, settings.gamma);
    }
  }
  double mean = total / (static_cast<double>(psis.size()) * settings.seeds);
  return mean * DiversityMultiplier(z, prefix.latents);
}

std::string_view VariantName(SearchVariant v) {
  switch (v) {
    case SearchVariant::kCemTimesM: return "cem-x-m";
    case SearchVariant::kCemDivTopK: return "cem-div-top-k";
    case SearchVariant::kCemDivTimesM: return "cem-div-x-m";
    case SearchVariant::kFull: return "full";
  }
  return "?";
}

std::optional<SearchVariant> VariantFromName(std::string_view name) {
  for (auto v : {SearchVariant::kCemTimesM, SearchVariant::kCemDivTopK,
                 SearchVariant::kCemDivTimesM, SearchVariant::kFull})
    if (VariantName(v) == name) return v;
  return std::nullopt;
}

long ExecutionsPerCall(SearchVariant variant, const RetrievalConfig& config) {
  long seeds = config.eval.seeds;
  return variant == SearchVariant::kFull ? seeds * config.psi_count : seeds;
}

namespace {

struct RunOutcome {
  LatentVector latent;
  double score;
};

// One CEM run, logged as restart `restart` of mode `mode`.
RunOutcome LoggedCem(const Objective& objective, const RetrievalConfig& config,
                     std::uint64_t seed, int mode, int restart, long exec_per_call,
                     RetrievalLog& log, const EvaluationSink& sink) {
  CandidateSink candidate_sink;
  if (sink) {
    candidate_sink = [&](const CandidateEvent& e) {
      sink({mode, restart, e.iteration, e.candidate, e.score, e.latent, exec_per_call});
    };
  }
  CemResult r = Cem(objective, config.cem, seed, config.policy, candidate_sink);
  RestartRecord rec;
  rec.mode = mode;
  rec.restart = restart;
  rec.score = r.best_score;
  rec.iterations = static_cast<int>(r.history.size());
  rec.evaluations = r.evaluations;
  rec.converged = r.converged;
  rec.program = Emit(Decode(r.best_latent));
  log.restarts.push_back(rec);
  log.total_executions += r.evaluations * exec_per_call;
  return {r.best_latent, r.best_score};
}

std::uint64_t RunSeed(std::uint64_t root, SearchVariant v, int mode, int restart) {
  return DeriveSeed(root, {kStreamSearch, static_cast<std::uint64_t>(v),
                           static_cast<std::uint64_t>(mode), static_cast<std::uint64_t>(restart)});
}

void Append(ModeSet& modes, const LatentVector& z) {
  modes.latents.push_back(z);
  modes.programs.push_back(Decode(z));
}

}  // namespace

RetrievalResult RunVariant(SearchVariant variant, TaskId task, int mode_count,
                           const TaskFactory& factory, const RetrievalConfig& config,
                           std::uint64_t seed, const EvaluationSink& sink) {
  config.cem.Validate();
  if (mode_count < 1) throw ConfigError("mode count must be >= 1");
  if (config.psi_count < 1) throw ConfigError("psi_count must be >= 1");
  if (config.eval.seeds < 1) throw ConfigError("eval.seeds must be >= 1");
  if (variant == SearchVariant::kCemDivTopK && config.cem.restarts < mode_count)
    throw ConfigError("top-k retrieval needs restarts >= mode count");

  RetrievalResult out;
  out.modes.task = task;
  RetrievalLog& log = out.log;
  const long per_call = ExecutionsPerCall(variant, config);
  const EvalSettings& eval = config.eval;

  auto plain = [&](const LatentVector& z, std::uint64_t es) {
    return ProgramReturn(Decode(z), factory, es, eval);
  };

  if (variant == SearchVariant::kCemDivTopK) {
    // Independent runs chained through the diversity term; keep the best
    // mode_count of them.
    std::vector<LatentVector> found;
    std::vector<RunOutcome> runs;
    for (int r = 0; r < config.cem.restarts; ++r) {
      Objective obj = [&](const LatentVector& z, std::uint64_t es) {
        return plain(z, es) * DiversityMultiplier(z, found);
      };
      auto o = LoggedCem(obj, config, RunSeed(seed, variant, 0, r), 0, r, per_call, log, sink);
      found.push_back(o.latent);
      runs.push_back(o);
    }
    std::stable_sort(runs.begin(), runs.end(),
                     [](const RunOutcome& a, const RunOutcome& b) { return a.score > b.score; });
    for (int m = 0; m < mode_count; ++m) Append(out.modes, runs[static_cast<std::size_t>(m)].latent);
    return out;
  }

  for (int m = 0; m < mode_count; ++m) {
    Objective obj;
    std::vector<PsiSequence> psis;
    if (variant == SearchVariant::kFull) {
      Rng psi_rng(DeriveSeed(seed, {kStreamPsi, static_cast<std::uint64_t>(m)}));
      for (int d = 0; d < config.psi_count; ++d) psis.push_back(SamplePsi(m, psi_rng));
      obj = [&](const LatentVector& z, std::uint64_t es) {
        return CompatibilityObjective(z, out.modes, psis, factory, es, eval);
      };
    } else if (variant == SearchVariant::kCemDivTimesM) {
      obj = [&](const LatentVector& z, std::uint64_t es) {
        return plain(z, es) * DiversityMultiplier(z, out.modes.latents);
      };
    } else {
      obj = plain;
    }
    log.psis.push_back(psis);
    RunOutcome best{{}, -std::numeric_limits<double>::infinity()};
    for (int r = 0; r < config.cem.restarts; ++r) {
      auto o = LoggedCem(obj, config, RunSeed(seed, variant, m, r), m, r, per_call, log, sink);
      if (o.score > best.score) best = o;
    }
    Append(out.modes, best.latent);
  }
  return out;
}

RetrievalResult RetrieveModes(TaskId task, int mode_count, const TaskFactory& factory,
                              const RetrievalConfig& config, std::uint64_t seed,
                              const EvaluationSink& sink) {
  return RunVariant(SearchVariant::kFull, task, mode_count, factory, config, seed, sink);
}

}  // namespace pomp
