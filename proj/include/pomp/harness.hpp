#ifndef POMP_HARNESS_HPP_
#define POMP_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pomp/extract.hpp"
#include "pomp/machine.hpp"
#include "pomp/search.hpp"
#include "pomp/tasks.hpp"

namespace pomp {

inline constexpr int kConfigVersion = 1;
inline constexpr int kCheckpointVersion = 1;

// Everything a run needs. Loaded from a versioned JSON file; every field
// has a default so a config may list only what it changes.
struct RunConfig {
  TaskId task = TaskId::kMaze;
  std::uint64_t seed = 0;
  TaskOptions task_options;

  SearchVariant variant = SearchVariant::kFull;
  int mode_count = 0;  // 0: the catalog count for the task
  RetrievalConfig retrieval;

  MachineKind kind = MachineKind::kPomp;
  PpoConfig ppo;

  int episodes = 32;
  std::uint64_t seed_base = 1000000;
  Selection selection = Selection::kSample;

  std::vector<int> factors{2, 4, 8, 16};

  int h = 8;
  int calibration_episodes = 32;
  int heldout_episodes = 32;

  int ModeCount() const;
  void Validate() const;  // throws ConfigError
};

// Throws ConfigError on a bad version, unknown key or bad value.
RunConfig ParseConfig(const std::string& text);
RunConfig LoadConfig(const std::filesystem::path& path);
std::string ConfigToJson(const RunConfig& config);

// Plays one episode on `task`; `episode_seed` feeds any policy randomness.
struct PolicyRunner {
  std::string id;
  std::function<RolloutRecord(TaskInstance& task, std::uint64_t episode_seed)> run;
};

PolicyRunner MachineRunner(const ProgramMachinePolicy& policy, Selection selection,
                           const RolloutOptions& options = {});
PolicyRunner RandomTransitionRunner(const ModeSet& modes, const RolloutOptions& options = {});
// Chooses term at once.
PolicyRunner TerminateRunner();

struct EvalReport {
  std::string task;
  std::string policy;
  double mean_return = 0.0;
  double std_return = 0.0;  // sample std over episodes
  int episodes = 0;
  std::uint64_t seed_base = 0;
  std::vector<double> returns;
  long longest_steps = 0;  // most environment actions in one episode

  std::string ToJson() const;
};

// Episode i runs on task seed seed_base + i.
EvalReport Evaluate(const PolicyRunner& runner, TaskId task, const TaskOptions& options,
                    int episodes, std::uint64_t seed_base,
                    ExecPolicy exec = ExecPolicy::kParallel);

struct SeedAggregate {
  double mean = 0.0;
  double std = 0.0;  // sample std of per-seed means
  std::vector<double> seed_means;
};
SeedAggregate AggregateSeeds(const std::vector<EvalReport>& reports);

struct GeneralizationEntry {
  int factor = 1;
  double mean_return = 0.0;
  double drop_percent = 0.0;
  long longest_steps = 0;
};

struct GeneralizationReport {
  std::string task;
  double base_return = 0.0;
  std::vector<GeneralizationEntry> entries;
  std::string ToJson() const;
};

// Farmer or Inf-Harvester only. Throws UnsupportedScale for other tasks.
GeneralizationReport InductiveEval(const PolicyRunner& runner, TaskId task,
                                   const std::vector<int>& factors, int episodes,
                                   std::uint64_t seed_base, const TaskOptions& base = {},
                                   ExecPolicy exec = ExecPolicy::kParallel);

// Cumulative program executions after one CEM iteration, with its best
// score.
struct SearchPoint {
  long executions = 0;
  double best_score = 0.0;
};

struct EfficiencyPoint {
  long executions = 0;
  double best_return = 0.0;
};

// x strictly increasing, y the running maximum.
std::vector<EfficiencyPoint> EfficiencyCurve(const std::vector<SearchPoint>& search,
                                             const std::vector<CurvePoint>& train);
// Reads retrieval.jsonl and, when present, curve.csv. Throws MissingLog.
std::vector<EfficiencyPoint> EfficiencyLog(const std::filesystem::path& run_dir);

std::string ModesToJson(const ModeSet& modes);
ModeSet ModesFromJson(const std::string& text);

struct Checkpoint {
  TaskId task = TaskId::kMaze;
  TaskOptions options;
  ProgramMachinePolicy policy;
};

void SaveCheckpoint(const std::filesystem::path& path, TaskId task, const TaskOptions& options,
                    const ProgramMachinePolicy& policy);
// Throws CheckpointMismatch on a malformed or inconsistent file.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

std::string CurveToCsv(const std::vector<CurvePoint>& curve);

// Run-directory phases. Each writes its files under `dir`.
// search: config.json, modes.json, retrieval.jsonl.
RetrievalResult RunSearchPhase(const RunConfig& config, const std::filesystem::path& dir);
// train: pomp.ckpt, curve.csv. POMP reads modes.json from `dir`.
TrainResult RunTrainPhase(const RunConfig& config, const std::filesystem::path& dir);
// eval: eval.json from pomp.ckpt.
EvalReport RunEvalPhase(const RunConfig& config, const std::filesystem::path& dir);

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, const std::string& text);

}  // namespace pomp

#endif  // POMP_HARNESS_HPP_
