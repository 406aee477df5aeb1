#ifndef POMP_MACHINE_HPP_
#define POMP_MACHINE_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pomp/interpreter.hpp"
#include "pomp/kernels.hpp"
#include "pomp/nn.hpp"
#include "pomp/search.hpp"
#include "pomp/tasks.hpp"

namespace pomp {

// kDrl feeds the init one-hot at every step, so its decisions depend on the
// grid state only.
enum class MachineKind { kPomp, kPsmp, kDrl };
std::string_view MachineKindName(MachineKind k);
std::optional<MachineKind> MachineKindFromName(std::string_view name);

// Current-mode value before any mode has been chosen.
inline constexpr int kInitMode = -1;

class ProgramMachinePolicy {
 public:
  ProgramMachinePolicy(ModeSet modes, const NetConfig& net, MachineKind kind);

  // Network shape for `modes` on a grid of the given size.
  static NetConfig DefaultNet(int mode_count, int height, int width);

  const ModeSet& modes() const { return modes_; }
  int mode_count() const { return modes_.size(); }
  // Choice index meaning "stop": the last output.
  int term_choice() const { return mode_count(); }
  MachineKind kind() const { return kind_; }
  TransitionNet& net() { return net_; }
  const TransitionNet& net() const { return net_; }

  // One-hot slot for the current mode: 0 for init, i + 1 for mode i.
  int ModeInput(int current_mode) const;
  Eigen::VectorXd Probabilities(const GridWorld& world, int current_mode) const;

 private:
  ModeSet modes_;
  TransitionNet net_;
  MachineKind kind_;
};

enum class StopReason { kTerminated, kEpisodeDone, kMaxPrograms };
std::string_view StopReasonName(StopReason r);

struct RolloutStep {
  int mode = 0;          // 0-based; term steps are not recorded
  double reward = 0.0;   // undiscounted sum over the program's actions
  int actions = 0;
  std::string snapshot;  // world after the program, when requested
};

struct RolloutRecord {
  std::vector<RolloutStep> steps;
  double episode_return = 0.0;
  StopReason stop = StopReason::kTerminated;
  long env_steps = 0;
};

// Picks the next choice in [0, |M|] given the live world and current mode.
using ModeChooser = std::function<int(const GridWorld& world, int current_mode)>;

struct RolloutOptions {
  int max_programs = 1000;
  ExecBudget budget;
  bool snapshots = false;
};

RolloutRecord Rollout(const ModeSet& modes, const ModeChooser& chooser, TaskInstance& task,
                      const RolloutOptions& options = {});

enum class Selection { kSample, kGreedy };

// Mode-machine rollout driven by the transition net.
RolloutRecord PompRollout(const ProgramMachinePolicy& policy, TaskInstance& task,
                          Selection selection, Rng& rng, const RolloutOptions& options = {});

// Uniform choice over |M| + 1 at every step.
RolloutRecord RandomTransitionRollout(const ModeSet& modes, TaskInstance& task,
                                      std::uint64_t seed, const RolloutOptions& options = {});

// Five modes, mode i running the single primitive i.
ModeSet PsmpModes(TaskId task);

struct PpoConfig {
  double clip = 0.05;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double value_coef = 0.5;
  double entropy_coef = 0.1;
  int epochs = 4;
  int steps_per_iteration = 32;  // decision steps per actor per update
  int actors = 32;
  int batch_size = 32;
  double learning_rate = 1e-4;
  int max_programs = 1000;
  int updates = 100;
  long max_env_steps = 0;  // stop early once reached; 0 disables
  int validation_interval = 50;
  int validation_episodes = 32;
  double max_grad_norm = 0.5;
  ExecBudget budget;

  void Validate() const;  // throws ConfigError
};

// One PPO minibatch. Column j of obs pairs with entry j elsewhere.
struct PpoBatch {
  Eigen::MatrixXd obs;
  std::vector<int> mode_inputs;
  std::vector<int> choices;
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
  int size() const { return static_cast<int>(choices.size()); }
};

struct LossWeights {
  double policy = 1.0;
  double value = 0.5;
  double entropy = 0.1;
};

struct LossValue {
  double total = 0.0;
  double policy = 0.0;   // clipped surrogate, negated for minimization
  double value = 0.0;    // mean squared error
  double entropy = 0.0;  // mean entropy
};

// total = policy * Lclip + value * MSE - entropy * H, each a batch mean.
// Adds dTotal/dParams to *grad when grad is non-null.
LossValue PpoLoss(const TransitionNet& net, const PpoBatch& batch, double clip,
                  const LossWeights& weights, Eigen::VectorXd* grad);

// Same loss evaluated over fixed chunks of the batch; the serial and
// parallel paths sum chunk gradients in chunk order.
LossValue PpoLossChunked(const TransitionNet& net, const PpoBatch& batch, double clip,
                         const LossWeights& weights, Eigen::VectorXd* grad, ExecPolicy policy);

double Entropy(const Eigen::VectorXd& probs);

// Generalized advantage estimates for one trajectory segment. dones[t] marks
// that the episode ended after step t.
void ComputeGae(const std::vector<double>& rewards, const std::vector<double>& values,
                const std::vector<bool>& dones, double bootstrap_value, double gamma,
                double lambda, std::vector<double>& advantages, std::vector<double>& returns);

struct CurvePoint {
  int update = 0;
  long env_steps = 0;
  long program_execs = 0;
  double mean_return = 0.0;  // episodes finished during this update
  double val_return = 0.0;   // latest validation mean
};

struct TrainResult {
  ProgramMachinePolicy policy;
  std::vector<CurvePoint> curve;
  double best_validation = 0.0;
  int best_update = 0;
};

using ProgressSink = std::function<void(const CurvePoint&)>;

// Mean return over the validation episode schedule for `seed`.
double ValidationReturn(const ProgramMachinePolicy& policy, const TaskFactory& factory,
                        const PpoConfig& config, std::uint64_t seed, ExecPolicy exec);

// Throws DivergenceDetected on a non-finite loss or parameter.
TrainResult TrainTransition(const ModeSet& modes, const TaskFactory& factory,
                            const PpoConfig& config, std::uint64_t seed,
                            MachineKind kind = MachineKind::kPomp,
                            ExecPolicy exec = ExecPolicy::kParallel,
                            const ProgressSink& sink = {});

// PPO over primitives plus termination, one decision per action. The
// episode cap is the task horizon and training stops at max_env_steps.
TrainResult DrlTrain(TaskId task, const TaskFactory& factory, PpoConfig config,
                     std::uint64_t seed, ExecPolicy exec = ExecPolicy::kParallel,
                     const ProgressSink& sink = {});

}  // namespace pomp

#endif  // POMP_MACHINE_HPP_
