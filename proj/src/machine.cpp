#include "pomp/machine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pomp/errors.hpp"

namespace pomp {

namespace {

constexpr int kChunk = 8;

int SampleIndex(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = rng.Uniform();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

int ArgMax(const Eigen::VectorXd& probs) {
  Eigen::Index best = 0;
  probs.maxCoeff(&best);
  return static_cast<int>(best);
}

struct BatchOutput {
  Eigen::MatrixXd probs;
  Eigen::VectorXd values;
};

// Forward pass over fixed column chunks so serial and parallel agree.
BatchOutput ForwardChunked(const TransitionNet& net, const Eigen::MatrixXd& obs,
                           const std::vector<int>& modes, ExecPolicy exec) {
  const int n = static_cast<int>(obs.cols());
  BatchOutput out{Eigen::MatrixXd(net.config().outputs, n), Eigen::VectorXd(n)};
  const int chunks = (n + kChunk - 1) / kChunk;
  ParallelFor(
      chunks,
      [&](int c) {
        const int begin = c * kChunk;
        const int len = std::min(kChunk, n - begin);
        const std::vector<int> sub(modes.begin() + begin, modes.begin() + begin + len);
        const ForwardCache f = net.Forward(obs.middleCols(begin, len), sub);
        out.probs.middleCols(begin, len) = f.probs;
        out.values.segment(begin, len) = f.value.transpose();
      },
      exec);
  return out;
}

LossValue LossPart(const TransitionNet& net, const PpoBatch& batch, int begin, int len,
                   double denom, double clip, const LossWeights& w, Eigen::VectorXd* grad) {
  const std::vector<int> modes(batch.mode_inputs.begin() + begin,
                               batch.mode_inputs.begin() + begin + len);
  const ForwardCache f = net.Forward(batch.obs.middleCols(begin, len), modes);
  const int outputs = static_cast<int>(f.logits.rows());
  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(outputs, len);
  Eigen::RowVectorXd dvalue = Eigen::RowVectorXd::Zero(len);
  LossValue loss;
  for (int j = 0; j < len; ++j) {
    const int idx = begin + j;
    const int a = batch.choices[static_cast<std::size_t>(idx)];
    const Eigen::VectorXd z = f.logits.col(j);
    const double m = z.maxCoeff();
    const double lse = m + std::log((z.array() - m).exp().sum());
    const Eigen::VectorXd logp = z.array() - lse;
    const Eigen::VectorXd p = f.probs.col(j);

    const double adv = batch.advantages(idx);
    const double ratio = std::exp(logp(a) - batch.old_log_probs(idx));
    const double surr1 = ratio * adv;
    const double surr2 = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv;
    loss.policy -= std::min(surr1, surr2) / denom;
    if (surr1 <= surr2) {
      const double g = -w.policy * ratio * adv / denom;
      dlogits.col(j) -= g * p;
      dlogits(a, j) += g;
    }

    const double h = -(p.array() * logp.array()).sum();
    loss.entropy += h / denom;
    dlogits.col(j).array() += w.entropy / denom * p.array() * (logp.array() + h);

    const double diff = f.value(j) - batch.returns(idx);
    loss.value += diff * diff / denom;
    dvalue(j) = 2.0 * w.value * diff / denom;
  }
  loss.total = w.policy * loss.policy + w.value * loss.value - w.entropy * loss.entropy;
  if (grad != nullptr) net.Backward(f, dlogits, dvalue, *grad);
  return loss;
}

void CheckFinite(const LossValue& loss, const Eigen::VectorXd& params) {
  if (!std::isfinite(loss.total)) throw DivergenceDetected("training loss is not finite");
  if (!params.allFinite()) throw DivergenceDetected("parameters are not finite");
}

}  // namespace

std::string_view MachineKindName(MachineKind k) {
  switch (k) {
    case MachineKind::kPomp: return "pomp";
    case MachineKind::kPsmp: return "psmp";
    case MachineKind::kDrl: return "drl";
  }
  return "?";
}

std::optional<MachineKind> MachineKindFromName(std::string_view name) {
  for (MachineKind k : {MachineKind::kPomp, MachineKind::kPsmp, MachineKind::kDrl})
    if (MachineKindName(k) == name) return k;
  return std::nullopt;
}

std::string_view StopReasonName(StopReason r) {
  switch (r) {
    case StopReason::kTerminated: return "terminated";
    case StopReason::kEpisodeDone: return "episode_done";
    case StopReason::kMaxPrograms: return "max_programs";
  }
  return "?";
}

ProgramMachinePolicy::ProgramMachinePolicy(ModeSet modes, const NetConfig& net, MachineKind kind)
    : modes_(std::move(modes)), net_(net), kind_(kind) {
  if (modes_.size() == 0) throw ConfigError("policy needs at least one mode");
  if (net.outputs != modes_.size() + 1 || net.mode_inputs != modes_.size() + 1)
    throw ConfigError("net shape does not match the mode count");
}

NetConfig ProgramMachinePolicy::DefaultNet(int mode_count, int height, int width) {
  NetConfig n;
  n.height = height;
  n.width = width;
  n.mode_inputs = mode_count + 1;
  n.outputs = mode_count + 1;
  return n;
}

int ProgramMachinePolicy::ModeInput(int current_mode) const {
  if (kind_ == MachineKind::kDrl) return 0;
  return current_mode + 1;
}

Eigen::VectorXd ProgramMachinePolicy::Probabilities(const GridWorld& world,
                                                    int current_mode) const {
  return net_.Probabilities(EncodeObservation(world), ModeInput(current_mode));
}

RolloutRecord Rollout(const ModeSet& modes, const ModeChooser& chooser, TaskInstance& task,
                      const RolloutOptions& options) {
  if (options.max_programs < 1) throw ConfigError("max_programs must be at least 1");
  RolloutRecord rec;
  const long start_actions = task.action_count();
  int current = kInitMode;
  while (true) {
    if (task.done()) {
      rec.stop = StopReason::kEpisodeDone;
      break;
    }
    if (static_cast<int>(rec.steps.size()) >= options.max_programs) {
      rec.stop = StopReason::kMaxPrograms;
      break;
    }
    const int choice = chooser(task.world(), current);
    if (choice == modes.size()) {
      rec.stop = StopReason::kTerminated;
      break;
    }
    const ExecSummary s =
        Run(modes.programs[static_cast<std::size_t>(choice)], task, options.budget, 1.0);
    RolloutStep step{choice, s.total_reward, s.actions, {}};
    if (options.snapshots) step.snapshot = task.world().Render();
    rec.steps.push_back(std::move(step));
    current = choice;
  }
  rec.episode_return = task.episode_return();
  rec.env_steps = task.action_count() - start_actions;
  return rec;
}

RolloutRecord PompRollout(const ProgramMachinePolicy& policy, TaskInstance& task,
                          Selection selection, Rng& rng, const RolloutOptions& options) {
  return Rollout(
      policy.modes(),
      [&](const GridWorld& world, int current) {
        const Eigen::VectorXd p = policy.Probabilities(world, current);
        return selection == Selection::kGreedy ? ArgMax(p) : SampleIndex(p, rng);
      },
      task, options);
}

RolloutRecord RandomTransitionRollout(const ModeSet& modes, TaskInstance& task,
                                      std::uint64_t seed, const RolloutOptions& options) {
  Rng rng(seed);
  return Rollout(
      modes, [&](const GridWorld&, int) { return rng.UniformInt(modes.size() + 1); }, task,
      options);
}

ModeSet PsmpModes(TaskId task) {
  ModeSet m;
  m.task = task;
  for (Action a : kAllActions) {
    m.latents.push_back(LatentVector{});
    m.programs.emplace_back(MakeAct(a));
  }
  return m;
}

void PpoConfig::Validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("ppo: clip must be in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo: gamma must be in (0, 1]");
  if (!(gae_lambda > 0.0 && gae_lambda <= 1.0))
    throw ConfigError("ppo: gae_lambda must be in (0, 1]");
  if (value_coef < 0.0 || entropy_coef < 0.0) throw ConfigError("ppo: negative coefficient");
  if (epochs < 1 || steps_per_iteration < 1 || actors < 1 || batch_size < 1)
    throw ConfigError("ppo: epochs, steps, actors and batch size must be positive");
  if (learning_rate < 0.0) throw ConfigError("ppo: negative learning rate");
  if (max_programs < 1 || updates < 1) throw ConfigError("ppo: max_programs and updates >= 1");
  if (validation_interval < 1 || validation_episodes < 1)
    throw ConfigError("ppo: validation interval and episodes must be positive");
  if (max_grad_norm <= 0.0) throw ConfigError("ppo: max_grad_norm must be positive");
  if (max_env_steps < 0) throw ConfigError("ppo: max_env_steps must be >= 0");
}

LossValue PpoLoss(const TransitionNet& net, const PpoBatch& batch, double clip,
                  const LossWeights& weights, Eigen::VectorXd* grad) {
  return LossPart(net, batch, 0, batch.size(), batch.size(), clip, weights, grad);
}

LossValue PpoLossChunked(const TransitionNet& net, const PpoBatch& batch, double clip,
                         const LossWeights& weights, Eigen::VectorXd* grad, ExecPolicy policy) {
  const int n = batch.size();
  const int chunks = (n + kChunk - 1) / kChunk;
  std::vector<LossValue> parts(static_cast<std::size_t>(chunks));
  std::vector<Eigen::VectorXd> grads(static_cast<std::size_t>(chunks));
  ParallelFor(
      chunks,
      [&](int c) {
        const std::size_t ci = static_cast<std::size_t>(c);
        const int begin = c * kChunk;
        if (grad != nullptr) grads[ci] = Eigen::VectorXd::Zero(net.ParamCount());
        parts[ci] = LossPart(net, batch, begin, std::min(kChunk, n - begin), n, clip, weights,
                             grad != nullptr ? &grads[ci] : nullptr);
      },
      policy);
  LossValue total;
  for (int c = 0; c < chunks; ++c) {
    const std::size_t ci = static_cast<std::size_t>(c);
    total.total += parts[ci].total;
    total.policy += parts[ci].policy;
    total.value += parts[ci].value;
    total.entropy += parts[ci].entropy;
    if (grad != nullptr) *grad += grads[ci];
  }
  return total;
}

double Entropy(const Eigen::VectorXd& probs) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i)
    if (probs(i) > 0.0) h -= probs(i) * std::log(probs(i));
  return h;
}

void ComputeGae(const std::vector<double>& rewards, const std::vector<double>& values,
                const std::vector<bool>& dones, double bootstrap_value, double gamma,
                double lambda, std::vector<double>& advantages, std::vector<double>& returns) {
  const std::size_t n = rewards.size();
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  double next_value = bootstrap_value;
  double next_adv = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double live = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * live - values[i];
    next_adv = delta + gamma * lambda * live * next_adv;
    advantages[i] = next_adv;
    returns[i] = next_adv + values[i];
    next_value = values[i];
  }
}

double ValidationReturn(const ProgramMachinePolicy& policy, const TaskFactory& factory,
                        const PpoConfig& config, std::uint64_t seed, ExecPolicy exec) {
  const int n = config.validation_episodes;
  const std::vector<double> returns = EvaluateBatch(
      n,
      [&](int i) {
        const std::uint64_t s = static_cast<std::uint64_t>(i);
        auto task = factory(DeriveSeed(seed, {kStreamValidation, s}));
        Rng rng(DeriveSeed(seed, {kStreamValidation, s, kStreamPolicy}));
        RolloutOptions opts;
        opts.max_programs = config.max_programs;
        opts.budget = config.budget;
        return PompRollout(policy, *task, Selection::kSample, rng, opts).episode_return;
      },
      exec);
  return std::accumulate(returns.begin(), returns.end(), 0.0) / n;
}

namespace {

struct Actor {
  std::unique_ptr<TaskInstance> task;
  Rng rng{0};
  int current = kInitMode;
  int programs = 0;
  std::uint64_t episode = 0;
  int index = 0;
};

void ResetActor(Actor& a, const TaskFactory& factory, std::uint64_t seed) {
  a.task = factory(DeriveSeed(seed, {kStreamTrain, static_cast<std::uint64_t>(a.index),
                                     a.episode}));
  ++a.episode;
  a.current = kInitMode;
  a.programs = 0;
}

}  // namespace

TrainResult TrainTransition(const ModeSet& modes, const TaskFactory& factory,
                            const PpoConfig& config, std::uint64_t seed, MachineKind kind,
                            ExecPolicy exec, const ProgressSink& sink) {
  config.Validate();
  const auto probe = factory(DeriveSeed(seed, {kStreamTrain}));
  const NetConfig net_config = ProgramMachinePolicy::DefaultNet(
      modes.size(), probe->world().height(), probe->world().width());
  ProgramMachinePolicy policy(modes, net_config, kind);
  {
    Rng init(DeriveSeed(seed, {kStreamInit}));
    policy.net().Initialize(init);
  }
  TransitionNet& net = policy.net();
  Adam adam(net.ParamCount(), AdamConfig{config.learning_rate});
  Rng shuffle(DeriveSeed(seed, {kStreamTrain, kStreamCem}));

  const int actor_count = config.actors;
  const int horizon = config.steps_per_iteration;
  const int obs_size = kObsChannels * net_config.height * net_config.width;
  std::vector<Actor> actors(static_cast<std::size_t>(actor_count));
  for (int i = 0; i < actor_count; ++i) {
    Actor& a = actors[static_cast<std::size_t>(i)];
    a.index = i;
    a.rng = Rng(DeriveSeed(seed, {kStreamPolicy, static_cast<std::uint64_t>(i)}));
    ResetActor(a, factory, seed);
  }

  TrainResult result{policy, {}, 0.0, 0};
  result.best_validation = ValidationReturn(policy, factory, config, seed, exec);
  double last_validation = result.best_validation;
  double last_mean = 0.0;
  long env_steps = 0;
  long program_execs = 0;

  const int total = actor_count * horizon;
  for (int update = 1; update <= config.updates; ++update) {
    // Rollout storage, sample index = t * actors + actor.
    Eigen::MatrixXd obs(obs_size, total);
    std::vector<int> mode_in(static_cast<std::size_t>(total));
    std::vector<int> choice(static_cast<std::size_t>(total));
    std::vector<double> logp(static_cast<std::size_t>(total));
    std::vector<double> value(static_cast<std::size_t>(total));
    std::vector<double> reward(static_cast<std::size_t>(total));
    std::vector<bool> done(static_cast<std::size_t>(total));
    std::vector<std::vector<double>> finished(static_cast<std::size_t>(actor_count));
    std::vector<long> actor_actions(static_cast<std::size_t>(actor_count), 0);
    std::vector<long> actor_execs(static_cast<std::size_t>(actor_count), 0);

    for (int t = 0; t < horizon; ++t) {
      const int base = t * actor_count;
      for (int i = 0; i < actor_count; ++i) {
        const Actor& a = actors[static_cast<std::size_t>(i)];
        obs.col(base + i) = EncodeObservation(a.task->world());
        mode_in[static_cast<std::size_t>(base + i)] = policy.ModeInput(a.current);
      }
      const std::vector<int> step_modes(mode_in.begin() + base,
                                        mode_in.begin() + base + actor_count);
      const BatchOutput out =
          ForwardChunked(net, obs.middleCols(base, actor_count), step_modes, exec);
      ParallelFor(
          actor_count,
          [&](int i) {
            const std::size_t k = static_cast<std::size_t>(base + i);
            Actor& a = actors[static_cast<std::size_t>(i)];
            const Eigen::VectorXd p = out.probs.col(i);
            const int c = SampleIndex(p, a.rng);
            choice[k] = c;
            logp[k] = std::log(std::max(p(c), std::numeric_limits<double>::min()));
            value[k] = out.values(i);
            bool ended = false;
            double r = 0.0;
            if (c == policy.term_choice()) {
              ended = true;
            } else {
              const long before = a.task->action_count();
              r = Run(modes.programs[static_cast<std::size_t>(c)], *a.task, config.budget, 1.0)
                      .total_reward;
              actor_actions[static_cast<std::size_t>(i)] += a.task->action_count() - before;
              actor_execs[static_cast<std::size_t>(i)] += 1;
              a.current = c;
              ++a.programs;
              ended = a.task->done() || a.programs >= config.max_programs;
            }
            reward[k] = r;
            done[k] = ended;
            if (ended) {
              finished[static_cast<std::size_t>(i)].push_back(a.task->episode_return());
              ResetActor(a, factory, seed);
            }
          },
          exec);
    }

    // Bootstrap values for the states after the last step.
    Eigen::MatrixXd last_obs(obs_size, actor_count);
    std::vector<int> last_modes(static_cast<std::size_t>(actor_count));
    for (int i = 0; i < actor_count; ++i) {
      const Actor& a = actors[static_cast<std::size_t>(i)];
      last_obs.col(i) = EncodeObservation(a.task->world());
      last_modes[static_cast<std::size_t>(i)] = policy.ModeInput(a.current);
    }
    const BatchOutput boot = ForwardChunked(net, last_obs, last_modes, exec);

    Eigen::VectorXd adv_all(total);
    Eigen::VectorXd ret_all(total);
    for (int i = 0; i < actor_count; ++i) {
      std::vector<double> r(static_cast<std::size_t>(horizon));
      std::vector<double> v(static_cast<std::size_t>(horizon));
      std::vector<bool> d(static_cast<std::size_t>(horizon));
      for (int t = 0; t < horizon; ++t) {
        const std::size_t k = static_cast<std::size_t>(t * actor_count + i);
        r[static_cast<std::size_t>(t)] = reward[k];
        v[static_cast<std::size_t>(t)] = value[k];
        d[static_cast<std::size_t>(t)] = done[k];
      }
      std::vector<double> adv;
      std::vector<double> ret;
      ComputeGae(r, v, d, boot.values(i), config.gamma, config.gae_lambda, adv, ret);
      for (int t = 0; t < horizon; ++t) {
        adv_all(t * actor_count + i) = adv[static_cast<std::size_t>(t)];
        ret_all(t * actor_count + i) = ret[static_cast<std::size_t>(t)];
      }
    }
    if (total > 1) {
      const double mean = adv_all.mean();
      const double sd = std::sqrt((adv_all.array() - mean).square().sum() / (total - 1));
      adv_all = (adv_all.array() - mean) / (sd + 1e-8);
    }

    std::vector<int> order(static_cast<std::size_t>(total));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), shuffle.engine());
      for (int start = 0; start < total; start += config.batch_size) {
        const int len = std::min(config.batch_size, total - start);
        PpoBatch mb;
        mb.obs.resize(obs_size, len);
        mb.mode_inputs.resize(static_cast<std::size_t>(len));
        mb.choices.resize(static_cast<std::size_t>(len));
        mb.old_log_probs.resize(len);
        mb.advantages.resize(len);
        mb.returns.resize(len);
        for (int j = 0; j < len; ++j) {
          const int k = order[static_cast<std::size_t>(start + j)];
          const std::size_t ks = static_cast<std::size_t>(k);
          mb.obs.col(j) = obs.col(k);
          mb.mode_inputs[static_cast<std::size_t>(j)] = mode_in[ks];
          mb.choices[static_cast<std::size_t>(j)] = choice[ks];
          mb.old_log_probs(j) = logp[ks];
          mb.advantages(j) = adv_all(k);
          mb.returns(j) = ret_all(k);
        }
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.ParamCount());
        const LossValue loss =
            PpoLossChunked(net, mb, config.clip,
                           LossWeights{1.0, config.value_coef, config.entropy_coef}, &grad, exec);
        CheckFinite(loss, grad);
        const double norm = grad.norm();
        if (norm > config.max_grad_norm) grad *= config.max_grad_norm / norm;
        adam.Step(net.params(), grad);
        CheckFinite(loss, net.params());
      }
    }

    std::vector<double> returns;
    for (int i = 0; i < actor_count; ++i) {
      env_steps += actor_actions[static_cast<std::size_t>(i)];
      program_execs += actor_execs[static_cast<std::size_t>(i)];
      for (double r : finished[static_cast<std::size_t>(i)]) returns.push_back(r);
    }
    if (!returns.empty())
      last_mean = std::accumulate(returns.begin(), returns.end(), 0.0) /
                  static_cast<double>(returns.size());

    const bool budget_hit = config.max_env_steps > 0 && env_steps >= config.max_env_steps;
    const bool last = update == config.updates || budget_hit;
    if (update % config.validation_interval == 0 || last) {
      last_validation = ValidationReturn(policy, factory, config, seed, exec);
      if (last_validation > result.best_validation) {
        result.best_validation = last_validation;
        result.best_update = update;
        result.policy.net().params() = net.params();
      }
    }
    CurvePoint point{update, env_steps, program_execs, last_mean, last_validation};
    result.curve.push_back(point);
    if (sink) sink(point);
    if (budget_hit) break;
  }
  return result;
}

TrainResult DrlTrain(TaskId task, const TaskFactory& factory, PpoConfig config,
                     std::uint64_t seed, ExecPolicy exec, const ProgressSink& sink) {
  if (config.max_env_steps == 0) config.max_env_steps = 200000;
  config.max_programs = CatalogEntry(task).horizon;
  const long per_update = static_cast<long>(config.actors) * config.steps_per_iteration;
  config.updates = static_cast<int>(
      std::max<long>(config.updates, (config.max_env_steps + per_update - 1) / per_update));
  return TrainTransition(PsmpModes(task), factory, config, seed, MachineKind::kDrl, exec, sink);
}

}  // namespace pomp
