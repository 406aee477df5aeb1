// pomp: command-line front end for search, training, evaluation and
// extraction. Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pomp/errors.hpp"
#include "pomp/harness.hpp"

namespace {

using pomp::RunConfig;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> task;
  std::string out;
};

void AddCommon(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file (version 1)");
  app->add_option("--seed", c.seed, "Root seed");
  app->add_option("--task", c.task, "Task name");
  app->add_option("--out", c.out, "Output directory");
}

RunConfig Resolve(const Common& c) {
  RunConfig config = c.config.empty() ? RunConfig{} : pomp::LoadConfig(c.config);
  if (c.seed) config.seed = *c.seed;
  if (c.task) {
    auto t = pomp::TaskFromName(*c.task);
    if (!t)
      throw pomp::ConfigError("unknown task '" + *c.task + "'; valid tasks: " +
                              pomp::TaskNameList());
    config.task = *t;
  }
  config.Validate();
  return config;
}

fs::path OutDir(const Common& c) {
  if (c.out.empty()) throw pomp::ConfigError("--out is required");
  return c.out;
}

pomp::Checkpoint CheckpointFor(const std::string& path, const Common& c) {
  pomp::Checkpoint ckpt = pomp::LoadCheckpoint(path);
  if (c.task) {
    auto t = pomp::TaskFromName(*c.task);
    if (!t)
      throw pomp::ConfigError("unknown task '" + *c.task + "'; valid tasks: " +
                              pomp::TaskNameList());
    if (*t != ckpt.task)
      throw pomp::CheckpointMismatch("checkpoint was trained on " +
                                     std::string(pomp::TaskName(ckpt.task)));
  }
  return ckpt;
}

pomp::RolloutOptions RolloutFor(const RunConfig& config, const pomp::Checkpoint& ckpt) {
  pomp::RolloutOptions o;
  o.budget = config.ppo.budget;
  o.max_programs = ckpt.policy.kind() == pomp::MachineKind::kDrl
                       ? pomp::CatalogEntry(ckpt.task).horizon * ckpt.options.scale
                       : config.ppo.max_programs;
  return o;
}

std::vector<std::uint64_t> SeedRange(std::uint64_t first, int n) {
  std::vector<std::uint64_t> s;
  for (int i = 0; i < n; ++i) s.push_back(first + static_cast<std::uint64_t>(i));
  return s;
}

// Replays the actions of one program execution on a fresh copy, one frame
// per action.
void ReplayProgram(const pomp::Program& program, const pomp::TaskInstance& start,
                   std::ostream& out) {
  auto probe = start.Clone();
  const pomp::ExecTrace trace = pomp::Execute(program, *probe);
  auto live = start.Clone();
  out << "t=0\n" << live->world().Render() << "\n";
  for (std::size_t i = 0; i < trace.actions.size(); ++i) {
    const double r = live->ApplyAction(trace.actions[i]);
    out << "t=" << i + 1 << " " << pomp::ActionName(trace.actions[i]) << " reward=" << r
        << "\n"
        << live->world().Render() << "\n";
  }
  out << "termination=" << pomp::TerminationName(trace.termination)
      << " return=" << live->episode_return() << "\n";
}

int Main(int argc, char** argv) {
  CLI::App app{"Program machine policy toolkit"};
  app.require_subcommand(1);

  Common search_opts;
  auto* search = app.add_subcommand("search", "Retrieve a mode set by CEM search");
  AddCommon(search, search_opts);

  Common train_opts;
  std::optional<std::string> kind;
  auto* train = app.add_subcommand("train", "Train a transition function (pomp, psmp, drl)");
  AddCommon(train, train_opts);
  train->add_option("--kind", kind, "pomp, psmp or drl");

  Common eval_opts;
  std::string eval_ckpt;
  std::string eval_modes;
  int eval_episodes = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint; report JSON on stdout");
  AddCommon(eval, eval_opts);
  eval->add_option("--checkpoint", eval_ckpt, "Policy checkpoint");
  eval->add_option("--random-transition", eval_modes,
                   "Evaluate uniform transitions over this modes.json instead");
  eval->add_option("--episodes", eval_episodes, "Episode count (default from config)");

  Common gen_opts;
  std::string gen_ckpt;
  auto* gen = app.add_subcommand("generalize", "Inductive evaluation at scaled horizons");
  AddCommon(gen, gen_opts);
  gen->add_option("--checkpoint", gen_ckpt, "Policy checkpoint")->required();

  Common ext_opts;
  std::string ext_ckpt;
  std::optional<int> ext_h;
  auto* ext = app.add_subcommand("extract", "Extract a finite state machine from a checkpoint");
  AddCommon(ext, ext_opts);
  ext->add_option("--checkpoint", ext_ckpt, "Policy checkpoint")->required();
  ext->add_option("--quant-size", ext_h, "Quantized feature size h");

  Common rep_opts;
  std::string rep_ckpt;
  std::string rep_program;
  std::uint64_t rep_episode = 0;
  auto* rep = app.add_subcommand("replay", "Render an episode as plain-text frames");
  AddCommon(rep, rep_opts);
  rep->add_option("--checkpoint", rep_ckpt, "Policy checkpoint (one frame per mode)");
  rep->add_option("--program", rep_program, "Program text (one frame per action)");
  rep->add_option("--episode-seed", rep_episode, "Task instance seed");

  Common corpus_opts;
  int corpus_count = 10;
  auto* corpus = app.add_subcommand("corpus", "Sample programs from the decoder prior");
  AddCommon(corpus, corpus_opts);
  corpus->add_option("--count", corpus_count, "Number of programs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (search->parsed()) {
    const RunConfig config = Resolve(search_opts);
    const fs::path dir = OutDir(search_opts);
    const auto result = pomp::RunSearchPhase(config, dir);
    std::cout << pomp::ModesToJson(result.modes);
    std::cerr << "total program executions: " << result.log.total_executions << "\n";
    return 0;
  }

  if (train->parsed()) {
    RunConfig config = Resolve(train_opts);
    if (kind) {
      auto k = pomp::MachineKindFromName(*kind);
      if (!k) throw pomp::ConfigError("unknown --kind '" + *kind + "'; valid: pomp, psmp, drl");
      config.kind = *k;
    }
    const fs::path dir = OutDir(train_opts);
    fs::create_directories(dir);
    pomp::WriteFile(dir / "config.json", pomp::ConfigToJson(config));
    const auto result = pomp::RunTrainPhase(config, dir);
    nlohmann::json j = {{"best_validation", result.best_validation},
                        {"best_update", result.best_update},
                        {"updates", result.curve.size()}};
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  if (eval->parsed()) {
    RunConfig config = Resolve(eval_opts);
    const int episodes = eval_episodes > 0 ? eval_episodes : config.episodes;
    pomp::EvalReport report;
    if (!eval_modes.empty()) {
      const pomp::ModeSet modes = pomp::ModesFromJson(pomp::ReadFile(eval_modes));
      pomp::RolloutOptions o;
      o.max_programs = config.ppo.max_programs;
      o.budget = config.ppo.budget;
      report = pomp::Evaluate(pomp::RandomTransitionRunner(modes, o), modes.task,
                              config.task_options, episodes, config.seed_base);
    } else {
      std::string path = eval_ckpt;
      if (path.empty() && !eval_opts.out.empty()) path = (fs::path(eval_opts.out) / "pomp.ckpt").string();
      if (path.empty()) throw pomp::ConfigError("eval needs --checkpoint or --out");
      const pomp::Checkpoint ckpt = CheckpointFor(path, eval_opts);
      report = pomp::Evaluate(pomp::MachineRunner(ckpt.policy, config.selection, RolloutFor(config, ckpt)),
                              ckpt.task, ckpt.options, episodes, config.seed_base);
    }
    if (!eval_opts.out.empty()) {
      fs::create_directories(eval_opts.out);
      pomp::WriteFile(fs::path(eval_opts.out) / "eval.json", report.ToJson());
    }
    std::cout << report.ToJson();
    return 0;
  }

  if (gen->parsed()) {
    const RunConfig config = Resolve(gen_opts);
    const pomp::Checkpoint ckpt = CheckpointFor(gen_ckpt, gen_opts);
    const auto report = pomp::InductiveEval(
        pomp::MachineRunner(ckpt.policy, config.selection, RolloutFor(config, ckpt)), ckpt.task,
        config.factors, config.episodes, config.seed_base, ckpt.options);
    if (!gen_opts.out.empty()) {
      fs::create_directories(gen_opts.out);
      pomp::WriteFile(fs::path(gen_opts.out) / "generalize.json", report.ToJson());
    }
    std::cout << report.ToJson();
    return 0;
  }

  if (ext->parsed()) {
    RunConfig config = Resolve(ext_opts);
    if (ext_h) config.h = *ext_h;
    config.Validate();
    const pomp::Checkpoint ckpt = CheckpointFor(ext_ckpt, ext_opts);
    const auto factory = pomp::MakeFactory(ckpt.task, ckpt.options);
    const auto options = RolloutFor(config, ckpt);
    const std::uint64_t base = config.seed_base;
    const auto cal = pomp::CollectDecisions(ckpt.policy, factory,
                                            SeedRange(base, config.calibration_episodes), options);
    const auto held = pomp::CollectDecisions(
        ckpt.policy, factory,
        SeedRange(base + static_cast<std::uint64_t>(config.calibration_episodes),
                  config.heldout_episodes),
        options);
    const pomp::ExtractedMachine machine = pomp::BuildTable(ckpt.policy, cal, config.h);
    const auto fc = pomp::Fidelity(machine, cal);
    const auto fh = pomp::Fidelity(machine, held);
    if (!ext_opts.out.empty()) {
      fs::create_directories(ext_opts.out);
      pomp::WriteFile(fs::path(ext_opts.out) / "machine.json", machine.ToJson());
      pomp::WriteFile(fs::path(ext_opts.out) / "machine.dot", machine.ToDot());
    }
    nlohmann::json j = {{"h", config.h},
                        {"classes", machine.classes().size()},
                        {"states", machine.state_count()},
                        {"conflicts", machine.conflicts()},
                        {"calibration_fidelity", fc.rate},
                        {"heldout_fidelity", fh.rate},
                        {"heldout_ci", {fh.ci_low, fh.ci_high}},
                        {"heldout_steps", fh.total}};
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  if (rep->parsed()) {
    const RunConfig config = Resolve(rep_opts);
    if (!rep_program.empty()) {
      const pomp::Program program = pomp::Parse(rep_program);
      auto task = pomp::MakeTask(config.task, rep_episode, config.task_options);
      ReplayProgram(program, *task, std::cout);
      return 0;
    }
    if (rep_ckpt.empty()) throw pomp::ConfigError("replay needs --program or --checkpoint");
    const pomp::Checkpoint ckpt = CheckpointFor(rep_ckpt, rep_opts);
    auto task = pomp::MakeTask(ckpt.task, rep_episode, ckpt.options);
    std::cout << "start\n" << task->world().Render() << "\n";
    pomp::Rng rng(pomp::DeriveSeed(rep_episode, {pomp::kStreamPolicy}));
    pomp::RolloutOptions options = RolloutFor(config, ckpt);
    options.snapshots = true;
    const auto record =
        pomp::PompRollout(ckpt.policy, *task, config.selection, rng, options);
    for (std::size_t i = 0; i < record.steps.size(); ++i) {
      const auto& s = record.steps[i];
      std::cout << "step " << i + 1 << " mode M" << s.mode + 1 << " actions=" << s.actions
                << " reward=" << s.reward << "\n"
                << s.snapshot << "\n";
    }
    std::cout << "stop=" << pomp::StopReasonName(record.stop)
              << " return=" << record.episode_return << "\n";
    return 0;
  }

  if (corpus->parsed()) {
    const RunConfig config = Resolve(corpus_opts);
    if (corpus_count < 1) throw pomp::ConfigError("--count must be >= 1");
    for (const auto& p : pomp::SamplePrograms(corpus_count, config.seed))
      std::cout << pomp::Emit(p) << "\n";
    return 0;
  }
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return Main(argc, argv);
  } catch (const pomp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const pomp::UnsupportedScale& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const pomp::SyntaxError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const pomp::UnknownToken& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
