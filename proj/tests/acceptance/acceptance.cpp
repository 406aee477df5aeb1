// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 only
// when every selected criterion passes.
//
//   pomp_acceptance [--only 1,4,9] [--golden-dir DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pomp/extract.hpp"
#include "pomp/harness.hpp"
#include "pomp/interpreter.hpp"
#include "pomp/progspace.hpp"
#include "pomp/search.hpp"
#include "support/fixed_task.hpp"
#include "support/golden.hpp"
#include "support/gradcheck.hpp"
#include "support/players.hpp"

namespace pomp {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Tolerances and limits.
constexpr int kRoundTripPrograms = 10000;
constexpr double kRoundTripSeconds = 10.0;
constexpr double kGoldenMinReturn = 0.95;
constexpr std::size_t kBudgetActions = 200;
constexpr double kCemMaxDistance = 0.05;
constexpr int kCemIterations = 300;
constexpr double kCemSeconds = 30.0;
constexpr double kLogisticMinusOne = 0.268941;
constexpr double kLogisticTolerance = 1e-6;
constexpr double kOracleTolerance = 1e-10;
constexpr int kSmokeIterations = 200;
constexpr double kSmokeSeconds = 600.0;
constexpr double kGradTolerance = 1e-4;
constexpr int kGradNets = 20;
constexpr double kMinGap = 0.2;
constexpr int kGapEpisodes = 32;
constexpr double kGapSeconds = 1800.0;
constexpr double kNormalizedTolerance = 0.01;
constexpr double kHeldOutFidelity = 0.95;
constexpr int kSeeds = 5;
constexpr int kMinPassingSeeds = 3;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string Fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

LatentVector RandomLatent(Rng& rng) {
  LatentVector z;
  for (double& v : z) v = rng.Normal();
  return z;
}

Outcome DslRoundTrip() {
  auto t0 = Clock::now();
  auto programs = SamplePrograms(kRoundTripPrograms, 2024);
  int ok = 0;
  for (const auto& p : programs) {
    std::string text = Emit(p);
    Program back = Parse(text);
    ok += back == p && Emit(back) == text ? 1 : 0;
  }
  double secs = Since(t0);
  return {ok == kRoundTripPrograms && secs < kRoundTripSeconds,
          std::to_string(ok) + "/" + std::to_string(kRoundTripPrograms) + Fmt(" in %.2fs", secs)};
}

Outcome GoldenTraces(const fs::path& dir) {
  int ok = 0;
  int total = 0;
  std::string bad;
  for (const auto& e : Catalog()) {
    ++total;
    auto c = testing::CheckGolden(dir, e.id);
    if (c.identical && c.player_agrees && c.gross_return >= kGoldenMinReturn) {
      ++ok;
    } else {
      bad += " " + std::string(e.name) + Fmt("(%.3f)", c.gross_return);
    }
  }
  return {ok == total && total == 15,
          std::to_string(ok) + "/" + std::to_string(total) + " byte-identical, return >= 0.95" +
              bad};
}

Outcome ActionBudget() {
  // Room with a clear front; the Seeder horizon (500) is well past the
  // program budget.
  testing::FixedTask t({"##########", "#........#", "#...>....#", "#........#", "##########"},
                       0.0, TaskId::kSeeder);
  auto trace =
      Execute(Parse("DEF run m( WHILE c( frontIsClear c) w( turnLeft turnRight w) m)"), t);
  return {trace.actions.size() == kBudgetActions &&
              trace.termination == Termination::kActionBudgetExhausted,
          std::to_string(trace.actions.size()) + " actions, " +
              std::string(TerminationName(trace.termination))};
}

Outcome CemSanity() {
  auto t0 = Clock::now();
  CemConfig c;
  c.noise_sigma = 1.0;
  c.sigma_decay_rate = 0.975;
  c.max_iterations = kCemIterations;
  int ok = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Rng rng(DeriveSeed(seed, {99}));
    auto target = RandomLatent(rng);
    auto objective = [&](const LatentVector& z, std::uint64_t) {
      double s = 0.0;
      for (int i = 0; i < kLatentDim; ++i) s += (z[i] - target[i]) * (z[i] - target[i]);
      return -s;
    };
    auto r = Cem(objective, c, seed);
    double d = std::sqrt(-objective(r.center, 0));
    worst = std::max(worst, d);
    ok += d < kCemMaxDistance && static_cast<int>(r.history.size()) <= kCemIterations ? 1 : 0;
  }
  double secs = Since(t0);
  return {ok == kSeeds && secs < kCemSeconds,
          std::to_string(ok) + "/5 seeds, worst distance" + Fmt(" %.4f in %.1fs", worst, secs)};
}

Outcome DiversityNumerics() {
  Rng rng(7);
  auto z = RandomLatent(rng);
  double same = DiversityMultiplier(z, {z});
  bool decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int i = -10; i <= 10; ++i) {
    double cos = i / 10.0;
    LatentVector a{};
    LatentVector b{};
    a[0] = 1.0;
    b[0] = cos;
    b[1] = std::sqrt(std::max(0.0, 1.0 - cos * cos));
    double m = DiversityMultiplier(a, {b});
    decreasing = decreasing && m < prev;
    prev = m;
  }
  return {std::abs(same - kLogisticMinusOne) <= kLogisticTolerance && decreasing,
          Fmt("identical %.7f, ", same) + (decreasing ? "strictly decreasing" : "not monotone")};
}

// Independent recomputation of the compatibility objective from raw traces.
double BruteCompatibility(const LatentVector& z, const ModeSet& prefix,
                          const std::vector<PsiSequence>& psis, const TaskFactory& factory,
                          std::uint64_t eval_seed, const EvalSettings& s) {
  Program candidate = Decode(z);
  double sum = 0.0;
  int count = 0;
  for (std::uint64_t d = 0; d < psis.size(); ++d) {
    for (int seed = 0; seed < s.seeds; ++seed) {
      auto task = factory(DeriveSeed(eval_seed, {d, static_cast<std::uint64_t>(seed)}));
      double psi_total = 0.0;
      for (int mode : psis[d].modes) {
        const Program& p = mode <= prefix.size() ? prefix.programs[mode - 1] : candidate;
        ExecTrace trace = Execute(p, *task, s.budget);
        double g = 1.0;
        for (double r : trace.rewards) {
          psi_total += g * r;
          g *= s.gamma;
        }
      }
      sum += psi_total / static_cast<double>(psis[d].modes.size());
      ++count;
    }
  }
  double best_cos = -1.0;
  for (const auto& o : prefix.latents) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < kLatentDim; ++i) {
      dot += z[i] * o[i];
      na += z[i] * z[i];
      nb += o[i] * o[i];
    }
    best_cos = std::max(best_cos, dot / std::sqrt(na * nb));
  }
  double multiplier = prefix.latents.empty() ? 1.0 : 1.0 / (1.0 + std::exp(best_cos));
  return sum / count * multiplier;
}

Outcome CompatibilityOracle() {
  // 4x4 grid, 2x2 interior; marker counts depend on the instance seed.
  TaskFactory factory = [](std::uint64_t seed) {
    std::string row1 = "#>" + std::to_string(1 + seed % 4) + "#";
    std::string row2 = "#" + std::to_string(seed % 3) + std::to_string(2 + seed % 2) + "#";
    return std::unique_ptr<TaskInstance>(
        std::make_unique<testing::FixedTask>(std::vector<std::string>{"####", row1, row2, "####"},
                                             0.25));
  };
  ModeSet prefix;
  Rng rng(31);
  prefix.programs.push_back(
      Parse("DEF run m( move pickMarker turnRight move pickMarker turnRight move pickMarker m)"));
  prefix.latents.push_back(RandomLatent(rng));
  std::vector<PsiSequence> psis = {{{1, 2}}, {{2, 1}}, {{2, 2, 1}}, {{1, 2, 1, 2}}};
  EvalSettings s;
  s.seeds = 3;
  s.gamma = 0.9;
  double worst = 0.0;
  double largest = 0.0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    auto z = RandomLatent(rng);
    std::uint64_t eval_seed = rng.engine()();
    double a = CompatibilityObjective(z, prefix, psis, factory, eval_seed, s);
    double b = BruteCompatibility(z, prefix, psis, factory, eval_seed, s);
    worst = std::max(worst, std::abs(a - b));
    largest = std::max(largest, std::abs(a));
  }
  return {worst <= kOracleTolerance && largest > 0.0,
          Fmt("%.0f candidates, max |diff| %.2e, max objective %.4f", trials, worst, largest)};
}

Outcome SearchSmoke() {
  auto t0 = Clock::now();
  struct Target {
    TaskId task;
    double threshold;
    int eval_seeds;
    int passed = 0;
  };
  std::vector<Target> targets = {{TaskId::kMaze, 1.0, 16}, {TaskId::kStairClimber, 0.9, 8}};
  std::string detail;
  for (auto& t : targets) {
    auto factory = MakeFactory(t.task);
    for (int s = 0; s < kSeeds; ++s) {
      RetrievalConfig rc;
      rc.cem.max_iterations = kSmokeIterations;
      rc.cem.restarts = 10;
      rc.eval.seeds = t.eval_seeds;
      auto r = RunVariant(SearchVariant::kCemTimesM, t.task, 1, factory, rc, 1000 + s);
      EvalSettings held;
      held.seeds = 32;
      held.gamma = 1.0;
      double ret = ProgramReturn(r.modes.programs.front(), factory, 99, held);
      t.passed += ret >= t.threshold - 1e-9 ? 1 : 0;
    }
    detail += std::string(TaskName(t.task)) + " " + std::to_string(t.passed) + "/5, ";
  }
  double secs = Since(t0);
  bool ok = secs < kSmokeSeconds;
  for (const auto& t : targets) ok = ok && t.passed >= kMinPassingSeeds;
  return {ok, detail + Fmt("%.0fs", secs)};
}

Outcome GradientChecks() {
  double worst = 0.0;
  int skipped = 0;
  const LossWeights terms[] = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  for (int t = 0; t < 3; ++t)
    for (int n = 0; n < kGradNets; ++n)
      worst = std::max(worst, testing::MaxRelativeError(terms[t], 100 * (t + 1) + n, &skipped));
  return {worst < kGradTolerance,
          Fmt("60 checks, max relative error %.2e, %.0f kinked probes skipped", worst, skipped)};
}

// Seesaw with 8 emerging markers: retrieval, training, then held-out episodes.
struct SeesawRun {
  ModeSet modes;
  TrainResult trained;
};

TaskOptions SeesawOptions() {
  TaskOptions o;
  o.target_override = 8;
  return o;
}

PpoConfig SeesawPpo() {
  PpoConfig pc;
  pc.actors = 8;
  pc.steps_per_iteration = 16;
  pc.updates = 200;
  pc.learning_rate = 1e-3;
  pc.validation_interval = 25;
  return pc;
}

const SeesawRun& TrainedSeesaw(std::uint64_t seed) {
  static std::map<std::uint64_t, SeesawRun> cache;
  auto it = cache.find(seed);
  if (it != cache.end()) return it->second;
  auto factory = MakeFactory(TaskId::kSeesaw, SeesawOptions());
  RetrievalConfig rc;
  rc.cem.max_iterations = 100;
  rc.cem.restarts = 2;
  rc.eval.seeds = 4;
  rc.psi_count = 4;
  auto modes = RetrieveModes(TaskId::kSeesaw, CatalogEntry(TaskId::kSeesaw).mode_count, factory,
                             rc, seed)
                   .modes;
  auto trained = TrainTransition(modes, factory, SeesawPpo(), seed);
  return cache.emplace(seed, SeesawRun{modes, std::move(trained)}).first->second;
}

Outcome PompBeatsRandom() {
  auto t0 = Clock::now();
  int ok = 0;
  std::string gaps;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto& run = TrainedSeesaw(seed);
    auto pomp = Evaluate(MachineRunner(run.trained.policy, Selection::kSample), TaskId::kSeesaw,
                         SeesawOptions(), kGapEpisodes, 1000000);
    auto random =
        Evaluate(RandomTransitionRunner(run.modes), TaskId::kSeesaw, SeesawOptions(),
                 kGapEpisodes, 1000000);
    double gap = pomp.mean_return - random.mean_return;
    ok += gap >= kMinGap ? 1 : 0;
    gaps += Fmt(" %.3f", gap);
  }
  double secs = Since(t0);
  return {ok >= kMinPassingSeeds && secs < kGapSeconds,
          std::to_string(ok) + "/5 seeds, gaps" + gaps + Fmt(", %.0fs", secs)};
}

Outcome InductiveNormalization() {
  const std::vector<int> factors = {2, 4, 8, 16};
  auto report = InductiveEval(testing::ReferenceRunner(), TaskId::kFarmer, factors, 2, 7);
  bool ok = std::abs(report.base_return - 1.0) <= kNormalizedTolerance &&
            report.entries.size() == factors.size();
  std::string detail = Fmt("base %.4f", report.base_return);
  for (const auto& e : report.entries) {
    ok = ok && std::abs(e.mean_return - 1.0) <= kNormalizedTolerance;
    detail += Fmt(", x%.0f %.4f", e.factor, e.mean_return);
  }
  return {ok, detail};
}

Outcome ExtractionFidelity() {
  const auto& run = TrainedSeesaw(0);
  auto factory = MakeFactory(TaskId::kSeesaw, SeesawOptions());
  std::vector<std::uint64_t> calibration;
  std::vector<std::uint64_t> held_out;
  for (std::uint64_t i = 0; i < 32; ++i) {
    calibration.push_back(1000 + i);
    held_out.push_back(5000 + i);
  }
  RolloutOptions ro;
  ro.max_programs = 200;
  auto cal = CollectDecisions(run.trained.policy, factory, calibration, ro);
  auto held = CollectDecisions(run.trained.policy, factory, held_out, ro);
  auto machine = BuildTable(run.trained.policy, cal, 8);
  auto a = Fidelity(machine, cal);
  auto b = Fidelity(machine, held);
  return {a.agree == a.total && a.total > 0 && b.rate >= kHeldOutFidelity,
          Fmt("calibration %.4f, held-out %.4f", a.rate, b.rate) + " over " +
              std::to_string(b.total) + " steps, " + std::to_string(machine.state_count()) +
              " states"};
}

Outcome AblationPlumbing() {
  const TaskId task = TaskId::kUpNDown;
  const int modes = CatalogEntry(task).mode_count;
  RetrievalConfig rc;
  rc.cem.population_size = 8;
  rc.cem.max_iterations = 3;
  rc.cem.restarts = modes;
  rc.cem.plateau_window = 1000;
  rc.eval.seeds = 2;
  rc.psi_count = 2;
  bool ok = true;
  std::set<std::string> logs;
  std::string detail;
  for (auto v : {SearchVariant::kCemTimesM, SearchVariant::kCemDivTopK,
                 SearchVariant::kCemDivTimesM, SearchVariant::kFull}) {
    auto r = RunVariant(v, task, modes, MakeFactory(task), rc, 1);
    const std::size_t runs =
        static_cast<std::size_t>(v == SearchVariant::kCemDivTopK ? rc.cem.restarts
                                                                 : modes * rc.cem.restarts);
    ok = ok && r.modes.size() == modes && r.log.restarts.size() == runs;
    std::ostringstream log;
    for (const auto& rec : r.log.restarts)
      log << rec.mode << ' ' << rec.restart << ' ' << rec.score << ' ' << rec.program << '\n';
    logs.insert(log.str());
    detail += std::string(VariantName(v)) + " " + std::to_string(r.modes.size()) + " modes/" +
              std::to_string(r.log.restarts.size()) + " runs, ";
  }
  ok = ok && logs.size() == 4;
  return {ok, detail + std::to_string(logs.size()) + " distinct logs"};
}

Outcome PipelineDeterminism() {
  RunConfig c = ParseConfig(R"({
    "version": 1, "task": "seesaw", "seed": 11,
    "task_options": {"target_override": 8},
    "search": {"max_iterations": 5, "restarts": 1, "eval_seeds": 2, "psi_count": 2,
               "population_size": 16},
    "train": {"actors": 4, "steps_per_iteration": 8, "updates": 4, "validation_interval": 2,
              "validation_episodes": 4, "max_programs": 50, "learning_rate": 0.001},
    "eval": {"episodes": 8}
  })");
  const fs::path root = fs::temp_directory_path() / "pomp_acceptance_determinism";
  fs::remove_all(root);
  std::vector<fs::path> dirs = {root / "a", root / "b"};
  for (const auto& d : dirs) {
    fs::create_directories(d);
    RunSearchPhase(c, d);
    RunTrainPhase(c, d);
    RunEvalPhase(c, d);
  }
  bool ok = true;
  std::string detail;
  for (const char* f : {"modes.json", "eval.json"}) {
    bool same = ReadFile(dirs[0] / f) == ReadFile(dirs[1] / f);
    ok = ok && same;
    detail += std::string(f) + (same ? " identical, " : " differs, ");
  }
  fs::remove_all(root);
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

}  // namespace
}  // namespace pomp

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::vector<int> only;
  std::string golden_dir = POMP_GOLDEN_DIR;
  app.add_option("--only", only, "Criteria to run")->delimiter(',')->check(CLI::Range(1, 13));
  app.add_option("--golden-dir", golden_dir, "Directory of golden trace files");
  CLI11_PARSE(app, argc, argv);

  using pomp::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"dsl round trip", pomp::DslRoundTrip},
      {"golden traces", [&] { return pomp::GoldenTraces(golden_dir); }},
      {"action budget", pomp::ActionBudget},
      {"cem sanity", pomp::CemSanity},
      {"diversity multiplier", pomp::DiversityNumerics},
      {"compatibility oracle", pomp::CompatibilityOracle},
      {"search smoke", pomp::SearchSmoke},
      {"gradient checks", pomp::GradientChecks},
      {"pomp vs random transition", pomp::PompBeatsRandom},
      {"inductive normalization", pomp::InductiveNormalization},
      {"extraction fidelity", pomp::ExtractionFidelity},
      {"ablation plumbing", pomp::AblationPlumbing},
      {"pipeline determinism", pomp::PipelineDeterminism},
  };
  std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += o.pass ? 0 : 1;
    std::printf("%s %2d %-26s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
