#include "pomp/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pomp/errors.hpp"

namespace pomp {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Reads the keys of one config object and rejects any it did not consume.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }

  template <class T>
  void Get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(Path(key) + ": wrong type");
    }
  }

  template <class T>
  void GetOptional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T v{};
    Get(key, v);
    out = v;
  }

  void GetString(const char* key, std::string& out) { Get(key, out); }

  Section Child(const char* key) {
    seen_.insert(key);
    static const json kEmpty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : kEmpty, Path(key));
  }

  void Finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) throw ConfigError("unknown config key " + Path(k.c_str()));
  }

  std::string Path(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

json OptionsJson(const TaskOptions& o) {
  json j;
  j["scale"] = o.scale;
  j["target_override"] = o.target_override ? json(*o.target_override) : json(nullptr);
  j["emerging_probability"] =
      o.emerging_probability ? json(*o.emerging_probability) : json(nullptr);
  return j;
}

TaskOptions OptionsFromSection(Section s) {
  TaskOptions o;
  s.Get("scale", o.scale);
  s.GetOptional("target_override", o.target_override);
  s.GetOptional("emerging_probability", o.emerging_probability);
  s.Finish();
  return o;
}

TaskId TaskByName(const std::string& name) {
  auto t = TaskFromName(name);
  if (!t) throw ConfigError("unknown task '" + name + "'; valid tasks: " + TaskNameList());
  return *t;
}

std::string_view SelectionName(Selection s) {
  return s == Selection::kGreedy ? "greedy" : "sample";
}

double SampleStd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / static_cast<double>(v.size() - 1));
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t TakeLE(const std::string& in, std::size_t& pos, int bytes) {
  if (pos + static_cast<std::size_t>(bytes) > in.size())
    throw CheckpointMismatch("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += static_cast<std::size_t>(bytes);
  return v;
}

constexpr char kMagic[] = "POMPCKPT";

json NetJson(const NetConfig& n) {
  return {{"height", n.height},
          {"width", n.width},
          {"conv1_filters", n.conv1_filters},
          {"conv1_kernel", n.conv1_kernel},
          {"conv2_filters", n.conv2_filters},
          {"conv2_kernel", n.conv2_kernel},
          {"feature_dim", n.feature_dim},
          {"hidden_dim", n.hidden_dim},
          {"mode_inputs", n.mode_inputs},
          {"outputs", n.outputs}};
}

NetConfig NetFromJson(const json& j) {
  NetConfig n;
  n.height = j.at("height");
  n.width = j.at("width");
  n.conv1_filters = j.at("conv1_filters");
  n.conv1_kernel = j.at("conv1_kernel");
  n.conv2_filters = j.at("conv2_filters");
  n.conv2_kernel = j.at("conv2_kernel");
  n.feature_dim = j.at("feature_dim");
  n.hidden_dim = j.at("hidden_dim");
  n.mode_inputs = j.at("mode_inputs");
  n.outputs = j.at("outputs");
  return n;
}

json ModesJsonValue(const ModeSet& modes) {
  json list = json::array();
  for (int i = 0; i < modes.size(); ++i) {
    const auto& z = modes.latents[static_cast<std::size_t>(i)];
    list.push_back({{"index", i + 1},
                    {"program", Emit(modes.programs[static_cast<std::size_t>(i)])},
                    {"latent", std::vector<double>(z.begin(), z.end())}});
  }
  return {{"version", kConfigVersion}, {"task", TaskName(modes.task)}, {"modes", list}};
}

ModeSet ModesFromValue(const json& j) {
  ModeSet m;
  m.task = TaskByName(j.at("task").get<std::string>());
  for (const auto& e : j.at("modes")) {
    m.programs.push_back(Parse(e.at("program").get<std::string>()));
    LatentVector z{};
    if (e.contains("latent")) {
      const auto v = e.at("latent").get<std::vector<double>>();
      if (v.size() != z.size()) throw ConfigError("modes: latent must have 256 entries");
      std::copy(v.begin(), v.end(), z.begin());
    }
    m.latents.push_back(z);
  }
  if (m.programs.empty()) throw ConfigError("modes: empty mode list");
  return m;
}

std::string FormatDouble(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace

int RunConfig::ModeCount() const {
  return mode_count > 0 ? mode_count : CatalogEntry(task).mode_count;
}

void RunConfig::Validate() const {
  retrieval.cem.Validate();
  ppo.Validate();
  if (retrieval.eval.seeds < 1) throw ConfigError("search.eval_seeds must be >= 1");
  if (retrieval.psi_count < 1) throw ConfigError("search.psi_count must be >= 1");
  if (mode_count < 0) throw ConfigError("search.mode_count must be >= 0");
  if (episodes < 1) throw ConfigError("eval.episodes must be >= 1");
  for (int f : factors)
    if (f != 2 && f != 4 && f != 8 && f != 16)
      throw ConfigError("generalize.factors must be drawn from 2, 4, 8, 16");
  if (h < 1 || h > 32) throw ConfigError("extract.h must be in [1, 32]");
  if (calibration_episodes < 1 || heldout_episodes < 1)
    throw ConfigError("extract episode counts must be >= 1");
  if (task_options.scale != 1 && task_options.scale != 2 && task_options.scale != 4 &&
      task_options.scale != 8 && task_options.scale != 16)
    throw ConfigError("task_options.scale must be one of 1, 2, 4, 8, 16");
}

RunConfig ParseConfig(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Section root(j, "");
  int version = 0;
  root.Get("version", version);
  if (version != kConfigVersion)
    throw ConfigError("config version must be " + std::to_string(kConfigVersion));
  RunConfig c;
  std::string task = std::string(TaskName(c.task));
  root.GetString("task", task);
  c.task = TaskByName(task);
  root.Get("seed", c.seed);
  c.task_options = OptionsFromSection(root.Child("task_options"));

  Section s = root.Child("search");
  std::string variant = std::string(VariantName(c.variant));
  s.GetString("variant", variant);
  auto v = VariantFromName(variant);
  if (!v) throw ConfigError("unknown search.variant '" + variant + "'");
  c.variant = *v;
  s.Get("mode_count", c.mode_count);
  CemConfig& cem = c.retrieval.cem;
  s.Get("population_size", cem.population_size);
  s.Get("noise_sigma", cem.noise_sigma);
  s.Get("elite_fraction", cem.elite_fraction);
  s.Get("sigma_decay", cem.sigma_decay);
  s.Get("sigma_decay_rate", cem.sigma_decay_rate);
  s.Get("max_iterations", cem.max_iterations);
  s.Get("restarts", cem.restarts);
  s.Get("plateau_window", cem.plateau_window);
  s.Get("plateau_tolerance", cem.plateau_tolerance);
  s.Get("gamma", c.retrieval.eval.gamma);
  cem.gamma = c.retrieval.eval.gamma;
  s.Get("eval_seeds", c.retrieval.eval.seeds);
  s.Get("psi_count", c.retrieval.psi_count);
  s.Get("action_budget", c.retrieval.eval.budget.action_budget);
  s.Get("tick_budget", c.retrieval.eval.budget.tick_budget);
  s.Finish();

  Section t = root.Child("train");
  std::string kind = std::string(MachineKindName(c.kind));
  t.GetString("kind", kind);
  auto k = MachineKindFromName(kind);
  if (!k) throw ConfigError("unknown train.kind '" + kind + "'; valid: pomp, psmp, drl");
  c.kind = *k;
  PpoConfig& p = c.ppo;
  t.Get("clip", p.clip);
  t.Get("gamma", p.gamma);
  t.Get("gae_lambda", p.gae_lambda);
  t.Get("value_coef", p.value_coef);
  t.Get("entropy_coef", p.entropy_coef);
  t.Get("epochs", p.epochs);
  t.Get("steps_per_iteration", p.steps_per_iteration);
  t.Get("actors", p.actors);
  t.Get("batch_size", p.batch_size);
  t.Get("learning_rate", p.learning_rate);
  t.Get("max_programs", p.max_programs);
  t.Get("updates", p.updates);
  t.Get("max_env_steps", p.max_env_steps);
  t.Get("validation_interval", p.validation_interval);
  t.Get("validation_episodes", p.validation_episodes);
  t.Get("max_grad_norm", p.max_grad_norm);
  t.Get("action_budget", p.budget.action_budget);
  t.Get("tick_budget", p.budget.tick_budget);
  t.Finish();

  Section e = root.Child("eval");
  e.Get("episodes", c.episodes);
  e.Get("seed_base", c.seed_base);
  std::string selection = std::string(SelectionName(c.selection));
  e.GetString("selection", selection);
  if (selection == "sample") {
    c.selection = Selection::kSample;
  } else if (selection == "greedy") {
    c.selection = Selection::kGreedy;
  } else {
    throw ConfigError("eval.selection must be sample or greedy");
  }
  e.Finish();

  Section g = root.Child("generalize");
  g.Get("factors", c.factors);
  g.Finish();

  Section x = root.Child("extract");
  x.Get("h", c.h);
  x.Get("calibration_episodes", c.calibration_episodes);
  x.Get("heldout_episodes", c.heldout_episodes);
  x.Finish();

  root.Finish();
  c.Validate();
  return c;
}

RunConfig LoadConfig(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return ParseConfig(ReadFile(path));
}

std::string ConfigToJson(const RunConfig& c) {
  const CemConfig& cem = c.retrieval.cem;
  const PpoConfig& p = c.ppo;
  json j;
  j["version"] = kConfigVersion;
  j["task"] = TaskName(c.task);
  j["seed"] = c.seed;
  j["task_options"] = OptionsJson(c.task_options);
  j["search"] = {{"variant", VariantName(c.variant)},
                 {"mode_count", c.mode_count},
                 {"population_size", cem.population_size},
                 {"noise_sigma", cem.noise_sigma},
                 {"elite_fraction", cem.elite_fraction},
                 {"sigma_decay", cem.sigma_decay},
                 {"sigma_decay_rate", cem.sigma_decay_rate},
                 {"max_iterations", cem.max_iterations},
                 {"restarts", cem.restarts},
                 {"plateau_window", cem.plateau_window},
                 {"plateau_tolerance", cem.plateau_tolerance},
                 {"gamma", c.retrieval.eval.gamma},
                 {"eval_seeds", c.retrieval.eval.seeds},
                 {"psi_count", c.retrieval.psi_count},
                 {"action_budget", c.retrieval.eval.budget.action_budget},
                 {"tick_budget", c.retrieval.eval.budget.tick_budget}};
  j["train"] = {{"kind", MachineKindName(c.kind)},
                {"clip", p.clip},
                {"gamma", p.gamma},
                {"gae_lambda", p.gae_lambda},
                {"value_coef", p.value_coef},
                {"entropy_coef", p.entropy_coef},
                {"epochs", p.epochs},
                {"steps_per_iteration", p.steps_per_iteration},
                {"actors", p.actors},
                {"batch_size", p.batch_size},
                {"learning_rate", p.learning_rate},
                {"max_programs", p.max_programs},
                {"updates", p.updates},
                {"max_env_steps", p.max_env_steps},
                {"validation_interval", p.validation_interval},
                {"validation_episodes", p.validation_episodes},
                {"max_grad_norm", p.max_grad_norm},
                {"action_budget", p.budget.action_budget},
                {"tick_budget", p.budget.tick_budget}};
  j["eval"] = {{"episodes", c.episodes},
               {"seed_base", c.seed_base},
               {"selection", SelectionName(c.selection)}};
  j["generalize"] = {{"factors", c.factors}};
  j["extract"] = {{"h", c.h},
                  {"calibration_episodes", c.calibration_episodes},
                  {"heldout_episodes", c.heldout_episodes}};
  return j.dump(2) + "\n";
}

PolicyRunner MachineRunner(const ProgramMachinePolicy& policy, Selection selection,
                           const RolloutOptions& options) {
  return {std::string(MachineKindName(policy.kind())) + "/" + std::string(SelectionName(selection)),
          [policy, selection, options](TaskInstance& task, std::uint64_t seed) {
            Rng rng(seed);
            return PompRollout(policy, task, selection, rng, options);
          }};
}

PolicyRunner RandomTransitionRunner(const ModeSet& modes, const RolloutOptions& options) {
  return {"random-transition", [modes, options](TaskInstance& task, std::uint64_t seed) {
            return RandomTransitionRollout(modes, task, seed, options);
          }};
}

PolicyRunner TerminateRunner() {
  return {"terminate", [](TaskInstance& task, std::uint64_t) {
            RolloutRecord r;
            r.episode_return = task.episode_return();
            return r;
          }};
}

std::string EvalReport::ToJson() const {
  json j = {{"version", kConfigVersion},
            {"task", task},
            {"policy", policy},
            {"episodes", episodes},
            {"seed_base", seed_base},
            {"mean_return", mean_return},
            {"std_return", std_return},
            {"longest_steps", longest_steps},
            {"returns", returns}};
  return j.dump(2) + "\n";
}

EvalReport Evaluate(const PolicyRunner& runner, TaskId task, const TaskOptions& options,
                    int episodes, std::uint64_t seed_base, ExecPolicy exec) {
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  std::vector<RolloutRecord> records(static_cast<std::size_t>(episodes));
  ParallelFor(
      episodes,
      [&](int i) {
        const std::uint64_t s = seed_base + static_cast<std::uint64_t>(i);
        auto instance = MakeTask(task, s, options);
        records[static_cast<std::size_t>(i)] =
            runner.run(*instance, DeriveSeed(s, {kStreamPolicy}));
      },
      exec);
  EvalReport r;
  r.task = std::string(TaskName(task));
  r.policy = runner.id;
  r.episodes = episodes;
  r.seed_base = seed_base;
  for (const auto& rec : records) {
    r.returns.push_back(rec.episode_return);
    r.longest_steps = std::max(r.longest_steps, rec.env_steps);
  }
  r.mean_return = std::accumulate(r.returns.begin(), r.returns.end(), 0.0) / episodes;
  r.std_return = SampleStd(r.returns);
  return r;
}

SeedAggregate AggregateSeeds(const std::vector<EvalReport>& reports) {
  SeedAggregate a;
  for (const auto& r : reports) a.seed_means.push_back(r.mean_return);
  if (a.seed_means.empty()) return a;
  a.mean = std::accumulate(a.seed_means.begin(), a.seed_means.end(), 0.0) /
           static_cast<double>(a.seed_means.size());
  a.std = SampleStd(a.seed_means);
  return a;
}

std::string GeneralizationReport::ToJson() const {
  json list = json::array();
  for (const auto& e : entries)
    list.push_back({{"factor", e.factor},
                    {"mean_return", e.mean_return},
                    {"drop_percent", e.drop_percent},
                    {"longest_steps", e.longest_steps}});
  json j = {{"version", kConfigVersion},
            {"task", task},
            {"base_return", base_return},
            {"factors", list}};
  return j.dump(2) + "\n";
}

GeneralizationReport InductiveEval(const PolicyRunner& runner, TaskId task,
                                   const std::vector<int>& factors, int episodes,
                                   std::uint64_t seed_base, const TaskOptions& base,
                                   ExecPolicy exec) {
  if (task != TaskId::kFarmer && task != TaskId::kInfHarvester)
    throw UnsupportedScale("inductive evaluation covers farmer and inf-harvester only");
  GeneralizationReport report;
  report.task = std::string(TaskName(task));
  TaskOptions opts = base;
  opts.scale = 1;
  report.base_return = Evaluate(runner, task, opts, episodes, seed_base, exec).mean_return;
  for (int f : factors) {
    TaskOptions scaled = opts;
    scaled.scale = f;
    scaled.emerging_probability.reset();
    const EvalReport r = Evaluate(runner, task, scaled, episodes, seed_base, exec);
    GeneralizationEntry e;
    e.factor = f;
    e.mean_return = r.mean_return;
    e.longest_steps = r.longest_steps;
    if (report.base_return > 0.0)
      e.drop_percent = (report.base_return - r.mean_return) / report.base_return * 100.0;
    report.entries.push_back(e);
  }
  return report;
}

std::vector<EfficiencyPoint> EfficiencyCurve(const std::vector<SearchPoint>& search,
                                             const std::vector<CurvePoint>& train) {
  std::vector<EfficiencyPoint> out;
  double running = -std::numeric_limits<double>::infinity();
  auto push = [&](long x, double y) {
    running = std::max(running, y);
    if (!out.empty() && x <= out.back().executions) {
      out.back().best_return = running;
      return;
    }
    out.push_back({x, running});
  };
  long offset = 0;
  for (const auto& s : search) {
    push(s.executions, s.best_score);
    offset = s.executions;
  }
  for (const auto& t : train) push(offset + t.program_execs, t.val_return);
  return out;
}

std::vector<EfficiencyPoint> EfficiencyLog(const fs::path& run_dir) {
  const fs::path retrieval = run_dir / "retrieval.jsonl";
  const fs::path curve = run_dir / "curve.csv";
  if (!fs::exists(retrieval) && !fs::exists(curve))
    throw MissingLog("no retrieval.jsonl or curve.csv in " + run_dir.string());
  std::vector<SearchPoint> search;
  if (fs::exists(retrieval)) {
    std::istringstream in(ReadFile(retrieval));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (j.at("type") == "iteration")
        search.push_back({j.at("executions").get<long>(), j.at("best_score").get<double>()});
    }
  }
  std::vector<CurvePoint> train;
  if (fs::exists(curve)) {
    std::istringstream in(ReadFile(curve));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream row(line);
      CurvePoint p;
      row >> p.update >> p.env_steps >> p.program_execs >> p.mean_return >> p.val_return;
      if (!row) throw MissingLog("malformed curve.csv row: " + line);
      train.push_back(p);
    }
  }
  return EfficiencyCurve(search, train);
}

std::string ModesToJson(const ModeSet& modes) { return ModesJsonValue(modes).dump(2) + "\n"; }

ModeSet ModesFromJson(const std::string& text) {
  try {
    return ModesFromValue(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed modes file: ") + e.what());
  }
}

void SaveCheckpoint(const fs::path& path, TaskId task, const TaskOptions& options,
                    const ProgramMachinePolicy& policy) {
  json manifest = json::array();
  for (const auto& l : policy.net().manifest())
    manifest.push_back({{"name", l.name}, {"rows", l.rows}, {"cols", l.cols}, {"offset", l.offset}});
  const json header = {{"task", TaskName(task)},
                       {"task_options", OptionsJson(options)},
                       {"kind", MachineKindName(policy.kind())},
                       {"modes", ModesJsonValue(policy.modes())},
                       {"net", NetJson(policy.net().config())},
                       {"manifest", manifest}};
  const std::string text = header.dump();
  std::string out(kMagic, 8);
  PutU32(out, kCheckpointVersion);
  PutU64(out, text.size());
  out += text;
  const Eigen::VectorXd& params = policy.net().params();
  PutU64(out, static_cast<std::uint64_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i)
    PutU64(out, std::bit_cast<std::uint64_t>(params(i)));
  WriteFile(path, out);
}

Checkpoint LoadCheckpoint(const fs::path& path) {
  if (!fs::exists(path)) throw CheckpointMismatch("checkpoint not found: " + path.string());
  const std::string in = ReadFile(path);
  if (in.size() < 8 || in.compare(0, 8, kMagic, 8) != 0)
    throw CheckpointMismatch("not a checkpoint file: " + path.string());
  std::size_t pos = 8;
  const auto version = TakeLE(in, pos, 4);
  if (version != kCheckpointVersion)
    throw CheckpointMismatch("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = TakeLE(in, pos, 8);
  if (pos + header_len > in.size()) throw CheckpointMismatch("checkpoint truncated");
  try {
    const json header = json::parse(in.substr(pos, header_len));
    pos += header_len;
    const TaskId task = TaskByName(header.at("task").get<std::string>());
    Section opts(header.at("task_options"), "task_options");
    const TaskOptions options = OptionsFromSection(opts);
    const auto kind = MachineKindFromName(header.at("kind").get<std::string>());
    if (!kind) throw CheckpointMismatch("unknown policy kind in checkpoint");
    ProgramMachinePolicy policy(ModesFromValue(header.at("modes")),
                                NetFromJson(header.at("net")), *kind);
    const auto& manifest = policy.net().manifest();
    const json& stored = header.at("manifest");
    if (stored.size() != manifest.size()) throw CheckpointMismatch("layer manifest differs");
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      if (stored[i].at("rows") != manifest[i].rows || stored[i].at("cols") != manifest[i].cols ||
          stored[i].at("offset") != manifest[i].offset)
        throw CheckpointMismatch("layer manifest differs at " + manifest[i].name);
    }
    const auto count = TakeLE(in, pos, 8);
    if (count != static_cast<std::uint64_t>(policy.net().ParamCount()))
      throw CheckpointMismatch("parameter count does not match the network");
    for (std::uint64_t i = 0; i < count; ++i)
      policy.net().params()(static_cast<Eigen::Index>(i)) =
          std::bit_cast<double>(TakeLE(in, pos, 8));
    if (pos != in.size()) throw CheckpointMismatch("trailing bytes after parameters");
    return {task, options, std::move(policy)};
  } catch (const json::exception& e) {
    throw CheckpointMismatch(std::string("bad checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointMismatch(std::string("bad checkpoint header: ") + e.what());
  }
}

std::string CurveToCsv(const std::vector<CurvePoint>& curve) {
  std::string out = "update,env_steps,program_execs,mean_return,val_return\n";
  for (const auto& p : curve)
    out += std::to_string(p.update) + "," + std::to_string(p.env_steps) + "," +
           std::to_string(p.program_execs) + "," + FormatDouble(p.mean_return) + "," +
           FormatDouble(p.val_return) + "\n";
  return out;
}

RetrievalResult RunSearchPhase(const RunConfig& config, const fs::path& dir) {
  config.Validate();
  fs::create_directories(dir);
  WriteFile(dir / "config.json", ConfigToJson(config));
  const TaskFactory factory = MakeFactory(config.task, config.task_options);

  std::string log;
  long executions = 0;
  double best = -std::numeric_limits<double>::infinity();
  LatentVector best_latent{};
  const int n = config.retrieval.cem.population_size;
  auto sink = [&](const EvaluationRecord& e) {
    executions += e.exec_count;
    if (e.candidate == 0 || e.score > best) {
      best = e.score;
      best_latent = *e.latent;
    }
    if (e.candidate == n - 1) {
      const json line = {{"type", "iteration"},         {"mode", e.mode + 1},
                         {"restart", e.restart},        {"iteration", e.iteration},
                         {"candidates", n},             {"best_score", best},
                         {"best_program", Emit(Decode(best_latent))}, {"executions", executions}};
      log += line.dump() + "\n";
    }
  };
  RetrievalResult result = RunVariant(config.variant, config.task, config.ModeCount(), factory,
                                      config.retrieval, config.seed, sink);
  for (const auto& r : result.log.restarts) {
    const json line = {{"type", "restart"},     {"mode", r.mode + 1},
                       {"restart", r.restart},  {"score", r.score},
                       {"iterations", r.iterations}, {"evaluations", r.evaluations},
                       {"converged", r.converged},   {"program", r.program}};
    log += line.dump() + "\n";
  }
  for (std::size_t m = 0; m < result.log.psis.size(); ++m) {
    json seqs = json::array();
    for (const auto& p : result.log.psis[m]) seqs.push_back(p.ToString());
    if (!seqs.empty()) log += json{{"type", "psi"}, {"mode", m + 1}, {"sequences", seqs}}.dump() + "\n";
  }
  json programs = json::array();
  for (const auto& p : result.modes.programs) programs.push_back(Emit(p));
  log += json{{"type", "summary"},
              {"variant", VariantName(config.variant)},
              {"total_executions", result.log.total_executions},
              {"modes", programs}}
             .dump() +
         "\n";
  WriteFile(dir / "retrieval.jsonl", log);
  WriteFile(dir / "modes.json", ModesToJson(result.modes));
  return result;
}

TrainResult RunTrainPhase(const RunConfig& config, const fs::path& dir) {
  config.Validate();
  fs::create_directories(dir);
  const TaskFactory factory = MakeFactory(config.task, config.task_options);
  const std::uint64_t seed = DeriveSeed(config.seed, {kStreamTrain});
  TrainResult result = [&] {
    switch (config.kind) {
      case MachineKind::kDrl:
        return DrlTrain(config.task, factory, config.ppo, seed);
      case MachineKind::kPsmp:
        return TrainTransition(PsmpModes(config.task), factory, config.ppo, seed,
                               MachineKind::kPsmp);
      case MachineKind::kPomp:
        break;
    }
    const fs::path modes_path = dir / "modes.json";
    if (!fs::exists(modes_path))
      throw MissingLog("POMP training needs modes.json from the search phase in " + dir.string());
    const ModeSet modes = ModesFromJson(ReadFile(modes_path));
    if (modes.task != config.task) throw ConfigError("modes.json was searched for another task");
    return TrainTransition(modes, factory, config.ppo, seed, MachineKind::kPomp);
  }();
  SaveCheckpoint(dir / "pomp.ckpt", config.task, config.task_options, result.policy);
  WriteFile(dir / "curve.csv", CurveToCsv(result.curve));
  return result;
}

EvalReport RunEvalPhase(const RunConfig& config, const fs::path& dir) {
  const Checkpoint ckpt = LoadCheckpoint(dir / "pomp.ckpt");
  if (ckpt.task != config.task)
    throw CheckpointMismatch("checkpoint was trained on " + std::string(TaskName(ckpt.task)));
  RolloutOptions options;
  options.budget = config.ppo.budget;
  options.max_programs = ckpt.policy.kind() == MachineKind::kDrl
                             ? CatalogEntry(ckpt.task).horizon * ckpt.options.scale
                             : config.ppo.max_programs;
  const EvalReport report = Evaluate(MachineRunner(ckpt.policy, config.selection, options),
                                     ckpt.task, ckpt.options, config.episodes, config.seed_base);
  WriteFile(dir / "eval.json", report.ToJson());
  return report;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace pomp
