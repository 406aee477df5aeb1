#include "pomp/tasks.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <map>
#include <set>
#include <vector>

#include <json.hpp>

#include "pomp/errors.hpp"

namespace pomp {

extern const char* const kLayoutsJson;

namespace {

using nlohmann::json;

constexpr std::array<TaskCatalogEntry, kNumTasks> kCatalog = {{
    {TaskId::kStairClimber, "stairclimber", Suite::kKarel, 12, 12, 5, 200},
    {TaskId::kFourCorner, "fourcorner", Suite::kKarel, 12, 12, 5, 200},
    {TaskId::kTopOff, "topoff", Suite::kKarel, 12, 12, 5, 200},
    {TaskId::kMaze, "maze", Suite::kKarel, 8, 8, 5, 200},
    {TaskId::kCleanHouse, "cleanhouse", Suite::kKarel, 14, 22, 5, 200},
    {TaskId::kHarvester, "harvester", Suite::kKarel, 8, 8, 5, 200},
    {TaskId::kDoorKey, "doorkey", Suite::kKarelHard, 8, 8, 5, 500},
    {TaskId::kOneStroke, "onestroke", Suite::kKarelHard, 8, 8, 5, 500},
    {TaskId::kSeeder, "seeder", Suite::kKarelHard, 8, 8, 5, 500},
    {TaskId::kSnake, "snake", Suite::kKarelHard, 8, 8, 5, 500},
    {TaskId::kSeesaw, "seesaw", Suite::kKarelLong, 16, 16, 3, 50000},
    {TaskId::kUpNDown, "up-n-down", Suite::kKarelLong, 8, 8, 3, 50000},
    {TaskId::kFarmer, "farmer", Suite::kKarelLong, 8, 8, 5, 50000},
    {TaskId::kInfDoorKey, "inf-doorkey", Suite::kKarelLong, 8, 8, 5, 50000},
    {TaskId::kInfHarvester, "inf-harvester", Suite::kKarelLong, 16, 16, 3, 50000},
}};

const json& Layouts() {
  static const json layouts = json::parse(kLayoutsJson);
  return layouts;
}

Cell CellFrom(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

std::vector<Cell> CellsFrom(const json& j) {
  std::vector<Cell> out;
  for (const auto& c : j) out.push_back(CellFrom(c));
  return out;
}

// Builds a world from a layout map. Only '#' becomes a wall; every other
// glyph is collected into `tags`.
GridWorld WorldFromMap(const json& rows, std::map<char, std::vector<Cell>>* tags) {
  int h = static_cast<int>(rows.size());
  int w = static_cast<int>(rows.at(0).get<std::string>().size());
  GridWorld world(h, w);
  for (int r = 0; r < h; ++r) {
    const auto line = rows.at(r).get<std::string>();
    for (int c = 0; c < w; ++c) {
      if (line[c] == '#') {
        world.SetWall({r, c}, true);
      } else if (tags != nullptr) {
        (*tags)[line[c]].push_back({r, c});
      }
    }
  }
  return world;
}

// Empty room with a one-cell border of walls.
GridWorld Box(int h, int w) {
  GridWorld world(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (r == 0 || c == 0 || r == h - 1 || c == w - 1) world.SetWall({r, c}, true);
  return world;
}

std::vector<Cell> Interior(const GridWorld& w) {
  std::vector<Cell> out;
  for (int r = 0; r < w.height(); ++r)
    for (int c = 0; c < w.width(); ++c)
      if (!w.IsWall({r, c})) out.push_back({r, c});
  return out;
}

template <typename T>
const T& Pick(Rng& rng, const std::vector<T>& items) {
  return items[static_cast<std::size_t>(rng.UniformInt(static_cast<int>(items.size())))];
}

Heading RandomHeading(Rng& rng) { return static_cast<Heading>(rng.UniformInt(4)); }

// Uniform cell from `cells` other than those in `exclude`.
Cell PickExcluding(Rng& rng, const std::vector<Cell>& cells,
                   std::initializer_list<Cell> exclude) {
  std::vector<Cell> pool;
  for (Cell c : cells)
    if (std::find(exclude.begin(), exclude.end(), c) == exclude.end()) pool.push_back(c);
  return Pick(rng, pool);
}

int BaseTarget(const TaskOptions& o, int base) {
  return o.target_override.value_or(base) * o.scale;
}

// ---------------------------------------------------------------- Karel

class StairClimber final : public TaskInstance {
 public:
  StairClimber(std::uint64_t seed, const TaskOptions& o)
      : TaskInstance(TaskId::kStairClimber, seed, o.scale) {
    const json& layout = Layouts().at("stairclimber");
    world_ = WorldFromMap(layout.at("map"), nullptr);
    auto path = CellsFrom(layout.at("path"));
    path_.insert(path.begin(), path.end());
    auto starts = layout.at("start_indices").get<std::vector<int>>();
    int start = Pick(rng_, starts);
    int lo = layout.at("goal_min_index").get<int>();
    int goal = lo + rng_.UniformInt(static_cast<int>(path.size()) - lo);
    goal_ = path[static_cast<std::size_t>(goal)];
    world_.SetAgent(path[static_cast<std::size_t>(start)], Heading::kEast);
    world_.SetMarkers(goal_, 1);
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<StairClimber>(*this);
  }

 protected:
  double OnAction(Action, const ActionEffect& e) override {
    if (!e.moved) return 0.0;
    if (!path_.contains(e.to)) {
      EndEpisode();
      return -1.0;
    }
    if (e.to == goal_) {
      EndEpisode();
      return 1.0;
    }
    return 0.0;
  }

 private:
  std::set<Cell> path_;
  Cell goal_;
};

class FourCorner final : public TaskInstance {
 public:
  FourCorner(std::uint64_t seed, const TaskOptions& o)
      : TaskInstance(TaskId::kFourCorner, seed, o.scale) {
    world_ = Box(12, 12);
    world_.SetAgent({10, 2 + rng_.UniformInt(8)}, Heading::kEast);
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<FourCorner>(*this);
  }
  std::map<std::string, double> Counters() const override {
    return {{"score", score_}};
  }

 protected:
  double OnAction(Action a, const ActionEffect&) override {
    if (a != Action::kPutMarker && a != Action::kPickMarker) return 0.0;
    double next = Score();
    double r = next - score_;
    score_ = next;
    return r;
  }

 private:
  double Score() const {
    static constexpr std::array<Cell, 4> kCorners = {{{1, 1}, {1, 10}, {10, 1}, {10, 10}}};
    int corners = 0;
    for (Cell c : kCorners) corners += world_.Markers(c) > 0 ? 1 : 0;
    int total = 0;
    for (Cell c : Interior(world_)) total += world_.Markers(c) > 0 ? 1 : 0;
    if (total != corners) return 0.0;
    return 0.25 * corners;
  }

  double score_ = 0.0;
};

class TopOff final : public TaskInstance {
 public:
  TopOff(std::uint64_t seed, const TaskOptions& o)
      : TaskInstance(TaskId::kTopOff, seed, o.scale) {
    world_ = Box(12, 12);
    world_.SetAgent({kRow, 1}, Heading::kEast);
    do {
      n_ = 0;
      for (int c = 1; c <= 10; ++c) {
        original_[c] = rng_.Bernoulli(0.5);
        n_ += original_[c] ? 1 : 0;
      }
    } while (n_ == 0);
    for (int c = 1; c <= 10; ++c)
      if (original_[c]) world_.SetMarkers({kRow, c}, 1);
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<TopOff>(*this);
  }
  std::map<std::string, double> Counters() const override {
    return {{"bottom_markers", n_},
            {"credited", credited_},
            {"frozen", frozen_ ? 1 : 0},
            {"final", final_ ? 1 : 0}};
  }

 protected:
  double OnAction(Action, const ActionEffect&) override {
    if (frozen_) return 0.0;
    Cell agent = world_.agent();
    for (int c = 1; c <= 10; ++c) {
      int count = world_.Markers({kRow, c});
      int target = original_[c] ? 2 : 0;
      bool overfilled = count > target;
      bool removed = original_[c] && count < 1;
      bool passed = agent.row == kRow && c < agent.col && count != target;
      if (overfilled || removed || passed) {
        frozen_ = true;
        return 0.0;
      }
    }
    int prefix = 0;
    bool complete = true;
    for (int c = 1; c <= 10; ++c) {
      int target = original_[c] ? 2 : 0;
      if (world_.Markers({kRow, c}) != target) {
        complete = false;
        break;
      }
      prefix += original_[c] ? 1 : 0;
    }
    double share = 1.0 / (n_ + 1);
    double r = 0.0;
    if (prefix > credited_) {
      r += share * (prefix - credited_);
      credited_ = prefix;
    }
    if (complete && !final_ && agent == Cell{kRow, 10}) {
      final_ = true;
      r += share;
    }
    return r;
  }

 private:
  static constexpr int kRow = 10;
  std::array<bool, 12> original_{};
  int n_ = 0;
  int credited_ = 0;
  bool frozen_ = false;
  bool final_ = false;
};

class Maze final : public TaskInstance {
 public:
  Maze(std::uint64_t seed, const TaskOptions& o) : TaskInstance(TaskId::kMaze, seed, o.scale) {
    world_ = GridWorld(8, 8);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) world_.SetWall({r, c}, true);
    // Randomized depth-first carving over a 3x3 lattice at odd coordinates.
    std::array<std::array<bool, 3>, 3> seen{};
    std::vector<std::pair<int, int>> stack{{rng_.UniformInt(3), rng_.UniformInt(3)}};
    seen[stack[0].first][stack[0].second] = true;
    world_.SetWall(LatticeCell(stack[0].first, stack[0].second), false);
    while (!stack.empty()) {
      auto [i, j] = stack.back();
      std::vector<std::pair<int, int>> next;
      static constexpr std::array<std::pair<int, int>, 4> kDirs = {{{-1, 0}, {0, 1}, {1, 0}, {0, -1}}};
      for (auto [di, dj] : kDirs) {
        int ni = i + di;
        int nj = j + dj;
        if (ni >= 0 && ni < 3 && nj >= 0 && nj < 3 && !seen[ni][nj]) next.push_back({ni, nj});
      }
      if (next.empty()) {
        stack.pop_back();
        continue;
      }
      auto [ni, nj] = Pick(rng_, next);
      seen[ni][nj] = true;
      Cell a = LatticeCell(i, j);
      Cell b = LatticeCell(ni, nj);
      world_.SetWall({(a.row + b.row) / 2, (a.col + b.col) / 2}, false);
      world_.SetWall(b, false);
      stack.push_back({ni, nj});
    }
    auto open = Interior(world_);
    Cell agent = Pick(rng_, open);
    goal_ = PickExcluding(rng_, open, {agent});
    world_.SetAgent(agent, RandomHeading(rng_));
    world_.SetMarkers(goal_, 1);
  }
  std::unique_ptr<TaskInstance> Clone() const override { return std::make_unique<Maze>(*this); }

 protected:
  double OnAction(Action, const ActionEffect& e) override {
    if (e.moved && e.to == goal_) {
      EndEpisode();
      return 1.0;
    }
    return 0.0;
  }

 private:
  static Cell LatticeCell(int i, int j) { return {1 + 2 * i, 1 + 2 * j}; }
  Cell goal_;
};

// Reward is the share of initially marked cells that are now empty.
class Collect : public TaskInstance {
 public:
  std::map<std::string, double> Counters() const override {
    return {{"collected", collected_}, {"total", static_cast<double>(targets_.size())}};
  }

 protected:
  Collect(TaskId id, std::uint64_t seed, int scale) : TaskInstance(id, seed, scale) {}

  double OnAction(Action a, const ActionEffect&) override {
    if (a != Action::kPickMarker && a != Action::kPutMarker) return 0.0;
    int now = 0;
    for (Cell c : targets_) now += world_.Markers(c) == 0 ? 1 : 0;
    double r = static_cast<double>(now - collected_) / static_cast<double>(targets_.size());
    collected_ = now;
    if (collected_ == static_cast<int>(targets_.size())) EndEpisode();
    return r;
  }

  std::vector<Cell> targets_;
  int collected_ = 0;
};

class CleanHouse final : public Collect {
 public:
  CleanHouse(std::uint64_t seed, const TaskOptions& o)
      : Collect(TaskId::kCleanHouse, seed, o.scale) {
    const json& layout = Layouts().at("cleanhouse");
    std::map<char, std::vector<Cell>> tags;
    world_ = WorldFromMap(layout.at("map"), &tags);
    Cell agent = tags.at('A').at(0);
    world_.SetAgent(agent, layout.at("agent_heading").get<std::string>() == "N"
                               ? Heading::kNorth
                               : Heading::kEast);
    std::vector<Cell> candidates;
    for (Cell c : Interior(world_)) {
      if (c == agent) continue;
      bool by_wall = false;
      for (int h = 0; h < 4; ++h) by_wall = by_wall || world_.IsWall(Step(c, static_cast<Heading>(h)));
      if (by_wall) candidates.push_back(c);
    }
    std::shuffle(candidates.begin(), candidates.end(), rng_.engine());
    int count = layout.at("marker_count").get<int>();
    targets_.assign(candidates.begin(), candidates.begin() + count);
    std::sort(targets_.begin(), targets_.end());
    for (Cell c : targets_) world_.SetMarkers(c, 1);
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<CleanHouse>(*this);
  }
};

class Harvester final : public Collect {
 public:
  Harvester(std::uint64_t seed, const TaskOptions& o)
      : Collect(TaskId::kHarvester, seed, o.scale) {
    world_ = Box(8, 8);
    targets_ = Interior(world_);
    for (Cell c : targets_) world_.SetMarkers(c, 1);
    world_.SetAgent({6, 1}, Heading::kEast);
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<Harvester>(*this);
  }
};

// ----------------------------------------------------------- Karel-Hard

class DoorKey final : public TaskInstance {
 public:
  DoorKey(std::uint64_t seed, const TaskOptions& o)
      : TaskInstance(TaskId::kDoorKey, seed, o.scale) {
    std::map<char, std::vector<Cell>> tags;
    world_ = WorldFromMap(Layouts().at("doorkey").at("map"), &tags);
    door_ = tags.at('D').at(0);
    world_.SetWall(door_, true);
    const auto& left = tags.at('a');
    Cell agent = Pick(rng_, left);
    key_ = PickExcluding(rng_, left, {agent});
    target_ = Pick(rng_, tags.at('b'));
    world_.SetAgent(agent, RandomHeading(rng_));
    world_.SetMarkers(key_, 1);
    world_.SetMarkers(target_, 1);
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<DoorKey>(*this);
  }
  std::map<std::string, double> Counters() const override {
    return {{"has_key", has_key_ ? 1 : 0}};
  }

 protected:
  double OnAction(Action a, const ActionEffect& e) override {
    if (a == Action::kPickMarker && !has_key_ && e.from == key_ && e.markers_before > 0) {
      has_key_ = true;
      world_.SetWall(door_, false);
      return 0.5;
    }
    if (a == Action::kPutMarker && has_key_ && e.from == target_) {
      EndEpisode();
      return 0.5;
    }
    return 0.0;
  }

 private:
  Cell door_;
  Cell key_;
  Cell target_;
  bool has_key_ = false;
};

class OneStroke final : public TaskInstance {
 public:
  OneStroke(std::uint64_t seed, const TaskOptions& o)
      : TaskInstance(TaskId::kOneStroke, seed, o.scale) {
    world_ = Box(8, 8);
    cells_ = static_cast<int>(Interior(world_).size());
    world_.SetAgent(Pick(rng_, Interior(world_)), RandomHeading(rng_));
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<OneStroke>(*this);
  }
  std::map<std::string, double> Counters() const override {
    return {{"visited", visited_}};
  }

 protected:
  double OnAction(Action, const ActionEffect& e) override {
    if (e.blocked) {
      EndEpisode();
      return 0.0;
    }
    if (!e.moved) return 0.0;
    world_.SetWall(e.from, true);
    ++visited_;
    if (visited_ == cells_) EndEpisode();
    // The start cell is not counted: only cells the agent enters score.
    return 1.0 / (cells_ - 1);
  }

 private:
  int cells_ = 0;
  int visited_ = 1;
};

class Seeder final : public TaskInstance {
 public:
  Seeder(std::uint64_t seed, const TaskOptions& o)
      : TaskInstance(TaskId::kSeeder, seed, o.scale) {
    world_ = Box(8, 8);
    cells_ = static_cast<int>(Interior(world_).size());
    world_.SetAgent(Pick(rng_, Interior(world_)), RandomHeading(rng_));
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<Seeder>(*this);
  }
  std::map<std::string, double> Counters() const override {
    return {{"seeded", static_cast<double>(seeded_.size())}};
  }

 protected:
  double OnAction(Action a, const ActionEffect& e) override {
    if (a != Action::kPutMarker) return 0.0;
    if (e.markers_before > 0 || seeded_.contains(e.from)) {
      EndEpisode();
      return 0.0;
    }
    seeded_.insert(e.from);
    if (static_cast<int>(seeded_.size()) == cells_) EndEpisode();
    return 1.0 / cells_;
  }

 private:
  int cells_ = 0;
  std::set<Cell> seeded_;
};

class Snake final : public TaskInstance {
 public:
  Snake(std::uint64_t seed, const TaskOptions& o) : TaskInstance(TaskId::kSnake, seed, o.scale) {
    world_ = Box(8, 8);
    world_.SetAgent(Pick(rng_, Interior(world_)), RandomHeading(rng_));
    SpawnFood();
  }
  std::unique_ptr<TaskInstance> Clone() const override { return std::make_unique<Snake>(*this); }
  std::map<std::string, double> Counters() const override {
    return {{"consumed", consumed_}, {"body", static_cast<double>(body_.size())}};
  }

 protected:
  double OnAction(Action, const ActionEffect& e) override {
    if (e.blocked) {
      EndEpisode();
      return 0.0;
    }
    if (!e.moved) return 0.0;
    body_.push_back(e.from);
    world_.SetWall(e.from, true);
    while (static_cast<int>(body_.size()) > 2 + consumed_) {
      world_.SetWall(body_.front(), false);
      body_.pop_front();
    }
    if (e.to != food_) return 0.0;
    world_.SetMarkers(food_, 0);
    ++consumed_;
    if (consumed_ == kFood) {
      EndEpisode();
    } else {
      SpawnFood();
    }
    return 1.0 / kFood;
  }

 private:
  static constexpr int kFood = 20;

  void SpawnFood() {
    food_ = PickExcluding(rng_, Interior(world_), {world_.agent()});
    world_.SetMarkers(food_, 1);
  }

  std::deque<Cell> body_;
  Cell food_;
  int consumed_ = 0;
};

// ----------------------------------------------------------- Karel-Long

class Seesaw final : public TaskInstance {
 public:
  Seesaw(std::uint64_t seed, const TaskOptions& o)
      : TaskInstance(TaskId::kSeesaw, seed, o.scale), total_(SeesawMarkers(o)) {
    std::map<char, std::vector<Cell>> tags;
    world_ = WorldFromMap(Layouts().at("seesaw").at("map"), &tags);
    chambers_[0] = tags.at('a');
    chambers_[1] = tags.at('b');
    Cell agent = Pick(rng_, chambers_[0]);
    world_.SetAgent(agent, RandomHeading(rng_));
    target_ = PickExcluding(rng_, chambers_[0], {agent});
    world_.SetMarkers(target_, 1);
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<Seesaw>(*this);
  }
  std::map<std::string, double> Counters() const override {
    return {{"picked", picked_}, {"emitted", emitted_}, {"total", total_}};
  }

 protected:
  double OnAction(Action a, const ActionEffect& e) override {
    if (a != Action::kPickMarker || e.from != target_ || e.markers_before == 0) return 0.0;
    ++picked_;
    if (picked_ == total_) {
      EndEpisode();
    } else {
      side_ = 1 - side_;
      target_ = PickExcluding(rng_, chambers_[side_], {world_.agent()});
      world_.SetMarkers(target_, world_.Markers(target_) + 1);
      ++emitted_;
    }
    return 1.0 / total_;
  }

 private:
  int total_;
  std::array<std::vector<Cell>, 2> chambers_;
  int side_ = 0;
  Cell target_;
  int picked_ = 0;
  int emitted_ = 1;
};

class UpNDown final : public TaskInstance {
 public:
  UpNDown(std::uint64_t seed, const TaskOptions& o)
      : TaskInstance(TaskId::kUpNDown, seed, o.scale), total_(UpNDownLoads(o)) {
    const json& layout = Layouts().at("upndown");
    world_ = WorldFromMap(layout.at("map"), nullptr);
    auto path = CellsFrom(layout.at("path"));
    spawns_[0] = CellsFrom(layout.at("low_spawns"));
    spawns_[1] = CellsFrom(layout.at("high_spawns"));
    penalty_ = layout.at("penalty").get<double>() / o.scale;
    std::set<Cell> safe(path.begin(), path.end());
    for (Cell p : path)
      for (int h = 0; h < 4; ++h) safe.insert(Step(p, static_cast<Heading>(h)));
    for (Cell c : Interior(world_))
      if (!safe.contains(c)) penalized_.insert(c);
    int start = rng_.UniformInt(static_cast<int>(path.size()));
    world_.SetAgent(path[static_cast<std::size_t>(start)], Heading::kEast);
    side_ = 2 * start < static_cast<int>(path.size()) ? 1 : 0;
    Spawn();
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<UpNDown>(*this);
  }
  std::map<std::string, double> Counters() const override {
    return {{"picked", picked_}, {"total", total_}, {"penalties", penalties_}};
  }
  bool Penalized(Cell c) const { return penalized_.contains(c); }

 protected:
  double OnAction(Action a, const ActionEffect& e) override {
    if (e.moved && penalized_.contains(e.to)) {
      ++penalties_;
      return -penalty_;
    }
    if (a != Action::kPickMarker || e.from != load_ || e.markers_before == 0) return 0.0;
    ++picked_;
    if (picked_ == total_) {
      EndEpisode();
    } else {
      side_ = 1 - side_;
      Spawn();
    }
    return 1.0 / total_;
  }

 private:
  void Spawn() {
    load_ = PickExcluding(rng_, spawns_[side_], {world_.agent()});
    world_.SetMarkers(load_, world_.Markers(load_) + 1);
  }

  int total_;
  double penalty_ = 0.0;
  std::array<std::vector<Cell>, 2> spawns_;
  std::set<Cell> penalized_;
  int side_ = 0;
  Cell load_;
  int picked_ = 0;
  int penalties_ = 0;
};

// Each round is a fill phase (every interior cell gets a marker) followed by
// a harvest phase (every cell emptied). Credit units per round: one per put
// onto an empty cell other than the signal, one for completing the fill, and
// one per cell emptied during the harvest.
class Farmer final : public TaskInstance {
 public:
  Farmer(std::uint64_t seed, const TaskOptions& o)
      : TaskInstance(TaskId::kFarmer, seed, o.scale), rounds_(FarmerRounds(o)) {
    world_ = Box(8, 8);
    cells_ = static_cast<int>(Interior(world_).size());
    signal_ = CellFrom(Layouts().at("farmer").at("signal"));
    world_.SetMarkers(signal_, 1);
    world_.SetAgent({6, 1}, Heading::kEast);
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<Farmer>(*this);
  }
  int UnitsPerRound() const { return 2 * cells_; }
  std::map<std::string, double> Counters() const override {
    int remaining_rounds = rounds_ - round_ - 1;
    int outstanding = 0;
    if (remaining_rounds >= 0) {
      outstanding = remaining_rounds * UnitsPerRound() + (cells_ - 1 - puts_) +
                    (filling_ ? 1 : 0) + (cells_ - picks_);
    }
    return {{"round", round_},
            {"rounds", rounds_},
            {"filling", filling_ ? 1 : 0},
            {"credited", credited_},
            {"outstanding", outstanding},
            {"max_markers", rounds_ * UnitsPerRound()}};
  }

 protected:
  double OnAction(Action a, const ActionEffect& e) override {
    int units = 0;
    if (filling_) {
      if (a == Action::kPutMarker && e.markers_before == 0 && puts_ < cells_ - 1) {
        ++puts_;
        ++units;
      }
      if (a == Action::kPutMarker && Filled()) {
        filling_ = false;
        ++units;
      }
    } else if (a == Action::kPickMarker && e.markers_before > 0 && e.markers_after == 0) {
      if (picks_ < cells_) {
        ++picks_;
        ++units;
      }
      if (world_.TotalMarkers() == 0) {
        ++round_;
        if (round_ == rounds_) {
          EndEpisode();
        } else {
          filling_ = true;
          puts_ = 0;
          picks_ = 0;
          world_.SetMarkers(signal_, 1);
        }
      }
    }
    credited_ += units;
    return static_cast<double>(units) / (rounds_ * UnitsPerRound());
  }

 private:
  bool Filled() const {
    for (Cell c : Interior(world_))
      if (world_.Markers(c) == 0) return false;
    return true;
  }

  int rounds_;
  int cells_ = 0;
  Cell signal_;
  int round_ = 0;
  bool filling_ = true;
  int puts_ = 0;
  int picks_ = 0;
  int credited_ = 0;
};

// Four chambers visited in a cycle: pick a key in A, place it on the target
// in B, pick in C, place in D. Each event opens the passage to the next
// chamber and closes the previous one.
class InfDoorKey final : public TaskInstance {
 public:
  InfDoorKey(std::uint64_t seed, const TaskOptions& o)
      : TaskInstance(TaskId::kInfDoorKey, seed, o.scale), total_(InfDoorKeyEvents(o)) {
    std::map<char, std::vector<Cell>> tags;
    world_ = WorldFromMap(Layouts().at("infdoorkey").at("map"), &tags);
    for (int i = 0; i < 4; ++i) {
      chambers_[i] = tags.at(static_cast<char>('a' + i));
      passages_[i] = tags.at(static_cast<char>('1' + i)).at(0);
      world_.SetWall(passages_[i], true);
    }
    Cell agent = Pick(rng_, chambers_[0]);
    world_.SetAgent(agent, RandomHeading(rng_));
    objective_ = PickExcluding(rng_, chambers_[0], {agent});
    world_.SetMarkers(objective_, 1);
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<InfDoorKey>(*this);
  }
  std::map<std::string, double> Counters() const override {
    return {{"events", events_}, {"total", total_}, {"stage", stage_}};
  }

 protected:
  double OnAction(Action a, const ActionEffect& e) override {
    if (e.from != objective_) return 0.0;
    bool picking = stage_ % 2 == 0;
    if (picking && !(a == Action::kPickMarker && e.markers_before > 0)) return 0.0;
    if (!picking && a != Action::kPutMarker) return 0.0;
    if (!picking) world_.SetMarkers(objective_, 0);
    ++events_;
    if (events_ == total_) {
      EndEpisode();
    } else {
      world_.SetWall(passages_[(stage_ + 3) % 4], true);
      world_.SetWall(passages_[stage_], false);
      stage_ = (stage_ + 1) % 4;
      objective_ = PickExcluding(rng_, chambers_[stage_], {world_.agent()});
      world_.SetMarkers(objective_, world_.Markers(objective_) + 1);
    }
    return 1.0 / total_;
  }

 private:
  int total_;
  std::array<std::vector<Cell>, 4> chambers_;
  std::array<Cell, 4> passages_;
  int stage_ = 0;
  Cell objective_;
  int events_ = 0;
};

class InfHarvester final : public TaskInstance {
 public:
  InfHarvester(std::uint64_t seed, const TaskOptions& o)
      : TaskInstance(TaskId::kInfHarvester, seed, o.scale),
        probability_(InfHarvesterProbability(o)) {
    world_ = Box(16, 16);
    cells_ = Interior(world_);
    task_markers_.assign(cells_.size(), 1);
    for (Cell c : cells_) world_.SetMarkers(c, 1);
    live_ = static_cast<int>(cells_.size());
    world_.SetAgent({14, 1}, Heading::kEast);
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<InfHarvester>(*this);
  }
  // Expected number of markers the environment generates.
  double ExpectedTotal() const { return static_cast<double>(cells_.size()) / (1.0 - probability_); }
  std::map<std::string, double> Counters() const override {
    return {{"picked", picked_},
            {"spawned", spawned_},
            {"live", live_},
            {"emerging_probability", probability_}};
  }

 protected:
  double OnAction(Action a, const ActionEffect& e) override {
    if (a != Action::kPickMarker || e.markers_before == 0) return 0.0;
    std::size_t idx = IndexOf(e.from);
    if (task_markers_[idx] == 0) return 0.0;
    task_markers_[idx] = 0;
    --live_;
    ++picked_;
    if (rng_.Bernoulli(probability_)) {
      std::vector<std::size_t> empty;
      for (std::size_t i = 0; i < cells_.size(); ++i)
        if (world_.Markers(cells_[i]) == 0 && cells_[i] != world_.agent()) empty.push_back(i);
      if (!empty.empty()) {
        std::size_t j = Pick(rng_, empty);
        world_.SetMarkers(cells_[j], 1);
        task_markers_[j] = 1;
        ++live_;
        ++spawned_;
      }
    }
    if (live_ == 0) EndEpisode();
    return 1.0 / ExpectedTotal();
  }

 private:
  std::size_t IndexOf(Cell c) const {
    return static_cast<std::size_t>((c.row - 1) * (world_.width() - 2) + (c.col - 1));
  }

  double probability_;
  std::vector<Cell> cells_;
  std::vector<std::uint8_t> task_markers_;
  int live_ = 0;
  int picked_ = 0;
  int spawned_ = 0;
};

}  // namespace

std::span<const TaskCatalogEntry> Catalog() { return kCatalog; }

const TaskCatalogEntry& CatalogEntry(TaskId id) {
  return kCatalog[static_cast<std::size_t>(id)];
}

std::string_view TaskName(TaskId id) { return CatalogEntry(id).name; }

std::optional<TaskId> TaskFromName(std::string_view name) {
  for (const auto& e : kCatalog)
    if (e.name == name) return e.id;
  return std::nullopt;
}

std::string TaskNameList() {
  std::string out;
  for (const auto& e : kCatalog) {
    if (!out.empty()) out += ", ";
    out += e.name;
  }
  return out;
}

int SeesawMarkers(const TaskOptions& o) {
  return BaseTarget(o, Layouts().at("seesaw").at("markers").get<int>());
}
int UpNDownLoads(const TaskOptions& o) {
  return BaseTarget(o, Layouts().at("upndown").at("loads").get<int>());
}
int FarmerRounds(const TaskOptions& o) {
  return BaseTarget(o, Layouts().at("farmer").at("rounds").get<int>());
}
int InfDoorKeyEvents(const TaskOptions& o) {
  return BaseTarget(o, Layouts().at("infdoorkey").at("events").get<int>());
}
double InfHarvesterProbability(const TaskOptions& o) {
  if (o.emerging_probability) return *o.emerging_probability;
  // Training value 1/2 at scale 1; 1 - 1/(2k) keeps the expected horizon
  // proportional to k.
  return 1.0 - 1.0 / (2.0 * o.scale);
}

TaskInstance::TaskInstance(TaskId id, std::uint64_t seed, int scale)
    : rng_(seed), id_(id), scale_(scale) {
  const auto& entry = CatalogEntry(id);
  bool long_task = entry.suite == Suite::kKarelLong;
  horizon_ = entry.horizon * scale;
  per_action_cost_ = long_task ? kLongTaskActionCost / scale : 0.0;
}

double TaskInstance::ApplyAction(Action a) {
  if (done_) throw EpisodeAlreadyDone();
  ActionEffect effect = world_.Apply(a);
  ++action_count_;
  double reward = OnAction(a, effect);
  gross_return_ += reward;
  total_cost_ += per_action_cost_;
  if (action_count_ >= horizon_) done_ = true;
  return reward - per_action_cost_;
}

std::unique_ptr<TaskInstance> MakeTask(TaskId id, std::uint64_t seed, const TaskOptions& o) {
  static constexpr std::array<int, 5> kScales = {1, 2, 4, 8, 16};
  if (std::find(kScales.begin(), kScales.end(), o.scale) == kScales.end())
    throw UnsupportedScale("scale factor must be one of 1, 2, 4, 8, 16");
  if (o.scale > 1 && CatalogEntry(id).suite != Suite::kKarelLong)
    throw UnsupportedScale(std::string(TaskName(id)) + " does not support scaling");
  if (o.target_override && *o.target_override < 1)
    throw ConfigError("target override must be positive");
  switch (id) {
    case TaskId::kStairClimber: return std::make_unique<StairClimber>(seed, o);
    case TaskId::kFourCorner: return std::make_unique<FourCorner>(seed, o);
    case TaskId::kTopOff: return std::make_unique<TopOff>(seed, o);
    case TaskId::kMaze: return std::make_unique<Maze>(seed, o);
    case TaskId::kCleanHouse: return std::make_unique<CleanHouse>(seed, o);
    case TaskId::kHarvester: return std::make_unique<Harvester>(seed, o);
    case TaskId::kDoorKey: return std::make_unique<DoorKey>(seed, o);
    case TaskId::kOneStroke: return std::make_unique<OneStroke>(seed, o);
    case TaskId::kSeeder: return std::make_unique<Seeder>(seed, o);
    case TaskId::kSnake: return std::make_unique<Snake>(seed, o);
    case TaskId::kSeesaw: return std::make_unique<Seesaw>(seed, o);
    case TaskId::kUpNDown: return std::make_unique<UpNDown>(seed, o);
    case TaskId::kFarmer: return std::make_unique<Farmer>(seed, o);
    case TaskId::kInfDoorKey: return std::make_unique<InfDoorKey>(seed, o);
    case TaskId::kInfHarvester: return std::make_unique<InfHarvester>(seed, o);
  }
  throw ConfigError("unknown task");
}

TaskFactory MakeFactory(TaskId id, TaskOptions options) {
  return [id, options](std::uint64_t seed) { return MakeTask(id, seed, options); };
}

}  // namespace pomp
