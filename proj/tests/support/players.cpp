#include "players.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include <json.hpp>

namespace pomp {
extern const char* const kLayoutsJson;
}

namespace pomp::testing {
namespace {

using nlohmann::json;

const json& Layouts() {
  static const json layouts = json::parse(kLayoutsJson);
  return layouts;
}

std::set<Cell> LayoutCells(const char* task, const char* key) {
  std::set<Cell> out;
  for (const auto& c : Layouts().at(task).at(key)) out.insert({c.at(0).get<int>(), c.at(1).get<int>()});
  return out;
}

class Driver {
 public:
  explicit Driver(TaskInstance& task) : task_(task) {}

  TaskInstance& task() { return task_; }
  bool done() const { return task_.done(); }
  const GridWorld& world() const { return task_.world(); }
  std::vector<Action>& log() { return log_; }

  void Do(Action a) {
    if (task_.done()) return;
    task_.ApplyAction(a);
    log_.push_back(a);
  }

  void Face(Heading h) {
    int diff = (static_cast<int>(h) - static_cast<int>(world().heading()) + 4) % 4;
    if (diff == 1) Do(Action::kTurnRight);
    if (diff == 2) {
      Do(Action::kTurnRight);
      Do(Action::kTurnRight);
    }
    if (diff == 3) Do(Action::kTurnLeft);
  }

  // One step to an adjacent cell.
  void StepTo(Cell next) {
    for (int h = 0; h < 4; ++h) {
      if (Step(world().agent(), static_cast<Heading>(h)) == next) {
        Face(static_cast<Heading>(h));
        Do(Action::kMove);
        return;
      }
    }
  }

  bool WalkTo(Cell goal, const std::function<bool(Cell)>& allowed) {
    return testing::WalkTo(task_, goal, allowed, &log_);
  }

  // Nearest open cell holding markers, by path length.
  std::optional<Cell> NearestMarker(const std::function<bool(Cell)>& allowed) const {
    std::map<Cell, int> dist{{world().agent(), 0}};
    std::deque<Cell> queue{world().agent()};
    while (!queue.empty()) {
      Cell c = queue.front();
      queue.pop_front();
      if (world().Markers(c) > 0) return c;
      for (int h = 0; h < 4; ++h) {
        Cell n = Step(c, static_cast<Heading>(h));
        if (world().IsWall(n) || !allowed(n) || dist.contains(n)) continue;
        dist[n] = dist[c] + 1;
        queue.push_back(n);
      }
    }
    return std::nullopt;
  }

 private:
  TaskInstance& task_;
  std::vector<Action> log_;
};

bool Anywhere(Cell) { return true; }

// Walk to the nearest marker and apply `act` there, until done or none left.
void CollectLoop(Driver& d, Action act, const std::function<bool(Cell)>& allowed = Anywhere) {
  while (!d.done()) {
    auto target = d.NearestMarker(allowed);
    if (!target || !d.WalkTo(*target, allowed)) return;
    d.Do(act);
  }
}

void PlayStairClimber(Driver& d) {
  auto path = LayoutCells("stairclimber", "path");
  Cell goal{};
  for (Cell c : path)
    if (d.world().Markers(c) > 0) goal = c;
  d.WalkTo(goal, [&](Cell c) { return path.contains(c); });
}

void PlayFourCorner(Driver& d) {
  for (Cell c : {Cell{10, 1}, Cell{10, 10}, Cell{1, 10}, Cell{1, 1}}) {
    d.WalkTo(c, Anywhere);
    d.Do(Action::kPutMarker);
  }
}

void PlayTopOff(Driver& d) {
  d.Face(Heading::kEast);
  for (int c = 1; c <= 10 && !d.done(); ++c) {
    if (d.world().Markers({10, c}) > 0) d.Do(Action::kPutMarker);
    if (c < 10) d.Do(Action::kMove);
  }
}

void PlayDoorKey(Driver& d) {
  auto key = d.NearestMarker(Anywhere);
  if (!key) return;
  d.WalkTo(*key, Anywhere);
  d.Do(Action::kPickMarker);
  auto target = d.NearestMarker(Anywhere);
  if (!target) return;
  d.WalkTo(*target, Anywhere);
  d.Do(Action::kPutMarker);
}

void PlayOneStroke(Driver& d) {
  auto cycle = RoomCycle();
  auto start = std::find(cycle.begin(), cycle.end(), d.world().agent()) - cycle.begin();
  for (std::size_t i = 1; i < cycle.size() && !d.done(); ++i)
    d.StepTo(cycle[(static_cast<std::size_t>(start) + i) % cycle.size()]);
}

void PlaySeeder(Driver& d) {
  auto cycle = RoomCycle();
  auto start = std::find(cycle.begin(), cycle.end(), d.world().agent()) - cycle.begin();
  d.Do(Action::kPutMarker);
  for (std::size_t i = 1; i < cycle.size() && !d.done(); ++i) {
    d.StepTo(cycle[(static_cast<std::size_t>(start) + i) % cycle.size()]);
    d.Do(Action::kPutMarker);
  }
}

// Greedy: shortest path to the food through the current body, replanned
// after every step since the body moves.
void SnakeGreedy(Driver& d) {
  while (!d.done()) {
    auto food = d.NearestMarker(Anywhere);
    if (!food) return;
    Cell here = d.world().agent();
    std::map<Cell, Cell> parent{{here, here}};
    std::deque<Cell> queue{here};
    while (!queue.empty() && !parent.contains(*food)) {
      Cell c = queue.front();
      queue.pop_front();
      for (int h = 0; h < 4; ++h) {
        Cell n = Step(c, static_cast<Heading>(h));
        if (d.world().IsWall(n) || parent.contains(n)) continue;
        parent[n] = c;
        queue.push_back(n);
      }
    }
    if (!parent.contains(*food)) return;
    Cell next = *food;
    while (parent[next] != here) next = parent[next];
    d.StepTo(next);
  }
}

// Each candidate step is scored by a greedy playout on a copy of the task.
void PlaySnake(Driver& d) {
  while (!d.done()) {
    Cell here = d.world().agent();
    std::optional<Cell> best;
    double best_score = -1.0;
    for (int h = 0; h < 4; ++h) {
      Cell n = Step(here, static_cast<Heading>(h));
      if (d.world().IsWall(n)) continue;
      auto copy = d.task().Clone();
      Driver sim(*copy);
      sim.StepTo(n);
      SnakeGreedy(sim);
      double score = copy->gross_return() - 1e-4 * copy->action_count();
      if (score > best_score) {
        best_score = score;
        best = n;
      }
    }
    if (!best) return;
    d.StepTo(*best);
  }
}

void PlayUpNDown(Driver& d) {
  auto safe = LayoutCells("upndown", "path");
  for (Cell p : std::set<Cell>(safe))
    for (int h = 0; h < 4; ++h) safe.insert(Step(p, static_cast<Heading>(h)));
  CollectLoop(d, Action::kPickMarker, [&](Cell c) { return safe.contains(c); });
}

// Boustrophedon over the room starting at the bottom-left corner.
std::vector<Cell> Sweep() {
  std::vector<Cell> order;
  for (int r = 6; r >= 1; --r) {
    bool east = (6 - r) % 2 == 0;
    for (int i = 1; i <= 6; ++i) order.push_back({r, east ? i : 7 - i});
  }
  return order;
}

void PlayFarmer(Driver& d) {
  auto forward = Sweep();
  auto backward = forward;
  std::reverse(backward.begin(), backward.end());
  bool filling = true;
  while (!d.done()) {
    const auto& order = d.world().agent() == forward.front() ? forward : backward;
    for (Cell c : order) {
      if (d.done()) break;
      d.WalkTo(c, Anywhere);
      if (filling && d.world().Markers(c) == 0) d.Do(Action::kPutMarker);
      while (!filling && !d.done() && d.world().Markers(c) > 0) d.Do(Action::kPickMarker);
    }
    filling = !filling;
  }
}

void PlayInfDoorKey(Driver& d) {
  bool picking = true;
  while (!d.done()) {
    auto target = d.NearestMarker(Anywhere);
    if (!target || !d.WalkTo(*target, Anywhere)) return;
    d.Do(picking ? Action::kPickMarker : Action::kPutMarker);
    picking = !picking;
  }
}

}  // namespace

bool WalkTo(TaskInstance& task, Cell goal, const std::function<bool(Cell)>& allowed,
            std::vector<Action>* log) {
  const GridWorld& w = task.world();
  Cell start = w.agent();
  std::map<Cell, Cell> parent{{start, start}};
  std::deque<Cell> queue{start};
  while (!queue.empty() && !parent.contains(goal)) {
    Cell c = queue.front();
    queue.pop_front();
    for (int h = 0; h < 4; ++h) {
      Cell n = Step(c, static_cast<Heading>(h));
      if (w.IsWall(n) || !allowed(n) || parent.contains(n)) continue;
      parent[n] = c;
      queue.push_back(n);
    }
  }
  if (!parent.contains(goal)) return false;
  std::vector<Cell> path;
  for (Cell c = goal; c != start; c = parent[c]) path.push_back(c);
  std::reverse(path.begin(), path.end());
  auto act = [&](Action a) {
    if (task.done()) return;
    task.ApplyAction(a);
    log->push_back(a);
  };
  for (Cell next : path) {
    for (int h = 0; h < 4; ++h) {
      if (Step(task.world().agent(), static_cast<Heading>(h)) != next) continue;
      int diff = (h - static_cast<int>(task.world().heading()) + 4) % 4;
      if (diff == 1) act(Action::kTurnRight);
      if (diff == 2) {
        act(Action::kTurnRight);
        act(Action::kTurnRight);
      }
      if (diff == 3) act(Action::kTurnLeft);
      act(Action::kMove);
      break;
    }
    if (task.done()) break;
  }
  return true;
}

std::vector<Cell> RoomCycle() {
  std::vector<Cell> cycle;
  for (int c = 1; c <= 6; ++c) cycle.push_back({1, c});
  for (int r = 2; r <= 6; ++r) {
    bool west = r % 2 == 0;
    for (int i = 0; i < 5; ++i) cycle.push_back({r, west ? 6 - i : 2 + i});
  }
  for (int r = 6; r >= 2; --r) cycle.push_back({r, 1});
  return cycle;
}

std::vector<Action> PlayReference(TaskInstance& task) {
  Driver d(task);
  switch (task.id()) {
    case TaskId::kStairClimber: PlayStairClimber(d); break;
    case TaskId::kFourCorner: PlayFourCorner(d); break;
    case TaskId::kTopOff: PlayTopOff(d); break;
    case TaskId::kMaze:
    case TaskId::kCleanHouse:
    case TaskId::kHarvester:
    case TaskId::kSeesaw:
    case TaskId::kInfHarvester: CollectLoop(d, Action::kPickMarker); break;
    case TaskId::kDoorKey: PlayDoorKey(d); break;
    case TaskId::kOneStroke: PlayOneStroke(d); break;
    case TaskId::kSeeder: PlaySeeder(d); break;
    case TaskId::kSnake: PlaySnake(d); break;
    case TaskId::kUpNDown: PlayUpNDown(d); break;
    case TaskId::kFarmer: PlayFarmer(d); break;
    case TaskId::kInfDoorKey: PlayInfDoorKey(d); break;
  }
  return d.log();
}

PolicyRunner ReferenceRunner() {
  return {"reference", [](TaskInstance& task, std::uint64_t) {
            auto actions = PlayReference(task);
            RolloutRecord r;
            r.episode_return = task.gross_return();
            r.env_steps = static_cast<long>(actions.size());
            return r;
          }};
}

}  // namespace pomp::testing
