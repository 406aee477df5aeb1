#ifndef POMP_TASKS_HPP_
#define POMP_TASKS_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "pomp/dsl.hpp"
#include "pomp/rng.hpp"
#include "pomp/world.hpp"

namespace pomp {

enum class TaskId : std::uint8_t {
  kStairClimber,
  kFourCorner,
  kTopOff,
  kMaze,
  kCleanHouse,
  kHarvester,
  kDoorKey,
  kOneStroke,
  kSeeder,
  kSnake,
  kSeesaw,
  kUpNDown,
  kFarmer,
  kInfDoorKey,
  kInfHarvester,
};
inline constexpr int kNumTasks = 15;

enum class Suite : std::uint8_t { kKarel, kKarelHard, kKarelLong };

struct TaskCatalogEntry {
  TaskId id;
  std::string_view name;  // CLI spelling, e.g. "inf-harvester"
  Suite suite;
  int height;
  int width;
  int mode_count;
  int horizon;  // action cap at scale 1
};

std::span<const TaskCatalogEntry> Catalog();
const TaskCatalogEntry& CatalogEntry(TaskId id);
std::string_view TaskName(TaskId id);
std::optional<TaskId> TaskFromName(std::string_view name);
// Comma-separated list of valid task names, for diagnostics.
std::string TaskNameList();

inline constexpr double kLongTaskActionCost = 0.0001;

struct TaskOptions {
  int scale = 1;
  // Replaces the task's base target count (markers, loads, rounds, events)
  // before scaling. Used for reduced-size experiments.
  std::optional<int> target_override;
  // Inf-Harvester only; replaces the scale-derived probability.
  std::optional<double> emerging_probability;
};

// A live episode. Each action goes through the world primitive, then a
// task hook assigns reward and may end the episode.
class TaskInstance {
 public:
  virtual ~TaskInstance() = default;
  virtual std::unique_ptr<TaskInstance> Clone() const = 0;

  TaskId id() const { return id_; }
  const GridWorld& world() const { return world_; }
  bool done() const { return done_; }
  int action_count() const { return action_count_; }
  int horizon() const { return horizon_; }
  int scale() const { return scale_; }
  double per_action_cost() const { return per_action_cost_; }
  // Sum of task rewards including task penalties, excluding action costs.
  double gross_return() const { return gross_return_; }
  double total_cost() const { return total_cost_; }
  double episode_return() const { return gross_return_ - total_cost_; }

  // Returns the net reward of the action. Throws EpisodeAlreadyDone.
  double ApplyAction(Action a);

  // Task-specific bookkeeping, for tests and logs.
  virtual std::map<std::string, double> Counters() const { return {}; }

 protected:
  TaskInstance(TaskId id, std::uint64_t seed, int scale);

  // Reward for the action's effect; may call EndEpisode().
  virtual double OnAction(Action a, const ActionEffect& effect) = 0;
  void EndEpisode() { done_ = true; }

  GridWorld world_;
  Rng rng_;

 private:
  TaskId id_;
  int scale_;
  int horizon_;
  double per_action_cost_;
  int action_count_ = 0;
  bool done_ = false;
  double gross_return_ = 0.0;
  double total_cost_ = 0.0;
};

// Throws UnsupportedScale for scale > 1 on short-horizon tasks or scales
// outside {1, 2, 4, 8, 16}.
std::unique_ptr<TaskInstance> MakeTask(TaskId id, std::uint64_t seed,
                                       const TaskOptions& options = {});

using TaskFactory = std::function<std::unique_ptr<TaskInstance>(std::uint64_t)>;
TaskFactory MakeFactory(TaskId id, TaskOptions options = {});

// Target counts after override and scaling.
int SeesawMarkers(const TaskOptions& o);
int UpNDownLoads(const TaskOptions& o);
int FarmerRounds(const TaskOptions& o);
int InfDoorKeyEvents(const TaskOptions& o);
double InfHarvesterProbability(const TaskOptions& o);

}  // namespace pomp

#endif  // POMP_TASKS_HPP_
