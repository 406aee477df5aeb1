#ifndef POMP_INTERPRETER_HPP_
#define POMP_INTERPRETER_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "pomp/dsl.hpp"
#include "pomp/tasks.hpp"
#include "pomp/world.hpp"

namespace pomp {

struct ExecBudget {
  int action_budget = 200;
  int tick_budget = 10000;
};

enum class Termination {
  kCompleted,
  kActionBudgetExhausted,
  kTickBudgetExhausted,
  kEpisodeDone,
};
std::string_view TerminationName(Termination t);

struct ExecTrace {
  std::vector<Action> actions;
  std::vector<double> rewards;
  // Agent pose after each action.
  std::vector<Cell> positions;
  std::vector<Heading> headings;
  Termination termination = Termination::kCompleted;
  // Rendered world after the last action.
  std::string final_snapshot;
};

// Aggregate outcome of one execution without per-step storage.
struct ExecSummary {
  int actions = 0;
  double total_reward = 0.0;
  double discounted_reward = 0.0;  // sum of gamma^t r_t, t from 0
  Termination termination = Termination::kCompleted;
};

bool EvalPerception(const GridWorld& world, Perception p);
// Throws EpisodeAlreadyDone.
double ApplyAction(TaskInstance& task, Action a);

// Runs the program on the live task. An already finished task yields an
// empty trace with kEpisodeDone.
ExecTrace Execute(const Program& program, TaskInstance& task, const ExecBudget& budget = {});
ExecSummary Run(const Program& program, TaskInstance& task, const ExecBudget& budget = {},
                double gamma = 1.0);

// One JSON object per line: {t, action, reward, agentPos, heading}.
std::string TraceToJsonl(const ExecTrace& trace);

}  // namespace pomp

#endif  // POMP_INTERPRETER_HPP_
