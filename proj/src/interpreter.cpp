#include "pomp/interpreter.hpp"

#include <json.hpp>

namespace pomp {
namespace {

// Tree-walking executor. Every statement entry and every loop test costs
// one tick. `Sink` receives (action, reward) after each emitted action.
template <typename Sink>
class Executor {
 public:
  Executor(TaskInstance& task, const ExecBudget& budget, Sink& sink)
      : task_(task), budget_(budget), sink_(sink) {}

  Termination Run(const Statement& body) {
    if (task_.done()) return Termination::kEpisodeDone;
    if (Exec(body)) return Termination::kCompleted;
    return stop_;
  }

 private:
  bool Tick() {
    if (++ticks_ > budget_.tick_budget) {
      stop_ = Termination::kTickBudgetExhausted;
      return false;
    }
    return true;
  }

  bool Emit(Action a) {
    if (actions_ >= budget_.action_budget) {
      stop_ = Termination::kActionBudgetExhausted;
      return false;
    }
    double r = task_.ApplyAction(a);
    ++actions_;
    sink_(a, r);
    if (task_.done()) {
      stop_ = Termination::kEpisodeDone;
      return false;
    }
    return true;
  }

  bool Test(const Condition& c) { return task_.world().Evaluate(c); }

  // Returns false when execution must halt.
  bool Exec(const Statement& s) {
    if (!Tick()) return false;
    return std::visit(
        [&](const auto& n) -> bool {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Act>) {
            return Emit(n.action);
          } else if constexpr (std::is_same_v<T, Seq>) {
            return Exec(*n.first) && Exec(*n.second);
          } else if constexpr (std::is_same_v<T, While>) {
            while (true) {
              if (!Tick()) return false;
              if (!Test(n.cond)) return true;
              if (!Exec(*n.body)) return false;
            }
          } else if constexpr (std::is_same_v<T, Repeat>) {
            for (int i = 0; i < n.count; ++i)
              if (!Exec(*n.body)) return false;
            return true;
          } else if constexpr (std::is_same_v<T, If>) {
            return Test(n.cond) ? Exec(*n.body) : true;
          } else {
            return Test(n.cond) ? Exec(*n.then_body) : Exec(*n.else_body);
          }
        },
        s.node);
  }

  TaskInstance& task_;
  const ExecBudget& budget_;
  Sink& sink_;
  int ticks_ = 0;
  int actions_ = 0;
  Termination stop_ = Termination::kCompleted;
};

}  // namespace

std::string_view TerminationName(Termination t) {
  switch (t) {
    case Termination::kCompleted: return "Completed";
    case Termination::kActionBudgetExhausted: return "ActionBudgetExhausted";
    case Termination::kTickBudgetExhausted: return "TickBudgetExhausted";
    case Termination::kEpisodeDone: return "EpisodeDone";
  }
  return "?";
}

bool EvalPerception(const GridWorld& world, Perception p) { return world.Evaluate(p); }

double ApplyAction(TaskInstance& task, Action a) { return task.ApplyAction(a); }

ExecTrace Execute(const Program& program, TaskInstance& task, const ExecBudget& budget) {
  ExecTrace trace;
  auto sink = [&](Action a, double r) {
    trace.actions.push_back(a);
    trace.rewards.push_back(r);
    trace.positions.push_back(task.world().agent());
    trace.headings.push_back(task.world().heading());
  };
  Executor<decltype(sink)> exec(task, budget, sink);
  trace.termination = exec.Run(program.body());
  trace.final_snapshot = task.world().Render();
  return trace;
}

ExecSummary Run(const Program& program, TaskInstance& task, const ExecBudget& budget,
                double gamma) {
  ExecSummary summary;
  double weight = 1.0;
  auto sink = [&](Action, double r) {
    ++summary.actions;
    summary.total_reward += r;
    summary.discounted_reward += weight * r;
    weight *= gamma;
  };
  Executor<decltype(sink)> exec(task, budget, sink);
  summary.termination = exec.Run(program.body());
  return summary;
}

std::string TraceToJsonl(const ExecTrace& trace) {
  std::string out;
  for (std::size_t t = 0; t < trace.actions.size(); ++t) {
    nlohmann::ordered_json rec;
    rec["t"] = t;
    rec["action"] = ActionName(trace.actions[t]);
    rec["reward"] = trace.rewards[t];
    rec["agentPos"] = {trace.positions[t].row, trace.positions[t].col};
    rec["heading"] = HeadingName(trace.headings[t]);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

}  // namespace pomp
