#ifndef POMP_TESTS_SUPPORT_FIXED_TASK_HPP_
#define POMP_TESTS_SUPPORT_FIXED_TASK_HPP_

#include <memory>
#include <string>
#include <vector>

#include "pomp/tasks.hpp"

namespace pomp::testing {

// A hand-drawn world with no task rules: every action earns `per_pick` if it
// picks a marker, else zero. Horizon and costs follow `as`.
class FixedTask final : public TaskInstance {
 public:
  FixedTask(const std::vector<std::string>& rows, double per_pick = 0.0,
            TaskId as = TaskId::kMaze)
      : TaskInstance(as, 0, 1), per_pick_(per_pick) {
    world_ = GridWorld::FromRows(rows);
  }
  std::unique_ptr<TaskInstance> Clone() const override {
    return std::make_unique<FixedTask>(*this);
  }

 protected:
  double OnAction(Action a, const ActionEffect& e) override {
    return a == Action::kPickMarker && e.markers_before > 0 ? per_pick_ : 0.0;
  }

 private:
  double per_pick_;
};

}  // namespace pomp::testing

#endif  // POMP_TESTS_SUPPORT_FIXED_TASK_HPP_
