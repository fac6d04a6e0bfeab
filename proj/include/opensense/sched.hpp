#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opensense/trace.hpp"

namespace opensense {

// Per-class fixed sensing periods (CLPA or minimum-class-interval output).
// Classes absent from the map fall back to a period of 1: a newly discovered
// class has no period until the updater runs.
struct PeriodAssignment {
  std::map<int, int> period_by_class;
  int fallback = 1;

  int decide(int class_id) const {
    auto it = period_by_class.find(class_id);
    return it == period_by_class.end() ? fallback : it->second;
  }
};

// Largest T_sp in [2, min(T_e)] such that every interval satisfies
// ceil(T_e/T_sp)*T_sp - T_e <= cl_s. nullopt when no such period exists;
// the caller may then raise CL_s (CL_s=1 always admits T_sp=2 when
// min(T_e) >= 2).
std::optional<int> clpa_assign(const std::vector<int>& durations, int cl_s);

// CLPA over per-class interval sets; infeasible classes fall back to the
// minimum guaranteed-feasible period of 2.
PeriodAssignment clpa_assignment(const std::vector<EventInterval>& intervals,
                                 const ClassCatalog& catalog);

// Per-class T_sp = min event duration of that class; classes with no
// observed intervals use the fixed fallback of 1.
PeriodAssignment min_interval_assign(const std::vector<EventInterval>& intervals);

// Q-learning state: class of the current event plus the previous period.
struct QState {
  int class_id = 0;
  int prev_period = 1;
};

// Dense (K * A_max) x A_max action-weight matrix. Actions are integer
// periods 1..A_max.
class QTable {
 public:
  QTable() = default;
  QTable(int num_classes, int max_action)
      : num_classes_(num_classes),
        max_action_(max_action),
        weights_(static_cast<std::size_t>(num_classes) * max_action * max_action, 0.0) {}

  int num_classes() const { return num_classes_; }
  int max_action() const { return max_action_; }
  bool empty() const { return weights_.empty(); }

  std::size_t state_index(const QState& s) const {
    return static_cast<std::size_t>(s.class_id) * max_action_ + (s.prev_period - 1);
  }
  double& at(const QState& s, int action) {
    return weights_[state_index(s) * max_action_ + (action - 1)];
  }
  double at(const QState& s, int action) const {
    return weights_[state_index(s) * max_action_ + (action - 1)];
  }

  double row_max(const QState& s) const;

  void save(const std::string& path) const;
  static QTable load(const std::string& path);

 private:
  int num_classes_ = 0;
  int max_action_ = 0;
  std::vector<double> weights_;
};

// Reward/penalty magnitudes for the two training criteria: boundary slack
// within CL_s (Cr1) and nondecreasing period (Cr2). Penalties are applied
// as negative rewards.
struct RewardWeights {
  double boundary_reward = 10.0;   // w_p1
  double boundary_penalty = 50.0;  // w_n1
  double period_reward = 1.0;      // w_p2
  double period_penalty = 5.0;     // w_n2
};

struct TrainConfig {
  int episodes = 20000;
  double epsilon = 0.1;
  double alpha = 0.1;
  double gamma = 0.6;
  int max_action = 100;
  bool update_mode = false;
  double theta = 0.0;   // average-penalty convergence threshold (update mode)
  int n_success = 0;    // consecutive episodes below theta (update mode)
  std::uint64_t seed = 0;
};

// Training-time walk over a ground-truth trace. t_ideal() is the remaining
// seconds of the current event at the moment of the action.
class TraceCursor {
 public:
  explicit TraceCursor(const EventTrace& trace);

  int time() const { return t_; }
  bool done() const { return t_ >= trace_->length(); }
  int current_class() const;
  int t_ideal() const { return interval_end_ - t_; }
  void advance(int seconds);

 private:
  const EventTrace* trace_;
  std::vector<EventInterval> intervals_;
  std::size_t interval_idx_ = 0;
  int interval_end_ = 0;
  int t_ = 0;
};

struct StepOutcome {
  QState next;
  double reward = 0.0;
  bool boundary_crossed = false;
};

// One scheduling action during training. Crossing an event boundary judges
// Cr1 against the first boundary (slack = T_sp - T_ideal, compared to the
// CL_s of the class active at wake); otherwise Cr2 compares the action to
// the previous period. Advances the cursor by `action` seconds.
StepOutcome qlbs_take_action(TraceCursor& cursor, const QState& state, int action,
                             const RewardWeights& weights, const ClassCatalog& catalog);

struct TrainResult {
  QTable table;
  int episodes_run = 0;
  std::vector<double> avg_penalty;  // one entry per completed episode
};

// Episodic epsilon-greedy training (full-train) or convergence-gated
// updating (update mode) of the Q-table over a trace.
TrainResult qlbs_train(const EventTrace& trace, const ClassCatalog& catalog,
                       const TrainConfig& cfg, const RewardWeights& weights,
                       const QTable* old_table = nullptr);

// Greedy action for a state; ties broken by the smallest action index.
// Unknown classes (outside the table) fall back to period 1.
int qlbs_decide(const QTable& table, const QState& state);

// CLPA assignment file: CSV `class_id,T_sp`.
void write_assignment_csv(const std::string& path, const PeriodAssignment& pa);
PeriodAssignment read_assignment_csv(const std::string& path);

}  // namespace opensense
