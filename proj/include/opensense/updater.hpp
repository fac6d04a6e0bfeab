#pragma once

#include <deque>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "opensense/openworld.hpp"
#include "opensense/sched.hpp"

namespace opensense {

// Predicted wall time to train N samples, as a polynomial in N. T_min is the
// time to train a single sample; no update fits in an idle window shorter
// than that.
struct TrainCostModel {
  std::vector<double> coeffs;  // seconds(N) = sum_i coeffs[i] * N^i

  double seconds_for(int n) const;
  double t_min() const { return seconds_for(1); }

  static TrainCostModel linear(double seconds_per_sample, double fixed_overhead = 0.0) {
    return {{fixed_overhead, seconds_per_sample}};
  }
};

// Largest N whose predicted training time fits in t_sp; 0 below T_min.
int compute_samples_to_train(const TrainCostModel& cost, int t_sp);

enum class UpdateStatus {
  Success,       // queue drained (classifier) / scheduler refreshed
  Waiting,       // partial progress, wait for the next idle window
  Insufficient,  // scheduler update gate not met
};

struct ClassifierUpdateStep {
  UpdateStatus status = UpdateStatus::Waiting;
  int samples_trained = 0;
  std::size_t queue_remaining = 0;
};

// Called with the batch of samples to absorb into the model.
using BatchTrainer = std::function<void(const std::vector<FeatureVector>&)>;

// One idle window of classifier updating: trains as many queued samples as
// the window allows and pops them. Success once the queue is drained; an
// empty queue is trivially Success.
ClassifierUpdateStep update_classifier_step(std::deque<FeatureVector>& queue,
                                            const TrainCostModel& cost, int t_sp,
                                            const BatchTrainer& trainer);

// Fresh per-class event durations observed since the last scheduler update.
struct IntervalHistory {
  std::map<int, std::vector<int>> fresh_by_class;
  std::map<int, std::vector<int>> accumulated_by_class;  // includes fresh

  void record(int class_id, int duration) {
    fresh_by_class[class_id].push_back(duration);
    accumulated_by_class[class_id].push_back(duration);
  }
};

struct SchedulerUpdateResult {
  UpdateStatus status = UpdateStatus::Insufficient;
  PeriodAssignment assignment;  // CLPA path
  TrainResult train;            // QLBS path
};

// CLPA refresh over the accumulated intervals, gated on every known class
// having at least `min_fresh_intervals` fresh observations.
SchedulerUpdateResult update_clpa(const IntervalHistory& history, const ClassCatalog& catalog,
                                  int min_fresh_intervals = 5);

// Convergence-gated QLBS update (Alg.-style warm start from old_table),
// gated the same way.
SchedulerUpdateResult update_qlbs(const IntervalHistory& history, const EventTrace& recent,
                                  const ClassCatalog& catalog, const TrainConfig& cfg,
                                  const RewardWeights& weights, const QTable& old_table,
                                  int min_fresh_intervals = 5);

struct UpdateLogEntry {
  int t = 0;
  std::string mode;
  int samples_trained = 0;
  std::size_t queue_remaining = 0;
  std::string status;
};

// `t,mode,samples_trained,queue_remaining,status`
void write_update_log_csv(const std::string& path, const std::vector<UpdateLogEntry>& log);

}  // namespace opensense
