#include "opensense/updater.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace opensense {

double TrainCostModel::seconds_for(int n) const {
  double acc = 0.0;
  double p = 1.0;
  for (double c : coeffs) {
    acc += c * p;
    p *= n;
  }
  return acc;
}

int compute_samples_to_train(const TrainCostModel& cost, int t_sp) {
  if (t_sp < 1) throw std::invalid_argument("compute_samples_to_train: T_sp < 1");
  if (cost.seconds_for(1) > t_sp) return 0;
  int n = 1;
  while (cost.seconds_for(n + 1) <= t_sp) ++n;
  return n;
}

ClassifierUpdateStep update_classifier_step(std::deque<FeatureVector>& queue,
                                            const TrainCostModel& cost, int t_sp,
                                            const BatchTrainer& trainer) {
  ClassifierUpdateStep step;
  if (queue.empty()) {
    step.status = UpdateStatus::Success;
    return step;
  }

  const int budget = compute_samples_to_train(cost, t_sp);
  if (budget == 0) {
    step.status = UpdateStatus::Waiting;
    step.queue_remaining = queue.size();
    return step;
  }

  const std::size_t batch_size = std::min<std::size_t>(static_cast<std::size_t>(budget),
                                                       queue.size());
  std::vector<FeatureVector> batch(queue.begin(),
                                   queue.begin() + static_cast<long>(batch_size));
  trainer(batch);
  queue.erase(queue.begin(), queue.begin() + static_cast<long>(batch_size));

  step.samples_trained = static_cast<int>(batch_size);
  step.queue_remaining = queue.size();
  step.status = queue.empty() ? UpdateStatus::Success : UpdateStatus::Waiting;
  return step;
}

namespace {
bool gate_met(const IntervalHistory& history, const ClassCatalog& catalog, int min_fresh) {
  for (int cls = 0; cls < catalog.num_classes(); ++cls) {
    auto it = history.fresh_by_class.find(cls);
    if (it == history.fresh_by_class.end() ||
        static_cast<int>(it->second.size()) < min_fresh)
      return false;
  }
  return true;
}
}  // namespace

SchedulerUpdateResult update_clpa(const IntervalHistory& history, const ClassCatalog& catalog,
                                  int min_fresh_intervals) {
  SchedulerUpdateResult result;
  if (!gate_met(history, catalog, min_fresh_intervals)) return result;

  std::vector<EventInterval> intervals;
  for (const auto& [cls, durations] : history.accumulated_by_class)
    for (int d : durations) intervals.push_back({cls, 0, d});
  result.assignment = clpa_assignment(intervals, catalog);
  result.status = UpdateStatus::Success;
  return result;
}

SchedulerUpdateResult update_qlbs(const IntervalHistory& history, const EventTrace& recent,
                                  const ClassCatalog& catalog, const TrainConfig& cfg,
                                  const RewardWeights& weights, const QTable& old_table,
                                  int min_fresh_intervals) {
  SchedulerUpdateResult result;
  if (!gate_met(history, catalog, min_fresh_intervals)) return result;

  TrainConfig update_cfg = cfg;
  update_cfg.update_mode = true;
  result.train = qlbs_train(recent, catalog, update_cfg, weights, &old_table);
  result.status = UpdateStatus::Success;
  return result;
}

void write_update_log_csv(const std::string& path, const std::vector<UpdateLogEntry>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,mode,samples_trained,queue_remaining,status\n";
  for (const auto& e : log)
    out << e.t << ',' << e.mode << ',' << e.samples_trained << ',' << e.queue_remaining
        << ',' << e.status << '\n';
}

}  // namespace opensense
