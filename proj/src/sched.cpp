#include "opensense/sched.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "opensense/rng.hpp"

namespace opensense {

namespace {
constexpr std::uint64_t kTrainStreamTag = 0x9135;

bool period_feasible(const std::vector<int>& durations, int t_sp, int cl_s) {
  for (int d : durations) {
    const int n = (d + t_sp - 1) / t_sp;  // ceil(d / t_sp)
    if (n * t_sp - d > cl_s) return false;
  }
  return true;
}
}  // namespace

std::optional<int> clpa_assign(const std::vector<int>& durations, int cl_s) {
  if (durations.empty()) return std::nullopt;
  for (int d : durations)
    if (d < 1) throw std::invalid_argument("clpa_assign: duration < 1");
  if (cl_s < 0) throw std::invalid_argument("clpa_assign: CL_s < 0");

  const int base = *std::min_element(durations.begin(), durations.end());
  for (int t_sp = base; t_sp >= 2; --t_sp)
    if (period_feasible(durations, t_sp, cl_s)) return t_sp;
  return std::nullopt;
}

PeriodAssignment clpa_assignment(const std::vector<EventInterval>& intervals,
                                 const ClassCatalog& catalog) {
  std::map<int, std::vector<int>> by_class;
  for (const auto& iv : intervals) by_class[iv.class_id].push_back(iv.duration);

  PeriodAssignment pa;
  for (const auto& [cls, durations] : by_class) {
    auto period = clpa_assign(durations, catalog.cl_for(cls));
    // Infeasible: CL_s=1 forces T_sp=2, the smallest period worth idling for.
    pa.period_by_class[cls] = period.value_or(2);
  }
  return pa;
}

PeriodAssignment min_interval_assign(const std::vector<EventInterval>& intervals) {
  PeriodAssignment pa;
  for (const auto& iv : intervals) {
    auto it = pa.period_by_class.find(iv.class_id);
    if (it == pa.period_by_class.end() || iv.duration < it->second)
      pa.period_by_class[iv.class_id] = iv.duration;
  }
  return pa;
}

double QTable::row_max(const QState& s) const {
  const std::size_t base = state_index(s) * max_action_;
  double best = weights_[base];
  for (int a = 1; a < max_action_; ++a) best = std::max(best, weights_[base + a]);
  return best;
}

void QTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << num_classes_ << ' ' << max_action_ << '\n';
  char buf[32];
  for (int cls = 0; cls < num_classes_; ++cls) {
    for (int prev = 1; prev <= max_action_; ++prev) {
      out << cls << ' ' << prev;
      const QState s{cls, prev};
      for (int a = 1; a <= max_action_; ++a) {
        std::snprintf(buf, sizeof buf, " %.17g", at(s, a));
        out << buf;
      }
      out << '\n';
    }
  }
}

QTable QTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  int k = 0, a_max = 0;
  if (!(in >> k >> a_max) || k < 1 || a_max < 1)
    throw std::runtime_error("malformed Q-table header in " + path);
  QTable table(k, a_max);
  for (int row = 0; row < k * a_max; ++row) {
    int cls = 0, prev = 0;
    if (!(in >> cls >> prev)) throw std::runtime_error("truncated Q-table in " + path);
    const QState s{cls, prev};
    for (int a = 1; a <= a_max; ++a)
      if (!(in >> table.at(s, a))) throw std::runtime_error("truncated Q-table in " + path);
  }
  return table;
}

TraceCursor::TraceCursor(const EventTrace& trace)
    : trace_(&trace), intervals_(intervals_of(trace)) {
  interval_end_ = intervals_.front().duration;
}

int TraceCursor::current_class() const {
  const std::size_t idx = std::min(interval_idx_, intervals_.size() - 1);
  return intervals_[idx].class_id;
}

void TraceCursor::advance(int seconds) {
  t_ += seconds;
  while (interval_idx_ + 1 < intervals_.size() && t_ >= interval_end_) {
    ++interval_idx_;
    interval_end_ = intervals_[interval_idx_].start + intervals_[interval_idx_].duration;
  }
}

StepOutcome qlbs_take_action(TraceCursor& cursor, const QState& state, int action,
                             const RewardWeights& weights, const ClassCatalog& catalog) {
  if (action < 1) throw std::invalid_argument("qlbs_take_action: action < 1");

  StepOutcome out;
  const int t_ideal = cursor.t_ideal();
  if (action >= t_ideal) {
    // Sleep crosses into the next event; Cr1 judges the slack at the first
    // boundary against the CL_s of the class active at wake.
    out.boundary_crossed = true;
    cursor.advance(action);
    const int wake_class = cursor.current_class();
    const int slack = action - t_ideal;
    out.reward = slack <= catalog.cl_for(wake_class) ? weights.boundary_reward
                                                     : -weights.boundary_penalty;
    out.next = {wake_class, action};
  } else {
    cursor.advance(action);
    out.reward =
        action >= state.prev_period ? weights.period_reward : -weights.period_penalty;
    out.next = {state.class_id, action};
  }
  return out;
}

TrainResult qlbs_train(const EventTrace& trace, const ClassCatalog& catalog,
                       const TrainConfig& cfg, const RewardWeights& weights,
                       const QTable* old_table) {
  if (trace.length() == 0) throw std::invalid_argument("qlbs_train: empty trace");
  if (cfg.max_action < 1) throw std::invalid_argument("qlbs_train: max_action < 1");
  if (cfg.update_mode && (old_table == nullptr || old_table->empty()))
    throw std::invalid_argument("qlbs_train: update mode requires an existing table");

  TrainResult result;
  result.table = old_table != nullptr && !old_table->empty()
                     ? *old_table
                     : QTable(catalog.num_classes(), cfg.max_action);
  QTable& q = result.table;

  SplitMix64 rng(SplitMix64::derive(cfg.seed, kTrainStreamTag));
  double cur_avg_penalty = 0.0;
  int success_episodes = 0;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const double prev_avg_penalty = cur_avg_penalty;
    TraceCursor cursor(trace);
    QState state{trace.at(0), 1};
    long steps = 0;
    long penalties = 0;

    while (!cursor.done()) {
      int action;
      if (rng.next_double() <= cfg.epsilon)
        action = rng.uniform_int(1, cfg.max_action);
      else
        action = qlbs_decide(q, state);

      const StepOutcome step = qlbs_take_action(cursor, state, action, weights, catalog);
      const double bootstrap = cursor.done() ? 0.0 : q.row_max(step.next);
      double& cell = q.at(state, action);
      cell = (1.0 - cfg.alpha) * cell + cfg.alpha * (step.reward + cfg.gamma * bootstrap);

      if (step.reward < 0.0) ++penalties;
      ++steps;
      state = step.next;
    }

    cur_avg_penalty = static_cast<double>(penalties) / static_cast<double>(steps);
    result.avg_penalty.push_back(cur_avg_penalty);
    ++result.episodes_run;

    if (cfg.update_mode) {
      if (std::abs(cur_avg_penalty - prev_avg_penalty) <= cfg.theta)
        ++success_episodes;
      else
        success_episodes = 0;
      if (success_episodes >= cfg.n_success) return result;
    }
  }
  return result;
}

int qlbs_decide(const QTable& table, const QState& state) {
  if (state.class_id < 0 || state.class_id >= table.num_classes() ||
      state.prev_period < 1 || state.prev_period > table.max_action())
    return 1;  // unknown class or out-of-range state: fixed fallback
  int best_action = 1;
  double best = table.at(state, 1);
  for (int a = 2; a <= table.max_action(); ++a) {
    const double v = table.at(state, a);
    if (v > best) {
      best = v;
      best_action = a;
    }
  }
  return best_action;
}

void write_assignment_csv(const std::string& path, const PeriodAssignment& pa) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "class_id,T_sp\n";
  for (const auto& [cls, period] : pa.period_by_class) out << cls << ',' << period << '\n';
}

PeriodAssignment read_assignment_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(in, line);  // header
  PeriodAssignment pa;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    pa.period_by_class[std::stoi(line.substr(0, comma))] = std::stoi(line.substr(comma + 1));
  }
  return pa;
}

}  // namespace opensense
