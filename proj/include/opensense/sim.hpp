#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "opensense/sched.hpp"
#include "opensense/trace.hpp"

namespace opensense {

// A scheduling policy maps the class observed at a wake (plus the previous
// period) to the next sensing period. Policies are total: unknown classes
// fall back to a period of 1.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int decide(int observed_class, int prev_period) const = 0;
  virtual std::string name() const = 0;
};

class FixedPolicy final : public Policy {
 public:
  explicit FixedPolicy(int period) : period_(period) {}
  int decide(int, int) const override { return period_; }
  std::string name() const override { return "fixed(" + std::to_string(period_) + ")"; }

 private:
  int period_;
};

class ClassPeriodPolicy final : public Policy {
 public:
  ClassPeriodPolicy(PeriodAssignment assignment, std::string name)
      : assignment_(std::move(assignment)), name_(std::move(name)) {}
  int decide(int observed_class, int) const override {
    return observed_class < 0 ? assignment_.fallback : assignment_.decide(observed_class);
  }
  std::string name() const override { return name_; }

 private:
  PeriodAssignment assignment_;
  std::string name_;
};

class QlbsPolicy final : public Policy {
 public:
  explicit QlbsPolicy(QTable table) : table_(std::move(table)) {}
  int decide(int observed_class, int prev_period) const override {
    return qlbs_decide(table_, {observed_class, prev_period});
  }
  std::string name() const override { return "qlbs"; }

 private:
  QTable table_;
};

struct TransitionRecord {
  int boundary_t = 0;
  int detect_t = 0;
  int latency = 0;   // detect_t - boundary_t
  int class_id = 0;  // class of the new event
};

struct SimMetrics {
  std::string policy_name;
  std::vector<TransitionRecord> transitions;
  long transmissions = 0;
  int cl_misses = 0;      // detected transitions with latency > CL_s
  int missed_events = 0;  // intervals containing no wake at all
  double normalized_ble = 0.0;
  long long cumulative_latency = 0;
};

// Observed class at a wake second; defaults to the ground-truth oracle but
// an open-world classifier can be plugged in (returning -1 for Unknown).
using Observer = std::function<int(int t)>;

// Replay a policy against a trace: wake at t=0, observe, pick a period,
// sleep, repeat until the trace ends. A transition at boundary b is detected
// at the first wake >= b; events with no wake inside them are missed and
// excluded from the latency list.
SimMetrics run_sim(const EventTrace& trace, const Policy& policy,
                   const ClassCatalog& catalog, const Observer& observer = {});

std::vector<SimMetrics> compare_policies(const EventTrace& trace,
                                         const std::vector<const Policy*>& policies,
                                         const ClassCatalog& catalog);

// `policy,transmissions,normalized_ble,cl_misses,missed_events,total_latency`
void write_metrics_csv(const std::string& path, const std::vector<SimMetrics>& rows);
// `boundary_t,detect_t,latency,class_id`
void write_transitions_csv(const std::string& path, const SimMetrics& metrics);

}  // namespace opensense
