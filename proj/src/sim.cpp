#include "opensense/sim.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace opensense {

SimMetrics run_sim(const EventTrace& trace, const Policy& policy,
                   const ClassCatalog& catalog, const Observer& observer) {
  if (trace.length() == 0) throw std::invalid_argument("run_sim: empty trace");

  SimMetrics m;
  m.policy_name = policy.name();

  std::vector<int> wakes;
  int t = 0;
  int prev_period = 1;
  while (t < trace.length()) {
    wakes.push_back(t);
    const int observed = observer ? observer(t) : trace.at(t);
    const int period = std::max(1, policy.decide(observed, prev_period));
    prev_period = period;
    t += period;
  }
  m.transmissions = static_cast<long>(wakes.size());
  m.normalized_ble = static_cast<double>(m.transmissions) / trace.length();

  const auto intervals = intervals_of(trace);
  std::size_t wi = 0;
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const auto& iv = intervals[k];
    // First wake at or after the interval start.
    while (wi < wakes.size() && wakes[wi] < iv.start) ++wi;
    const bool observed_inside = wi < wakes.size() && wakes[wi] < iv.start + iv.duration;
    if (!observed_inside) {
      ++m.missed_events;
      continue;
    }
    if (k == 0) continue;  // no transition precedes the first event
    TransitionRecord rec;
    rec.boundary_t = iv.start;
    rec.detect_t = wakes[wi];
    rec.latency = rec.detect_t - rec.boundary_t;
    rec.class_id = iv.class_id;
    m.transitions.push_back(rec);
    m.cumulative_latency += rec.latency;
    if (rec.latency > catalog.cl_for(iv.class_id)) ++m.cl_misses;
  }
  return m;
}

std::vector<SimMetrics> compare_policies(const EventTrace& trace,
                                         const std::vector<const Policy*>& policies,
                                         const ClassCatalog& catalog) {
  if (policies.size() < 2)
    throw std::invalid_argument("compare_policies: need at least 2 policies");
  std::vector<SimMetrics> out;
  out.reserve(policies.size());
  for (const Policy* p : policies) out.push_back(run_sim(trace, *p, catalog));
  return out;
}

void write_metrics_csv(const std::string& path, const std::vector<SimMetrics>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "policy,transmissions,normalized_ble,cl_misses,missed_events,total_latency\n";
  char buf[32];
  for (const auto& m : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", m.normalized_ble);
    out << m.policy_name << ',' << m.transmissions << ',' << buf << ',' << m.cl_misses
        << ',' << m.missed_events << ',' << m.cumulative_latency << '\n';
  }
}

void write_transitions_csv(const std::string& path, const SimMetrics& metrics) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "boundary_t,detect_t,latency,class_id\n";
  for (const auto& r : metrics.transitions)
    out << r.boundary_t << ',' << r.detect_t << ',' << r.latency << ',' << r.class_id << '\n';
}

}  // namespace opensense
