#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace opensense {

// One contiguous event of a single class. `duration` is the T_e of that event.
struct EventInterval {
  int class_id = 0;
  int start = 0;     // seconds
  int duration = 0;  // seconds, >= 1
};

// Ground-truth timeline at 1-second resolution: class_ids[t] is the event
// class active at second t.
struct EventTrace {
  std::vector<int> class_ids;
  int num_classes = 0;

  int length() const { return static_cast<int>(class_ids.size()); }
  int at(int t) const { return class_ids.at(static_cast<std::size_t>(t)); }
};

// Per-class duration range for the synthetic generator.
struct ClassProfile {
  std::string name;
  int min_duration = 1;  // seconds
  int max_duration = 1;  // seconds
};

struct GeneratorConfig {
  std::vector<ClassProfile> classes;
  // Synthetic sensor window shape and per-class signal signature.
  int channels = 4;
  int samples_per_second = 32;
  double noise_std = 0.05;
  double class_mean_step = 2.0;  // per-class mean offset = class_id * step
  double signal_amplitude = 1.0;

  int num_classes() const { return static_cast<int>(classes.size()); }
};

// Class names plus per-class classification latency constraint CL_s.
struct ClassCatalog {
  std::vector<std::string> names;
  std::vector<int> cl_s;  // seconds, >= 0, indexed by class_id

  int num_classes() const { return static_cast<int>(names.size()); }
  int cl_for(int class_id) const { return cl_s.at(static_cast<std::size_t>(class_id)); }

  static ClassCatalog uniform(const GeneratorConfig& cfg, int cl);
};

// One second of raw multichannel readings, row-major [channel][sample].
struct SensorWindow {
  int timestamp = 0;
  int channels = 0;
  int samples = 0;
  std::vector<double> data;

  double at(int c, int i) const {
    return data[static_cast<std::size_t>(c) * samples + i];
  }
};

// The six-class kitchen profile with default dwell-time ranges.
GeneratorConfig kitchen_profile();

// Random trace whose run-length encoding respects the per-class duration
// ranges; adjacent intervals never share a class (when more than one class
// exists). The final interval may be truncated to fit `length`.
EventTrace generate_trace(std::uint64_t seed, int length, const GeneratorConfig& cfg);

// Run-length encoding of the trace. Concatenating the result reproduces the
// trace exactly.
std::vector<EventInterval> intervals_of(const EventTrace& trace);

// Inverse of intervals_of.
EventTrace trace_from_intervals(const std::vector<EventInterval>& intervals, int num_classes);

// Deterministic synthetic window for second t: per-class sinusoid frequency
// plus per-class mean offset plus seeded Gaussian noise.
SensorWindow synthesize_window(const EventTrace& trace, int t, std::uint64_t seed,
                               const GeneratorConfig& cfg);

// Trace file I/O: CSV with header `t,class_id`, one row per second.
void write_trace_csv(const std::string& path, const EventTrace& trace);
EventTrace read_trace_csv(const std::string& path);

// Flat key=value config files (`class.0.min=20` style).
std::map<std::string, std::string> read_kv_file(const std::string& path);
GeneratorConfig generator_config_from_kv(const std::map<std::string, std::string>& kv);
void write_generator_config(const std::string& path, const GeneratorConfig& cfg);

}  // namespace opensense
