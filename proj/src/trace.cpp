#include "opensense/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "opensense/rng.hpp"

namespace opensense {

namespace {
constexpr std::uint64_t kTraceStreamTag = 0x7261CE;
constexpr std::uint64_t kWindowStreamTag = 0x317D0;
}  // namespace

ClassCatalog ClassCatalog::uniform(const GeneratorConfig& cfg, int cl) {
  ClassCatalog cat;
  for (const auto& c : cfg.classes) {
    cat.names.push_back(c.name);
    cat.cl_s.push_back(cl);
  }
  return cat;
}

GeneratorConfig kitchen_profile() {
  GeneratorConfig cfg;
  cfg.classes = {
      {"None", 20, 120},          {"Microwave", 30, 90}, {"Kettle", 60, 180},
      {"Faucet", 5, 30},          {"WasteDisposer", 5, 20},
      {"VentFan", 60, 300},
  };
  return cfg;
}

EventTrace generate_trace(std::uint64_t seed, int length, const GeneratorConfig& cfg) {
  if (length < 1) throw std::invalid_argument("generate_trace: length must be >= 1");
  if (cfg.classes.empty()) throw std::invalid_argument("generate_trace: empty class profile set");
  for (const auto& c : cfg.classes) {
    if (c.min_duration < 1 || c.min_duration > c.max_duration)
      throw std::invalid_argument("generate_trace: bad duration range for class " + c.name);
  }

  const int k = cfg.num_classes();
  SplitMix64 rng(SplitMix64::derive(seed, kTraceStreamTag));
  EventTrace trace;
  trace.num_classes = k;
  trace.class_ids.reserve(static_cast<std::size_t>(length));

  int current = rng.uniform_int(0, k - 1);
  while (trace.length() < length) {
    const auto& prof = cfg.classes[static_cast<std::size_t>(current)];
    int dur = rng.uniform_int(prof.min_duration, prof.max_duration);
    dur = std::min(dur, length - trace.length());
    trace.class_ids.insert(trace.class_ids.end(), static_cast<std::size_t>(dur), current);
    if (k > 1) {
      // Draw uniformly from the other K-1 classes.
      int next = rng.uniform_int(0, k - 2);
      if (next >= current) ++next;
      current = next;
    }
  }
  return trace;
}

std::vector<EventInterval> intervals_of(const EventTrace& trace) {
  if (trace.length() == 0) throw std::invalid_argument("intervals_of: empty trace");
  std::vector<EventInterval> out;
  int start = 0;
  for (int t = 1; t <= trace.length(); ++t) {
    if (t == trace.length() || trace.class_ids[static_cast<std::size_t>(t)] !=
                                   trace.class_ids[static_cast<std::size_t>(start)]) {
      out.push_back({trace.class_ids[static_cast<std::size_t>(start)], start, t - start});
      start = t;
    }
  }
  return out;
}

EventTrace trace_from_intervals(const std::vector<EventInterval>& intervals, int num_classes) {
  EventTrace trace;
  trace.num_classes = num_classes;
  for (const auto& iv : intervals)
    trace.class_ids.insert(trace.class_ids.end(), static_cast<std::size_t>(iv.duration),
                           iv.class_id);
  return trace;
}

SensorWindow synthesize_window(const EventTrace& trace, int t, std::uint64_t seed,
                               const GeneratorConfig& cfg) {
  if (t < 0 || t >= trace.length())
    throw std::out_of_range("synthesize_window: t outside trace");

  const int cls = trace.at(t);
  const int c_ch = cfg.channels;
  const int w = cfg.samples_per_second;
  SensorWindow win;
  win.timestamp = t;
  win.channels = c_ch;
  win.samples = w;
  win.data.resize(static_cast<std::size_t>(c_ch) * w);

  // Per-class signature: frequency bin 2 + class_id (mod usable bins), and a
  // mean offset scaled per channel so classes are separable in feature space.
  const int usable_bins = std::max(1, w / 2 - 2);
  const int bin = 2 + cls % usable_bins;
  SplitMix64 noise(SplitMix64::derive(seed, kWindowStreamTag ^ (static_cast<std::uint64_t>(t) << 20)));

  for (int c = 0; c < c_ch; ++c) {
    const double offset = cfg.class_mean_step * cls * (1.0 + 0.25 * c);
    for (int i = 0; i < w; ++i) {
      double v = offset +
                 cfg.signal_amplitude *
                     std::sin(2.0 * M_PI * bin * (i + c) / static_cast<double>(w));
      if (cfg.noise_std > 0.0) v += noise.normal(0.0, cfg.noise_std);
      win.data[static_cast<std::size_t>(c) * w + i] = v;
    }
  }
  return win;
}

void write_trace_csv(const std::string& path, const EventTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,class_id\n";
  for (int t = 0; t < trace.length(); ++t) out << t << ',' << trace.at(t) << '\n';
}

EventTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(in, line);  // header
  EventTrace trace;
  int max_class = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed trace row: " + line);
    const int cls = std::stoi(line.substr(comma + 1));
    trace.class_ids.push_back(cls);
    max_class = std::max(max_class, cls);
  }
  trace.num_classes = max_class + 1;
  return trace;
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

GeneratorConfig generator_config_from_kv(const std::map<std::string, std::string>& kv) {
  GeneratorConfig cfg = kitchen_profile();
  // Count explicitly declared classes; fall back to the kitchen profile when
  // the file declares none.
  int declared = 0;
  while (kv.count("class." + std::to_string(declared) + ".min")) ++declared;
  if (declared > 0) {
    cfg.classes.clear();
    for (int i = 0; i < declared; ++i) {
      const std::string p = "class." + std::to_string(i) + ".";
      ClassProfile prof;
      auto it = kv.find(p + "name");
      prof.name = it != kv.end() ? it->second : ("class" + std::to_string(i));
      prof.min_duration = std::stoi(kv.at(p + "min"));
      prof.max_duration = std::stoi(kv.at(p + "max"));
      cfg.classes.push_back(prof);
    }
  }
  auto get = [&kv](const char* key, auto& dst) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    if constexpr (std::is_same_v<std::decay_t<decltype(dst)>, int>)
      dst = std::stoi(it->second);
    else
      dst = std::stod(it->second);
  };
  get("window.channels", cfg.channels);
  get("window.samples", cfg.samples_per_second);
  get("window.noise_std", cfg.noise_std);
  get("window.class_mean_step", cfg.class_mean_step);
  get("window.amplitude", cfg.signal_amplitude);
  return cfg;
}

void write_generator_config(const std::string& path, const GeneratorConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < cfg.classes.size(); ++i) {
    out << "class." << i << ".name=" << cfg.classes[i].name << '\n';
    out << "class." << i << ".min=" << cfg.classes[i].min_duration << '\n';
    out << "class." << i << ".max=" << cfg.classes[i].max_duration << '\n';
  }
  out << "window.channels=" << cfg.channels << '\n';
  out << "window.samples=" << cfg.samples_per_second << '\n';
  out << "window.noise_std=" << cfg.noise_std << '\n';
  out << "window.class_mean_step=" << cfg.class_mean_step << '\n';
  out << "window.amplitude=" << cfg.signal_amplitude << '\n';
}

}  // namespace opensense
