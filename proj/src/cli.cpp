#include "opensense/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "opensense/experiments.hpp"
#include "opensense/sim.hpp"

namespace opensense {

namespace {

namespace fs = std::filesystem;

struct GlobalArgs {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
};

std::string out_path(const GlobalArgs& g, const std::string& file) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / file).string();
}

ClassCatalog catalog_for_trace(const EventTrace& trace, int cl) {
  ClassCatalog cat;
  for (int c = 0; c < trace.num_classes; ++c) {
    cat.names.push_back("class" + std::to_string(c));
    cat.cl_s.push_back(cl);
  }
  return cat;
}

void write_training_curve(const std::string& path, const TrainResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "episode,avg_penalty\n";
  char buf[32];
  for (std::size_t i = 0; i < result.avg_penalty.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", result.avg_penalty[i]);
    out << i << ',' << buf << '\n';
  }
}

std::unique_ptr<Policy> make_policy(const std::string& spec, const EventTrace& trace,
                                    const ClassCatalog& catalog,
                                    const std::string& qtable_path) {
  if (spec.rfind("fixed", 0) == 0) {
    int period = 1;
    const auto colon = spec.find(':');
    if (colon != std::string::npos) period = std::stoi(spec.substr(colon + 1));
    if (period < 1) throw CLI::ValidationError("fixed period must be >= 1");
    return std::make_unique<FixedPolicy>(period);
  }
  if (spec == "min" || spec == "min_interval")
    return std::make_unique<ClassPeriodPolicy>(min_interval_assign(intervals_of(trace)),
                                               "min_interval");
  if (spec == "clpa")
    return std::make_unique<ClassPeriodPolicy>(clpa_assignment(intervals_of(trace), catalog),
                                               "clpa");
  if (spec == "qlbs") {
    if (qtable_path.empty())
      throw CLI::ValidationError("--qtable is required for the qlbs policy");
    return std::make_unique<QlbsPolicy>(QTable::load(qtable_path));
  }
  throw CLI::ValidationError("unknown policy: " + spec);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"OpenSense-style sensor scheduling and open-world learning toolkit"};
  app.require_subcommand(1);
  app.set_config("--config");

  GlobalArgs global;
  app.add_option("--seed", global.seed, "Master seed; all randomness derives from it");
  app.add_option("--out", global.out_dir, "Output directory for data files");

  // gen-trace
  auto* gen = app.add_subcommand("gen-trace", "Generate a ground-truth event trace CSV");
  int gen_length = 7000;
  std::string gen_profile = "kitchen";
  std::string gen_profile_config;
  gen->add_option("--length", gen_length, "Trace length in seconds")
      ->check(CLI::PositiveNumber);
  gen->add_option("--profile", gen_profile, "Built-in class profile (kitchen)");
  gen->add_option("--profile-config", gen_profile_config,
                  "key=value file overriding the class profile");

  // train-qlbs
  auto* train = app.add_subcommand("train-qlbs", "Train or update the Q-learning scheduler");
  std::string train_trace_path, train_mode = "full", train_in_table;
  TrainConfig train_cfg;
  RewardWeights train_weights;
  int train_cl = 2;
  train->add_option("--trace", train_trace_path, "Training trace CSV")->required();
  train->add_option("--episodes", train_cfg.episodes, "Training episodes")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--epsilon", train_cfg.epsilon, "Exploration probability");
  train->add_option("--alpha", train_cfg.alpha, "Learning rate");
  train->add_option("--gamma", train_cfg.gamma, "Discount factor");
  train->add_option("--amax", train_cfg.max_action, "Largest action (seconds)");
  train->add_option("--wp1", train_weights.boundary_reward, "Cr1 reward");
  train->add_option("--wn1", train_weights.boundary_penalty, "Cr1 penalty");
  train->add_option("--wp2", train_weights.period_reward, "Cr2 reward");
  train->add_option("--wn2", train_weights.period_penalty, "Cr2 penalty");
  train->add_option("--cl", train_cl, "Uniform per-class CL_s (seconds)");
  train->add_option("--mode", train_mode, "full or update")
      ->check(CLI::IsMember({"full", "update"}));
  train->add_option("--theta", train_cfg.theta, "Update-mode convergence threshold");
  train->add_option("--nsuccess", train_cfg.n_success,
                    "Consecutive converged episodes to stop the update");
  train->add_option("--in-table", train_in_table, "Existing Q-table to warm-start from");

  // simulate / compare
  auto* sim = app.add_subcommand("simulate", "Replay one policy against a trace");
  auto* cmp = app.add_subcommand("compare", "Replay several policies against one trace");
  std::string sim_trace_path, sim_policy = "fixed:1", sim_qtable;
  std::string cmp_trace_path, cmp_policies = "fixed:1,min,clpa,qlbs", cmp_qtable;
  int sim_cl = 2, cmp_cl = 2;
  sim->add_option("--trace", sim_trace_path, "Trace CSV")->required();
  sim->add_option("--policy", sim_policy, "fixed:N | min | clpa | qlbs");
  sim->add_option("--qtable", sim_qtable, "Q-table file (qlbs policy)");
  sim->add_option("--cl", sim_cl, "Uniform per-class CL_s (seconds)");
  cmp->add_option("--trace", cmp_trace_path, "Trace CSV")->required();
  cmp->add_option("--policies", cmp_policies, "Comma-separated policy list");
  cmp->add_option("--qtable", cmp_qtable, "Q-table file (qlbs policy)");
  cmp->add_option("--cl", cmp_cl, "Uniform per-class CL_s (seconds)");

  // openworld
  auto* ow = app.add_subcommand("openworld", "Incremental open-world pipeline on blobs");
  OpenWorldConfig ow_cfg;
  ow->add_option("--known", ow_cfg.known_classes, "Initially known classes");
  ow->add_option("--batches", ow_cfg.novel_batches, "Incoming unknown-class batches");
  ow->add_option("--per-batch", ow_cfg.novel_per_batch, "Classes per batch");
  ow->add_option("--train-n", ow_cfg.train_per_class, "Training samples per class");
  ow->add_option("--test-n", ow_cfg.test_per_class, "Test samples per class");
  ow->add_option("--delta", ow_cfg.hyper.rejection_threshold, "EVM rejection threshold");
  ow->add_option("--tail", ow_cfg.hyper.tail_size, "EVM tail size");
  ow->add_option("--cover", ow_cfg.hyper.cover_threshold, "EVM cover threshold");
  ow->add_option("--multiplier", ow_cfg.hyper.distance_multiplier, "EVM distance multiplier");
  ow->add_option("--min-cluster", ow_cfg.min_cluster_samples,
                 "Smallest cluster admitted as a new class");

  // update-exp
  auto* upd = app.add_subcommand("update-exp", "Idle-window classifier-update case study");
  UpdaterCaseConfig upd_cfg;
  upd->add_option("--queue", upd_cfg.queue_size, "Pending unknown-class samples")
      ->check(CLI::PositiveNumber);
  upd->add_option("--tmin", upd_cfg.seconds_per_sample, "Seconds to train one sample");
  upd->add_option("--period", upd_cfg.period, "Idle window length (seconds)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      GeneratorConfig cfg = kitchen_profile();
      if (!gen_profile_config.empty())
        cfg = generator_config_from_kv(read_kv_file(gen_profile_config));
      else if (gen_profile != "kitchen")
        throw CLI::ValidationError("unknown profile: " + gen_profile);
      const EventTrace trace = generate_trace(global.seed, gen_length, cfg);
      write_trace_csv(out_path(global, "trace.csv"), trace);
    } else if (train->parsed()) {
      const EventTrace trace = read_trace_csv(train_trace_path);
      const ClassCatalog catalog = catalog_for_trace(trace, train_cl);
      train_cfg.seed = global.seed;
      train_cfg.update_mode = train_mode == "update";
      QTable old_table;
      if (!train_in_table.empty()) old_table = QTable::load(train_in_table);
      const TrainResult result = qlbs_train(trace, catalog, train_cfg, train_weights,
                                            old_table.empty() ? nullptr : &old_table);
      result.table.save(out_path(global, "qtable.txt"));
      write_training_curve(out_path(global, "training_curve.csv"), result);
    } else if (sim->parsed()) {
      const EventTrace trace = read_trace_csv(sim_trace_path);
      const ClassCatalog catalog = catalog_for_trace(trace, sim_cl);
      const auto policy = make_policy(sim_policy, trace, catalog, sim_qtable);
      const SimMetrics metrics = run_sim(trace, *policy, catalog);
      write_metrics_csv(out_path(global, "metrics.csv"), {metrics});
      write_transitions_csv(out_path(global, "transitions.csv"), metrics);
    } else if (cmp->parsed()) {
      const EventTrace trace = read_trace_csv(cmp_trace_path);
      const ClassCatalog catalog = catalog_for_trace(trace, cmp_cl);
      std::vector<std::unique_ptr<Policy>> policies;
      std::stringstream ss(cmp_policies);
      std::string spec;
      while (std::getline(ss, spec, ','))
        policies.push_back(make_policy(spec, trace, catalog, cmp_qtable));
      std::vector<const Policy*> ptrs;
      for (const auto& p : policies) ptrs.push_back(p.get());
      write_metrics_csv(out_path(global, "metrics.csv"),
                        compare_policies(trace, ptrs, catalog));
    } else if (ow->parsed()) {
      ow_cfg.seed = global.seed;
      write_owm_csv(out_path(global, "owm.csv"), run_openworld_experiment(ow_cfg));
    } else if (upd->parsed()) {
      write_update_log_csv(out_path(global, "update_log.csv"),
                           run_updater_case_study(upd_cfg));
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace opensense
