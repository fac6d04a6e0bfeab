#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "opensense/openworld.hpp"
#include "opensense/updater.hpp"

namespace opensense {

// Deterministic Gaussian blobs: class k is centred at center_scale * e_k in
// R^dim, with unit-ish isotropic noise.
void make_blobs(std::uint64_t seed, int num_classes, int dim, int points_per_class,
                double center_scale, double sigma, std::vector<FeatureVector>& features,
                std::vector<int>& labels);

struct OpenWorldConfig {
  std::uint64_t seed = 1;
  int known_classes = 9;
  int novel_batches = 3;
  int novel_per_batch = 3;
  int train_per_class = 100;
  int test_per_class = 50;
  double center_scale = 10.0;
  double sigma = 0.5;
  int min_cluster_samples = 10;
  // The blobs are isotropic by construction, and z-scoring against only the
  // known classes would inflate noise along the yet-unseen axes.
  EvmHyper hyper{.standardize = false};
};

struct IncrementResult {
  int increment = 0;
  OWConfusion confusion;
  double owm_score = 0.0;
  int discovered_classes = 0;  // classes admitted by this increment's update
};

// The incremental open-world pipeline: fit on the known classes, then per
// batch of incoming classes evaluate (predict -> reject), cluster the
// rejected stream with FINCH, and absorb surviving clusters via EVM update.
std::vector<IncrementResult> run_openworld_experiment(const OpenWorldConfig& cfg);

void write_owm_csv(const std::string& path, const std::vector<IncrementResult>& rows);

struct UpdaterCaseConfig {
  int queue_size = 100;
  double seconds_per_sample = 31.0;  // T_min for the linear cost model
  int period = 33;                   // idle window between wakes
  int max_windows = 100000;
};

// Idle-window drain of a pending-sample queue against a simulated linear
// training cost; one log row per idle window until the queue empties.
std::vector<UpdateLogEntry> run_updater_case_study(const UpdaterCaseConfig& cfg);

}  // namespace opensense
