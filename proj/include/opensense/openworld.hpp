#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opensense/trace.hpp"

namespace opensense {

using FeatureVector = std::vector<double>;

// Per-channel mean, standard deviation, dominant FFT bin index (DC
// excluded) and dominant FFT magnitude: dimension 4*C.
FeatureVector extract_features(const SensorWindow& window);

// Two-parameter Weibull fit by maximum likelihood (fixed-point iteration on
// the shape), falling back to method-of-moments when the iteration does not
// converge or the data is degenerate.
struct WeibullFit {
  double shape = 1.0;  // kappa
  double scale = 1.0;  // lambda
};
WeibullFit weibull_mle(const std::vector<double>& samples);

struct ExtremeVector {
  FeatureVector anchor;  // standardized coordinates
  double shape = 1.0;
  double scale = 1.0;
  int class_id = 0;
};

struct EvmHyper {
  int tail_size = 100;             // tau
  double cover_threshold = 0.7;
  double distance_multiplier = 0.4;
  double rejection_threshold = 0.5;  // delta
  bool standardize = true;
};

struct EvmPrediction {
  int class_id = -1;  // -1 = Unknown
  double probability = 0.0;

  bool unknown() const { return class_id < 0; }
};

// Extreme Value Machine: per-class extreme vectors, each an anchor with a
// Weibull inclusion model Psi(x) = exp(-(||x - anchor|| / scale)^shape).
class EvmModel {
 public:
  EvmModel() = default;

  // Fit from scratch. Requires >= 2 classes with >= 2 samples each. Each
  // point's Weibull is fitted to its tau smallest distances to points of
  // other classes, scaled by the distance multiplier; each class is then
  // reduced by greedy set cover at the cover threshold.
  static EvmModel fit(const std::vector<FeatureVector>& features,
                      const std::vector<int>& labels, const EvmHyper& hyper);

  // Incremental update: the (new or extended) class is refitted against the
  // anchors of all other classes; other classes' EVs are untouched. Returns
  // a new model.
  EvmModel updated(const std::vector<FeatureVector>& features, int label) const;

  // Max Psi over all EVs; Unknown iff below the rejection threshold. Ties
  // resolve to the lowest class_id, then lowest EV index.
  EvmPrediction predict(const FeatureVector& x) const;

  double psi(const ExtremeVector& ev, const FeatureVector& standardized_x) const;

  const std::vector<ExtremeVector>& extreme_vectors() const { return evs_; }
  const EvmHyper& hyper() const { return hyper_; }
  int dim() const { return dim_; }
  std::vector<int> known_classes() const;
  const std::map<int, std::vector<FeatureVector>>& class_points() const {
    return class_points_;
  }

  FeatureVector standardize(const FeatureVector& x) const;

  void save(const std::string& path) const;
  static EvmModel load(const std::string& path);

 private:
  std::vector<ExtremeVector> evs_;  // sorted by (class_id, insertion order)
  EvmHyper hyper_;
  int dim_ = 0;
  FeatureVector feat_mean_, feat_std_;  // frozen at initial fit
  // Standardized training points per class, kept for set cover on update.
  std::map<int, std::vector<FeatureVector>> class_points_;

  void fit_class(int label, const std::vector<FeatureVector>& class_pts,
                 const std::vector<FeatureVector>& other_pts);
};

// Samples rejected by the classifier, awaiting clustering.
struct UnknownQueue {
  std::vector<FeatureVector> samples;
  std::size_t capacity = 1000;

  bool push(FeatureVector f) {
    if (samples.size() >= capacity) return false;
    samples.push_back(std::move(f));
    return true;
  }
};

// FINCH: partitions by connected components of the symmetrized first-
// nearest-neighbour graph, recursing on cluster means. Returns the
// hierarchy coarsest-last; every level is a union of the previous one.
std::vector<std::vector<int>> finch_cluster(const std::vector<FeatureVector>& points);

// Partition with the fewest clusters, with clusters smaller than
// min_samples dropped (label -1).
std::vector<int> select_partition(const std::vector<std::vector<int>>& hierarchy,
                                  int min_samples);

// B-cubed F-score of a predicted clustering against ground-truth labels.
double b3_fscore(const std::vector<int>& predicted, const std::vector<int>& truth);

struct OWConfusion {
  long n_kk = 0;  // known predicted known
  long n_ku = 0;  // known predicted unknown
  long n_uk = 0;  // unknown predicted known
  long n_uu = 0;  // unknown predicted unknown
  double acc_known = 0.0;  // accuracy over the n_kk samples
  double b3_unknown = 0.0; // B-cubed over the n_uu samples
};

// OWM = (N_KK * Acc + N_UU * B3) / (N_KK + N_KU + N_UK + N_UU).
double owm(const OWConfusion& confusion);

// Feature CSV: `label,v_1,...,v_d` (label = -1 for unlabeled).
void write_features_csv(const std::string& path, const std::vector<FeatureVector>& features,
                        const std::vector<int>& labels);
void read_features_csv(const std::string& path, std::vector<FeatureVector>& features,
                       std::vector<int>& labels);

}  // namespace opensense
