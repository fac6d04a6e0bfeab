#include "opensense/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <stdexcept>

#include "opensense/rng.hpp"

namespace opensense {

namespace {
constexpr std::uint64_t kBlobStreamTag = 0xB70B5;
}

void make_blobs(std::uint64_t seed, int num_classes, int dim, int points_per_class,
                double center_scale, double sigma, std::vector<FeatureVector>& features,
                std::vector<int>& labels) {
  if (num_classes > dim)
    throw std::invalid_argument("make_blobs: need dim >= num_classes for one-hot centres");
  features.clear();
  labels.clear();
  SplitMix64 rng(SplitMix64::derive(seed, kBlobStreamTag));
  for (int cls = 0; cls < num_classes; ++cls) {
    for (int p = 0; p < points_per_class; ++p) {
      FeatureVector f(static_cast<std::size_t>(dim), 0.0);
      f[static_cast<std::size_t>(cls)] = center_scale;
      for (double& v : f) v += rng.normal(0.0, sigma);
      features.push_back(std::move(f));
      labels.push_back(cls);
    }
  }
}

std::vector<IncrementResult> run_openworld_experiment(const OpenWorldConfig& cfg) {
  const int total_classes = cfg.known_classes + cfg.novel_batches * cfg.novel_per_batch;
  const int dim = total_classes;

  std::vector<FeatureVector> train_feats, test_feats;
  std::vector<int> train_labels, test_labels;
  make_blobs(cfg.seed, total_classes, dim, cfg.train_per_class, cfg.center_scale, cfg.sigma,
             train_feats, train_labels);
  make_blobs(cfg.seed + 1, total_classes, dim, cfg.test_per_class, cfg.center_scale,
             cfg.sigma, test_feats, test_labels);

  auto samples_of = [](const std::vector<int>& labels, int lo, int hi) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] >= lo && labels[i] < hi) idx.push_back(i);
    return idx;
  };

  // Initial fit on the known classes.
  std::vector<FeatureVector> init_feats;
  std::vector<int> init_labels;
  for (std::size_t i : samples_of(train_labels, 0, cfg.known_classes)) {
    init_feats.push_back(train_feats[i]);
    init_labels.push_back(train_labels[i]);
  }
  EvmModel model = EvmModel::fit(init_feats, init_labels, cfg.hyper);

  // Model labels for classes discovered at runtime are allocated past the
  // true label range; this maps them back to their majority true class for
  // scoring only.
  std::map<int, int> label_to_truth;
  for (int c = 0; c < cfg.known_classes; ++c) label_to_truth[c] = c;
  int next_label = total_classes;

  std::vector<IncrementResult> results;

  for (int inc = 0; inc <= cfg.novel_batches; ++inc) {
    // Batch `inc` arrives unknown at this increment's evaluation and is
    // absorbed afterwards; increment 0 evaluates the initial model alone.
    const int arriving_lo = cfg.known_classes + std::max(0, inc - 1) * cfg.novel_per_batch;
    const int arriving_hi =
        inc == 0 ? arriving_lo
                 : std::min(cfg.known_classes + inc * cfg.novel_per_batch, total_classes);

    IncrementResult row;
    row.increment = inc;

    // Evaluate before updating: arriving classes are still unknown here.
    long correct_known = 0;
    std::vector<FeatureVector> rejected_unknown_feats;
    std::vector<int> rejected_unknown_truth;
    for (std::size_t i = 0; i < test_feats.size(); ++i) {
      const int truth = test_labels[i];
      const bool is_known = truth < arriving_lo;
      const bool is_arriving = truth >= arriving_lo && truth < arriving_hi;
      if (!is_known && !is_arriving) continue;

      const EvmPrediction pred = model.predict(test_feats[i]);
      if (is_known) {
        if (pred.unknown()) {
          ++row.confusion.n_ku;
        } else {
          ++row.confusion.n_kk;
          auto it = label_to_truth.find(pred.class_id);
          if (it != label_to_truth.end() && it->second == truth) ++correct_known;
        }
      } else {
        if (pred.unknown()) {
          ++row.confusion.n_uu;
          rejected_unknown_feats.push_back(test_feats[i]);
          rejected_unknown_truth.push_back(truth);
        } else {
          ++row.confusion.n_uk;
        }
      }
    }
    row.confusion.acc_known =
        row.confusion.n_kk > 0
            ? static_cast<double>(correct_known) / static_cast<double>(row.confusion.n_kk)
            : 0.0;
    if (row.confusion.n_uu >= 2) {
      const auto hierarchy = finch_cluster(rejected_unknown_feats);
      std::vector<int> clusters = select_partition(hierarchy, 1);
      row.confusion.b3_unknown = b3_fscore(clusters, rejected_unknown_truth);
    }
    row.owm_score = owm(row.confusion);

    results.push_back(row);

    if (inc == cfg.novel_batches) break;
    if (inc == 0 && arriving_hi == arriving_lo && cfg.novel_batches > 0) {
      // Nothing was evaluated as arriving at increment 0; the first batch
      // is absorbed only after increment 1 has scored it as unknown.
      continue;
    }

    // Absorb the batch just evaluated from the training stream: predict,
    // queue the rejections, cluster, admit clusters with enough support.
    const int batch_lo = arriving_lo;
    const int batch_hi = arriving_hi;
    UnknownQueue queue;
    queue.capacity = train_feats.size();
    std::vector<int> queue_truth;
    for (std::size_t i : samples_of(train_labels, batch_lo, batch_hi)) {
      const EvmPrediction pred = model.predict(train_feats[i]);
      if (pred.unknown()) {
        queue.push(train_feats[i]);
        queue_truth.push_back(train_labels[i]);
      }
    }
    if (queue.samples.size() >= 2) {
      const auto hierarchy = finch_cluster(queue.samples);
      const std::vector<int> clusters =
          select_partition(hierarchy, cfg.min_cluster_samples);
      const int n_clusters =
          clusters.empty() ? 0 : *std::max_element(clusters.begin(), clusters.end()) + 1;
      for (int c = 0; c < n_clusters; ++c) {
        std::vector<FeatureVector> members;
        std::map<int, int> truth_votes;
        for (std::size_t i = 0; i < clusters.size(); ++i)
          if (clusters[i] == c) {
            members.push_back(queue.samples[i]);
            ++truth_votes[queue_truth[i]];
          }
        if (members.size() < 2) continue;
        const int label = next_label++;
        model = model.updated(members, label);
        int majority = -1, best = 0;
        for (const auto& [truth, votes] : truth_votes)
          if (votes > best) {
            best = votes;
            majority = truth;
          }
        label_to_truth[label] = majority;
        ++results.back().discovered_classes;
      }
    }
  }
  return results;
}

void write_owm_csv(const std::string& path, const std::vector<IncrementResult>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "increment,n_kk,n_ku,n_uk,n_uu,acc_known,b3_unknown,owm,discovered_classes\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", r.confusion.acc_known,
                  r.confusion.b3_unknown, r.owm_score);
    out << r.increment << ',' << r.confusion.n_kk << ',' << r.confusion.n_ku << ','
        << r.confusion.n_uk << ',' << r.confusion.n_uu << ',' << buf << ','
        << r.discovered_classes << '\n';
  }
}

std::vector<UpdateLogEntry> run_updater_case_study(const UpdaterCaseConfig& cfg) {
  const TrainCostModel cost = TrainCostModel::linear(cfg.seconds_per_sample);
  std::deque<FeatureVector> queue(static_cast<std::size_t>(cfg.queue_size),
                                  FeatureVector{0.0});
  std::vector<UpdateLogEntry> log;
  int trained_total = 0;

  int t = 0;
  for (int window = 0; window < cfg.max_windows; ++window) {
    const auto step = update_classifier_step(
        queue, cost, cfg.period,
        [&trained_total](const std::vector<FeatureVector>& batch) {
          trained_total += static_cast<int>(batch.size());
        });
    UpdateLogEntry entry;
    entry.t = t;
    entry.mode = "classifier";
    entry.samples_trained = step.samples_trained;
    entry.queue_remaining = step.queue_remaining;
    entry.status = step.status == UpdateStatus::Success ? "success" : "fail";
    log.push_back(entry);
    if (step.status == UpdateStatus::Success) break;
    t += cfg.period;
  }
  return log;
}

}  // namespace opensense
