#include "opensense/openworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace opensense {

namespace {

double euclidean(const FeatureVector& a, const FeatureVector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

constexpr double kMinShape = 1e-3;
constexpr double kMaxShape = 1e6;

WeibullFit weibull_moments(double mean, double stddev) {
  WeibullFit fit;
  if (stddev <= 0.0 || mean <= 0.0) {
    fit.shape = kMaxShape;
    fit.scale = std::max(mean, 1e-12);
    return fit;
  }
  const double cv = stddev / mean;
  fit.shape = std::clamp(std::pow(cv, -1.086), kMinShape, kMaxShape);
  fit.scale = mean / std::tgamma(1.0 + 1.0 / fit.shape);
  return fit;
}

}  // namespace

FeatureVector extract_features(const SensorWindow& window) {
  const int c_ch = window.channels;
  const int w = window.samples;
  if (w < 2) throw std::invalid_argument("extract_features: need >= 2 samples per window");

  FeatureVector out;
  out.reserve(static_cast<std::size_t>(4) * c_ch);
  for (int c = 0; c < c_ch; ++c) {
    double mean = 0.0;
    for (int i = 0; i < w; ++i) mean += window.at(c, i);
    mean /= w;
    double var = 0.0;
    for (int i = 0; i < w; ++i) {
      const double d = window.at(c, i) - mean;
      var += d * d;
    }
    var /= w;

    // Plain DFT; W is small (32 by default) so O(W^2) is fine.
    int best_bin = 1;
    double best_mag = -1.0;
    for (int k = 1; k <= w / 2; ++k) {
      double re = 0.0, im = 0.0;
      for (int i = 0; i < w; ++i) {
        const double ang = -2.0 * M_PI * k * i / w;
        re += window.at(c, i) * std::cos(ang);
        im += window.at(c, i) * std::sin(ang);
      }
      const double mag = 2.0 / w * std::sqrt(re * re + im * im);
      if (mag > best_mag) {
        best_mag = mag;
        best_bin = k;
      }
    }

    out.push_back(mean);
    out.push_back(std::sqrt(var));
    out.push_back(static_cast<double>(best_bin));
    out.push_back(best_mag);
  }
  return out;
}

WeibullFit weibull_mle(const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("weibull_mle: no samples");

  // Scale by the maximum for numerical stability: shape is scale-invariant.
  const double x_max = std::max(*std::max_element(samples.begin(), samples.end()), 1e-12);
  std::vector<double> x(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    x[i] = std::max(samples[i], 1e-12) / x_max;

  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const WeibullFit moments = weibull_moments(mean, std::sqrt(var));

  double mean_log = 0.0;
  for (double v : x) mean_log += std::log(v);
  mean_log /= n;

  // Fixed-point iteration on the shape:
  //   k <- 1 / (sum x^k ln x / sum x^k - mean(ln x))
  double k = std::clamp(moments.shape, 0.1, 100.0);
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    double num = 0.0, den = 0.0;
    for (double v : x) {
      const double p = std::pow(v, k);
      num += p * std::log(v);
      den += p;
    }
    const double inv = num / den - mean_log;
    if (!(inv > 0.0)) break;
    const double k_new = 1.0 / inv;
    if (!std::isfinite(k_new) || k_new <= 0.0) break;
    if (std::abs(k_new - k) <= 1e-6 * k) {
      k = k_new;
      converged = true;
      break;
    }
    k = k_new;
    if (k > kMaxShape) break;
  }

  if (!converged) {
    WeibullFit fit = moments;
    fit.scale *= x_max;
    return fit;
  }

  double sum_pk = 0.0;
  for (double v : x) sum_pk += std::pow(v, k);
  WeibullFit fit;
  fit.shape = std::clamp(k, kMinShape, kMaxShape);
  fit.scale = x_max * std::pow(sum_pk / n, 1.0 / k);
  return fit;
}

double EvmModel::psi(const ExtremeVector& ev, const FeatureVector& sx) const {
  const double d = euclidean(ev.anchor, sx);
  if (d <= 0.0) return 1.0;
  return std::exp(-std::pow(d / ev.scale, ev.shape));
}

FeatureVector EvmModel::standardize(const FeatureVector& x) const {
  if (!hyper_.standardize) return x;
  FeatureVector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - feat_mean_[i]) / feat_std_[i];
  return out;
}

std::vector<int> EvmModel::known_classes() const {
  std::vector<int> out;
  for (const auto& ev : evs_)
    if (out.empty() || out.back() != ev.class_id) out.push_back(ev.class_id);
  return out;
}

void EvmModel::fit_class(int label, const std::vector<FeatureVector>& class_pts,
                         const std::vector<FeatureVector>& other_pts) {
  if (other_pts.empty())
    throw std::invalid_argument("EVM: no other-class points to form a tail");

  const std::size_t n = class_pts.size();
  std::vector<ExtremeVector> candidates(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> dists(other_pts.size());
    for (std::size_t j = 0; j < other_pts.size(); ++j)
      dists[j] = euclidean(class_pts[i], other_pts[j]);
    const std::size_t tail =
        std::min<std::size_t>(static_cast<std::size_t>(hyper_.tail_size), dists.size());
    std::partial_sort(dists.begin(), dists.begin() + tail, dists.end());
    dists.resize(tail);
    for (double& d : dists) d *= hyper_.distance_multiplier;

    const WeibullFit fit = weibull_mle(dists);
    candidates[i] = {class_pts[i], fit.shape, fit.scale, label};
  }

  // Greedy set cover: every class point must reach Psi >= cover_threshold
  // under some retained EV. Psi at the anchor itself is 1, so the cover
  // always completes.
  std::vector<std::vector<bool>> covers(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      covers[i][j] = psi(candidates[i], class_pts[j]) >= hyper_.cover_threshold;

  std::vector<bool> covered(n, false);
  std::size_t remaining = n;
  std::vector<std::size_t> chosen;
  while (remaining > 0) {
    std::size_t best = 0;
    std::size_t best_gain = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t gain = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (!covered[j] && covers[i][j]) ++gain;
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    chosen.push_back(best);
    for (std::size_t j = 0; j < n; ++j)
      if (covers[best][j] && !covered[j]) {
        covered[j] = true;
        --remaining;
      }
  }
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t i : chosen) evs_.push_back(candidates[i]);
}

EvmModel EvmModel::fit(const std::vector<FeatureVector>& features,
                       const std::vector<int>& labels, const EvmHyper& hyper) {
  if (features.size() != labels.size() || features.empty())
    throw std::invalid_argument("EVM fit: features/labels mismatch");

  EvmModel model;
  model.hyper_ = hyper;
  model.dim_ = static_cast<int>(features.front().size());

  model.feat_mean_.assign(static_cast<std::size_t>(model.dim_), 0.0);
  model.feat_std_.assign(static_cast<std::size_t>(model.dim_), 1.0);
  if (hyper.standardize) {
    for (const auto& f : features) {
      if (static_cast<int>(f.size()) != model.dim_)
        throw std::invalid_argument("EVM fit: inconsistent feature dimensions");
      for (int d = 0; d < model.dim_; ++d) model.feat_mean_[d] += f[d];
    }
    for (double& m : model.feat_mean_) m /= static_cast<double>(features.size());
    std::vector<double> var(static_cast<std::size_t>(model.dim_), 0.0);
    for (const auto& f : features)
      for (int d = 0; d < model.dim_; ++d) {
        const double diff = f[d] - model.feat_mean_[d];
        var[static_cast<std::size_t>(d)] += diff * diff;
      }
    for (int d = 0; d < model.dim_; ++d)
      model.feat_std_[d] = std::max(std::sqrt(var[static_cast<std::size_t>(d)] /
                                              static_cast<double>(features.size())),
                                    1e-12);
  }

  for (std::size_t i = 0; i < features.size(); ++i)
    model.class_points_[labels[i]].push_back(model.standardize(features[i]));

  if (model.class_points_.size() < 2)
    throw std::invalid_argument("EVM fit: need >= 2 classes");
  for (const auto& [cls, pts] : model.class_points_)
    if (pts.size() < 2)
      throw std::invalid_argument("EVM fit: class " + std::to_string(cls) +
                                  " has fewer than 2 samples");

  for (const auto& [cls, pts] : model.class_points_) {
    std::vector<FeatureVector> others;
    for (const auto& [other_cls, other_pts] : model.class_points_)
      if (other_cls != cls) others.insert(others.end(), other_pts.begin(), other_pts.end());
    model.fit_class(cls, pts, others);
  }
  std::stable_sort(model.evs_.begin(), model.evs_.end(),
                   [](const ExtremeVector& a, const ExtremeVector& b) {
                     return a.class_id < b.class_id;
                   });
  return model;
}

EvmModel EvmModel::updated(const std::vector<FeatureVector>& features, int label) const {
  if (features.empty()) throw std::invalid_argument("EVM update: empty sample list");
  for (const auto& f : features)
    if (static_cast<int>(f.size()) != dim_)
      throw std::invalid_argument("EVM update: dimension mismatch");
  const bool extends = class_points_.count(label) > 0;
  if (!extends && features.size() < 2)
    throw std::invalid_argument("EVM update: a new class needs >= 2 samples");

  EvmModel model = *this;
  auto& pool = model.class_points_[label];
  for (const auto& f : features) pool.push_back(model.standardize(f));

  // The updated class is fitted against the anchors of the other classes
  // only, so draining a queue in several partial batches lands on the same
  // model as a single batch.
  std::vector<FeatureVector> other_anchors;
  std::vector<ExtremeVector> kept;
  for (const auto& ev : model.evs_) {
    if (ev.class_id == label) continue;
    kept.push_back(ev);
    other_anchors.push_back(ev.anchor);
  }
  model.evs_ = std::move(kept);
  model.fit_class(label, pool, other_anchors);
  std::stable_sort(model.evs_.begin(), model.evs_.end(),
                   [](const ExtremeVector& a, const ExtremeVector& b) {
                     return a.class_id < b.class_id;
                   });
  return model;
}

EvmPrediction EvmModel::predict(const FeatureVector& x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw std::invalid_argument("EVM predict: dimension mismatch");
  const FeatureVector sx = standardize(x);

  EvmPrediction best;
  double best_psi = -1.0;
  for (const auto& ev : evs_) {
    const double p = psi(ev, sx);
    if (p > best_psi) {  // strict: ties keep the lowest class / EV index
      best_psi = p;
      best.class_id = ev.class_id;
    }
  }
  best.probability = std::max(best_psi, 0.0);
  if (best.probability < hyper_.rejection_threshold) best.class_id = -1;
  return best;
}

void EvmModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, " %.17g", v);
    out << buf;
  };
  out << dim_ << ' ' << evs_.size() << '\n';
  out << hyper_.tail_size;
  put(hyper_.cover_threshold);
  put(hyper_.distance_multiplier);
  put(hyper_.rejection_threshold);
  out << ' ' << (hyper_.standardize ? 1 : 0) << '\n';
  for (double v : feat_mean_) put(v);
  out << '\n';
  for (double v : feat_std_) put(v);
  out << '\n';
  for (const auto& ev : evs_) {
    out << ev.class_id;
    put(ev.shape);
    put(ev.scale);
    for (double v : ev.anchor) put(v);
    out << '\n';
  }
}

EvmModel EvmModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  EvmModel model;
  std::size_t n_evs = 0;
  int standardize_flag = 0;
  if (!(in >> model.dim_ >> n_evs >> model.hyper_.tail_size >> model.hyper_.cover_threshold >>
        model.hyper_.distance_multiplier >> model.hyper_.rejection_threshold >>
        standardize_flag))
    throw std::runtime_error("malformed EVM model header in " + path);
  model.hyper_.standardize = standardize_flag != 0;
  model.feat_mean_.resize(static_cast<std::size_t>(model.dim_));
  model.feat_std_.resize(static_cast<std::size_t>(model.dim_));
  for (double& v : model.feat_mean_) in >> v;
  for (double& v : model.feat_std_) in >> v;
  for (std::size_t i = 0; i < n_evs; ++i) {
    ExtremeVector ev;
    in >> ev.class_id >> ev.shape >> ev.scale;
    ev.anchor.resize(static_cast<std::size_t>(model.dim_));
    for (double& v : ev.anchor) in >> v;
    if (!in) throw std::runtime_error("truncated EVM model in " + path);
    model.evs_.push_back(std::move(ev));
  }
  return model;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  }
  void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

// Components of the symmetrized 1-NN graph; labels compacted in order of
// first appearance.
std::vector<int> nn_components(const std::vector<FeatureVector>& pts) {
  const std::size_t n = pts.size();
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t nn = i == 0 ? 1 : 0;
    double best = euclidean(pts[i], pts[nn]);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = euclidean(pts[i], pts[j]);
      if (d < best) {
        best = d;
        nn = j;
      }
    }
    uf.unite(static_cast<int>(i), static_cast<int>(nn));
  }
  std::vector<int> labels(n, -1);
  std::map<int, int> compact;
  for (std::size_t i = 0; i < n; ++i) {
    const int root = uf.find(static_cast<int>(i));
    const auto it = compact.emplace(root, static_cast<int>(compact.size())).first;
    labels[i] = it->second;
  }
  return labels;
}

}  // namespace

std::vector<std::vector<int>> finch_cluster(const std::vector<FeatureVector>& points) {
  if (points.size() < 2) throw std::invalid_argument("finch_cluster: need >= 2 samples");

  std::vector<std::vector<int>> hierarchy;
  hierarchy.push_back(nn_components(points));

  while (true) {
    const auto& cur = hierarchy.back();
    const int k = *std::max_element(cur.begin(), cur.end()) + 1;
    if (k <= 2) break;

    std::vector<FeatureVector> means(static_cast<std::size_t>(k),
                                     FeatureVector(points.front().size(), 0.0));
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& m = means[static_cast<std::size_t>(cur[i])];
      for (std::size_t d = 0; d < m.size(); ++d) m[d] += points[i][d];
      ++counts[static_cast<std::size_t>(cur[i])];
    }
    for (int c = 0; c < k; ++c)
      for (double& v : means[static_cast<std::size_t>(c)])
        v /= counts[static_cast<std::size_t>(c)];

    const std::vector<int> merged = nn_components(means);
    const int k_next = *std::max_element(merged.begin(), merged.end()) + 1;
    if (k_next >= k || k_next < 2) break;  // trivial or stalled partition

    std::vector<int> next(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
      next[i] = merged[static_cast<std::size_t>(cur[i])];
    hierarchy.push_back(std::move(next));
  }
  return hierarchy;
}

std::vector<int> select_partition(const std::vector<std::vector<int>>& hierarchy,
                                  int min_samples) {
  if (hierarchy.empty()) throw std::invalid_argument("select_partition: empty hierarchy");
  std::size_t best = 0;
  int best_k = *std::max_element(hierarchy[0].begin(), hierarchy[0].end()) + 1;
  for (std::size_t l = 1; l < hierarchy.size(); ++l) {
    const int k = *std::max_element(hierarchy[l].begin(), hierarchy[l].end()) + 1;
    if (k < best_k) {
      best_k = k;
      best = l;
    }
  }

  std::vector<int> labels = hierarchy[best];
  std::vector<int> sizes(static_cast<std::size_t>(best_k), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  std::map<int, int> relabel;
  for (int& l : labels) {
    if (sizes[static_cast<std::size_t>(l)] < min_samples) {
      l = -1;
      continue;
    }
    const auto it = relabel.emplace(l, static_cast<int>(relabel.size())).first;
    l = it->second;
  }
  return labels;
}

double b3_fscore(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || predicted.empty())
    throw std::invalid_argument("b3_fscore: size mismatch");

  std::map<std::pair<int, int>, long> joint;
  std::map<int, long> cluster_size, label_size;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    ++joint[{predicted[i], truth[i]}];
    ++cluster_size[predicted[i]];
    ++label_size[truth[i]];
  }
  const double n = static_cast<double>(predicted.size());
  double precision = 0.0, recall = 0.0;
  for (const auto& [key, count] : joint) {
    const double c = static_cast<double>(count);
    precision += c * c / static_cast<double>(cluster_size[key.first]);
    recall += c * c / static_cast<double>(label_size[key.second]);
  }
  precision /= n;
  recall /= n;
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double owm(const OWConfusion& c) {
  const long total = c.n_kk + c.n_ku + c.n_uk + c.n_uu;
  if (total <= 0) throw std::invalid_argument("owm: zero total");
  return (static_cast<double>(c.n_kk) * c.acc_known +
          static_cast<double>(c.n_uu) * c.b3_unknown) /
         static_cast<double>(total);
}

void write_features_csv(const std::string& path, const std::vector<FeatureVector>& features,
                        const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::size_t dim = features.empty() ? 0 : features.front().size();
  out << "label";
  for (std::size_t d = 0; d < dim; ++d) out << ",v_" << d + 1;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < features.size(); ++i) {
    out << (i < labels.size() ? labels[i] : -1);
    for (double v : features[i]) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

void read_features_csv(const std::string& path, std::vector<FeatureVector>& features,
                       std::vector<int>& labels) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  features.clear();
  labels.clear();
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    labels.push_back(std::stoi(cell));
    FeatureVector f;
    while (std::getline(ss, cell, ',')) f.push_back(std::stod(cell));
    features.push_back(std::move(f));
  }
}

}  // namespace opensense
