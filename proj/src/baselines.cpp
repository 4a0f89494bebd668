#include "actmod/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "actmod/errors.hpp"
#include "actmod/optim.hpp"

namespace actmod {

Matrix average_features(std::span<const VideoSample> samples) {
  if (samples.empty()) return Matrix();
  const std::size_t D = samples.front().features.cols();
  Matrix out(samples.size(), D);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const VideoSample& s = samples[i];
    if (s.features.cols() != D)
      throw DimensionError("samples disagree on feature dimension");
    const std::size_t n = s.unpadded_rows();
    if (n == 0) continue;
    for (std::size_t t = 0; t < s.features.rows(); ++t) {
      if (s.padded[t]) continue;
      for (std::size_t c = 0; c < D; ++c)
        out(i, c) += s.features(t, c) / static_cast<double>(n);
    }
  }
  return out;
}

namespace {

void check_training_set(const Matrix& x, const std::vector<std::size_t>& labels,
                        std::size_t num_classes) {
  if (x.rows() == 0) throw ContractError("classifier needs training data");
  if (labels.size() != x.rows())
    throw DimensionError("one label per training row required");
  if (num_classes < 2) throw ContractError("classifier needs two classes");
  for (std::size_t y : labels)
    if (y >= num_classes)
      throw LookupError("label " + std::to_string(y) + " out of range");
}

}  // namespace

void LinearSvm::fit(const Matrix& x, const std::vector<std::size_t>& labels,
                    std::size_t num_classes, const Options& options) {
  check_training_set(x, labels, num_classes);
  if (!(options.lambda > 0.0)) throw ConfigError("svm lambda must be positive");
  const std::size_t N = x.rows();
  const std::size_t d = x.cols();
  w_ = Matrix(num_classes, d);
  b_.assign(num_classes, 0.0);
  Rng rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, N - 1);
  for (std::size_t k = 0; k < num_classes; ++k) {
    auto w = w_.row(k);
    double& b = b_[k];
    const std::size_t steps = options.epochs * N;
    for (std::size_t t = 1; t <= steps; ++t) {
      const std::size_t i = pick(rng);
      const double y = labels[i] == k ? 1.0 : -1.0;
      const auto xi = x.row(i);
      double f = b;
      for (std::size_t c = 0; c < d; ++c) f += w[c] * xi[c];
      const double eta = 1.0 / (options.lambda * static_cast<double>(t));
      const double shrink = 1.0 - eta * options.lambda;
      for (double& v : w) v *= shrink;
      b *= shrink;
      if (y * f < 1.0) {
        for (std::size_t c = 0; c < d; ++c) w[c] += eta * y * xi[c];
        b += eta * y;
      }
    }
  }
  trained_ = true;
}

Matrix LinearSvm::scores(const Matrix& x) const {
  if (!trained_) throw StateError("linear SVM used before fit()");
  if (x.cols() != w_.cols())
    throw DimensionError("svm input has " + std::to_string(x.cols()) +
                         " features, trained on " + std::to_string(w_.cols()));
  Matrix s = matmul(x, w_, false, true);
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t k = 0; k < s.cols(); ++k) s(i, k) += b_[k];
  return s;
}

namespace {

struct MlpForward {
  Matrix hidden;  // N x H after ReLU
  Matrix probs;   // N x K
};

MlpForward mlp_forward(const Matrix& x, const Matrix& w1, const Matrix& b1,
                       const Matrix& w2, const Matrix& b2) {
  MlpForward f;
  f.hidden = matmul(x, w1, false, true);
  for (std::size_t i = 0; i < f.hidden.rows(); ++i)
    for (std::size_t h = 0; h < f.hidden.cols(); ++h)
      f.hidden(i, h) = std::max(0.0, f.hidden(i, h) + b1(0, h));
  f.probs = matmul(f.hidden, w2, false, true);
  for (std::size_t i = 0; i < f.probs.rows(); ++i) {
    auto row = f.probs.row(i);
    double mx = -INFINITY;
    for (std::size_t k = 0; k < row.size(); ++k) {
      row[k] += b2(0, k);
      mx = std::max(mx, row[k]);
    }
    double z = 0.0;
    for (double& v : row) z += (v = std::exp(v - mx));
    for (double& v : row) v /= z;
  }
  return f;
}

double cross_entropy(const Matrix& probs, const std::vector<std::size_t>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i)
    s -= std::log(std::max(probs(i, y[i]), 1e-300));
  return s / static_cast<double>(probs.rows());
}

}  // namespace

void MlpClassifier::fit(const Matrix& x, const std::vector<std::size_t>& labels,
                        std::size_t num_classes, const Options& options) {
  check_training_set(x, labels, num_classes);
  if (options.hidden == 0) throw ConfigError("mlp hidden width must be positive");
  const std::size_t N = x.rows();
  const std::size_t H = options.hidden;
  Rng rng(options.seed);
  w1_ = Parameter("mlp.w1", xavier_uniform(H, x.cols(), rng));
  b1_ = Parameter("mlp.b1", Matrix(1, H));
  w2_ = Parameter("mlp.w2", xavier_uniform(num_classes, H, rng));
  b2_ = Parameter("mlp.b2", Matrix(1, num_classes));
  const AdamConfig adam{options.lr};
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const MlpForward f =
        mlp_forward(x, w1_.value, b1_.value, w2_.value, b2_.value);
    Matrix dlogits = f.probs;
    for (std::size_t i = 0; i < N; ++i) dlogits(i, labels[i]) -= 1.0;
    dlogits *= 1.0 / static_cast<double>(N);
    w2_.grad = matmul(dlogits, f.hidden, true, false);
    b2_.zero_grad();
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < num_classes; ++k) b2_.grad(0, k) += dlogits(i, k);
    Matrix dh = matmul(dlogits, w2_.value);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t h = 0; h < H; ++h)
        if (f.hidden(i, h) <= 0.0) dh(i, h) = 0.0;
    w1_.grad = matmul(dh, x, true, false);
    b1_.zero_grad();
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t h = 0; h < H; ++h) b1_.grad(0, h) += dh(i, h);
    for (Parameter* p : {&w1_, &b1_, &w2_, &b2_}) adam_step(*p, adam);
  }
  trained_ = true;
}

Matrix MlpClassifier::scores(const Matrix& x) const {
  if (!trained_) throw StateError("MLP classifier used before fit()");
  if (x.cols() != w1_.value.cols())
    throw DimensionError("mlp input has " + std::to_string(x.cols()) +
                         " features, trained on " +
                         std::to_string(w1_.value.cols()));
  return mlp_forward(x, w1_.value, b1_.value, w2_.value, b2_.value).probs;
}

double MlpClassifier::loss(const Matrix& x,
                           const std::vector<std::size_t>& labels) const {
  const Matrix p = scores(x);
  if (labels.size() != p.rows())
    throw DimensionError("one label per row required");
  return cross_entropy(p, labels);
}

EvalReport evaluate_scores(const Matrix& scores,
                           std::span<const VideoSample> samples,
                           const AdverbVocabulary& adverbs) {
  const std::size_t M = adverbs.size();
  if (scores.rows() != samples.size() || scores.cols() != M)
    throw DimensionError("scores must be samples x adverbs, got " +
                         scores.shape_string());
  EvalReport report;
  report.samples = samples.size();
  if (samples.empty()) return report;
  std::vector<Ranking> all, ant;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t m = samples[i].adverb;
    std::vector<std::size_t> ids(M);
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<double> d(M);
    for (std::size_t k = 0; k < M; ++k) d[k] = -scores(i, k);
    all.push_back(make_ranking(samples[i].video_id, ids, d, {m}));
    const std::size_t anti = adverbs.antonym(m);
    ant.push_back(make_ranking(samples[i].video_id, {m, anti},
                               {-scores(i, m), -scores(i, anti)}, {m}));
  }
  report.v2a_all_map = mean_average_precision(all).value;
  report.v2a_antonym_map = mean_average_precision(ant).value;
  report.v2a_antonym_p1 = antonym_p_at_1(ant);

  std::vector<Ranking> a2v_all, a2v_ant;
  for (std::size_t m = 0; m < M; ++m) {
    const std::size_t anti = adverbs.antonym(m);
    std::vector<std::size_t> ids, ids_ant, rel;
    std::vector<double> d, d_ant;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      ids.push_back(i);
      d.push_back(-scores(i, m));
      if (samples[i].adverb == m) rel.push_back(i);
      if (samples[i].adverb == m || samples[i].adverb == anti) {
        ids_ant.push_back(i);
        d_ant.push_back(-scores(i, m));
      }
    }
    a2v_all.push_back(make_ranking(adverbs.name(m), ids, d, rel));
    if (!ids_ant.empty())
      a2v_ant.push_back(make_ranking(adverbs.name(m), ids_ant, d_ant, rel));
  }
  report.a2v_all_map = mean_average_precision(a2v_all).value;
  report.a2v_antonym_map = mean_average_precision(a2v_ant).value;
  return report;
}

double accuracy(const Matrix& scores, const std::vector<std::size_t>& labels) {
  if (labels.size() != scores.rows())
    throw DimensionError("one label per row required");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto row = scores.row(i);
    const auto best = static_cast<std::size_t>(
        std::max_element(row.begin(), row.end()) - row.begin());
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace actmod
