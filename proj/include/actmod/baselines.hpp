#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "actmod/eval.hpp"
#include "actmod/model.hpp"

namespace actmod {

// Mean of the unpadded rows of each window, one row per sample.
Matrix average_features(std::span<const VideoSample> samples);

// One binary linear SVM per class (one-vs-all), trained with Pegasos steps
// on the L2-regularised hinge loss (the bias acts as a weight on a constant
// feature and is regularised with the rest).
class LinearSvm {
 public:
  struct Options {
    double lambda = 1e-3;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;
  };

  void fit(const Matrix& x, const std::vector<std::size_t>& labels,
           std::size_t num_classes, const Options& options);
  void fit(const Matrix& x, const std::vector<std::size_t>& labels,
           std::size_t num_classes) {
    fit(x, labels, num_classes, Options{});
  }
  bool trained() const { return trained_; }
  // N x K decision values; larger means more confident.
  Matrix scores(const Matrix& x) const;

 private:
  Matrix w_;  // K x d
  std::vector<double> b_;
  bool trained_ = false;
};

// Two fully connected layers (ReLU hidden layer, softmax output) trained
// full-batch on cross-entropy with Adam.
class MlpClassifier {
 public:
  struct Options {
    std::size_t hidden = 32;
    std::size_t epochs = 500;
    double lr = 1e-2;
    std::uint64_t seed = 0;
  };

  void fit(const Matrix& x, const std::vector<std::size_t>& labels,
           std::size_t num_classes, const Options& options);
  void fit(const Matrix& x, const std::vector<std::size_t>& labels,
           std::size_t num_classes) {
    fit(x, labels, num_classes, Options{});
  }
  bool trained() const { return trained_; }
  // N x K class probabilities.
  Matrix scores(const Matrix& x) const;
  // Mean cross-entropy on (x, labels).
  double loss(const Matrix& x, const std::vector<std::size_t>& labels) const;

 private:
  Parameter w1_, b1_, w2_, b2_;
  bool trained_ = false;
};

// Retrieval metrics from per-(sample, adverb) scores where larger is better.
// Rankings and metric definitions match evaluate().
EvalReport evaluate_scores(const Matrix& scores,
                           std::span<const VideoSample> samples,
                           const AdverbVocabulary& adverbs);

double accuracy(const Matrix& scores, const std::vector<std::size_t>& labels);

}  // namespace actmod
