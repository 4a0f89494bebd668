#include <gtest/gtest.h>

#include "actmod/baselines.hpp"
#include "actmod/errors.hpp"
#include "fixtures.hpp"

using namespace actmod;
using fixtures::gaussian;

namespace {

const AdverbVocabulary kPair = AdverbVocabulary::from_pairs({{"up", "down"}});

// Windows whose rows sit around +-centre on the first dim, by adverb label.
std::vector<VideoSample> clusters(std::size_t n, double centre, std::uint64_t seed,
                                  bool shuffle_labels = false) {
  std::mt19937_64 rng(seed);
  std::vector<VideoSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = i % 2;
    Matrix f = gaussian(4, 5, rng, 0.3);
    for (std::size_t t = 0; t < 4; ++t) f(t, 0) += m == 0 ? centre : -centre;
    auto s = fixtures::sample(f, 0, shuffle_labels ? rng() % 2 : m);
    s.video_id = "v" + std::to_string(i);
    out.push_back(s);
  }
  return out;
}

std::vector<std::size_t> labels_of(const std::vector<VideoSample>& s) {
  std::vector<std::size_t> y;
  for (const auto& v : s) y.push_back(v.adverb);
  return y;
}

}  // namespace

TEST(AverageFeatures, MeanOfUnpaddedRows) {
  auto s = fixtures::sample(Matrix{{1, 2}, {3, 4}, {100, 100}}, 0, 0,
                            {false, false, true});
  const Matrix x = average_features(std::vector<VideoSample>{s});
  EXPECT_EQ(x, (Matrix{{2, 3}}));
}

TEST(LinearSvm, SeparableGivesPerfectAntonymP1) {
  const auto train = clusters(200, 2.0, 1), test = clusters(100, 2.0, 2);
  LinearSvm svm;
  svm.fit(average_features(train), labels_of(train), 2);
  const Matrix scores = svm.scores(average_features(test));
  EXPECT_EQ(accuracy(scores, labels_of(test)), 1.0);
  EXPECT_EQ(evaluate_scores(scores, test, kPair).v2a_antonym_p1, 1.0);
}

TEST(LinearSvm, ShuffledLabelsGiveChance) {
  const auto train = clusters(400, 2.0, 3, true), test = clusters(2000, 2.0, 4, true);
  LinearSvm svm;
  svm.fit(average_features(train), labels_of(train), 2);
  const Matrix scores = svm.scores(average_features(test));
  EXPECT_NEAR(evaluate_scores(scores, test, kPair).v2a_antonym_p1, 0.5, 0.05);
}

TEST(MlpClassifier, SeparableAndShuffled) {
  const auto train = clusters(200, 2.0, 5), test = clusters(100, 2.0, 6);
  MlpClassifier mlp;
  mlp.fit(average_features(train), labels_of(train), 2);
  EXPECT_EQ(evaluate_scores(mlp.scores(average_features(test)), test, kPair)
                .v2a_antonym_p1,
            1.0);
  const auto strain = clusters(400, 2.0, 7, true), stest = clusters(2000, 2.0, 8, true);
  MlpClassifier noise;
  noise.fit(average_features(strain), labels_of(strain), 2);
  EXPECT_NEAR(evaluate_scores(noise.scores(average_features(stest)), stest, kPair)
                  .v2a_antonym_p1,
              0.5, 0.05);
}

TEST(MlpClassifier, SolvesXorWhereLinearFails) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 0.1);
  Matrix x(400, 2);
  std::vector<std::size_t> y;
  for (std::size_t i = 0; i < 400; ++i) {
    const int a = i % 2, b = (i / 2) % 2;
    x(i, 0) = (a ? 1.0 : -1.0) + n(rng);
    x(i, 1) = (b ? 1.0 : -1.0) + n(rng);
    y.push_back(std::size_t(a ^ b));
  }
  LinearSvm svm;
  svm.fit(x, y, 2);
  MlpClassifier mlp;
  mlp.fit(x, y, 2);
  const double lin = accuracy(svm.scores(x), y), nonlin = accuracy(mlp.scores(x), y);
  EXPECT_LT(lin, 0.8);
  EXPECT_GT(nonlin, 0.95);
  EXPECT_GT(nonlin, lin);
}

TEST(MlpClassifier, ProbabilitiesAndLossFall) {
  const auto train = clusters(100, 1.0, 10);
  const Matrix x = average_features(train);
  MlpClassifier short_run, long_run;
  short_run.fit(x, labels_of(train), 2, {32, 5, 1e-2, 0});
  long_run.fit(x, labels_of(train), 2, {32, 200, 1e-2, 0});
  EXPECT_LT(long_run.loss(x, labels_of(train)), short_run.loss(x, labels_of(train)));
  const Matrix p = long_run.scores(x);
  for (std::size_t i = 0; i < p.rows(); ++i)
    EXPECT_NEAR(p(i, 0) + p(i, 1), 1.0, 1e-12);
}

TEST(Baselines, ErrorsAndState) {
  LinearSvm svm;
  MlpClassifier mlp;
  const Matrix x{{1, 2}, {3, 4}};
  EXPECT_FALSE(svm.trained());
  EXPECT_THROW(svm.scores(x), StateError);
  EXPECT_THROW(mlp.scores(x), StateError);
  EXPECT_THROW(svm.fit(x, {0}, 2), DimensionError);
  EXPECT_THROW(svm.fit(x, {0, 2}, 2), LookupError);
  EXPECT_THROW(svm.fit(x, {0, 0}, 1), ContractError);
  EXPECT_THROW(svm.fit(x, {0, 1}, 2, {0.0, 10, 0}), ConfigError);
  svm.fit(x, {0, 1}, 2);
  EXPECT_THROW(svm.scores(Matrix{{1, 2, 3}}), DimensionError);
  const auto s = clusters(4, 1.0, 1);
  EXPECT_THROW(evaluate_scores(Matrix(3, 2), s, kPair), DimensionError);
}

TEST(Baselines, DeterministicForSeed) {
  const auto train = clusters(60, 1.0, 11, true);
  const Matrix x = average_features(train);
  LinearSvm a, b;
  a.fit(x, labels_of(train), 2, {1e-3, 20, 4});
  b.fit(x, labels_of(train), 2, {1e-3, 20, 4});
  EXPECT_EQ(a.scores(x), b.scores(x));
  MlpClassifier c, d;
  c.fit(x, labels_of(train), 2, {8, 30, 1e-2, 4});
  d.fit(x, labels_of(train), 2, {8, 30, 1e-2, 4});
  EXPECT_EQ(c.scores(x), d.scores(x));
}
