#include "actmod/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "actmod/errors.hpp"

namespace actmod {

namespace {

const char* const kAdverbNames[][2] = {
    {"quickly", "slowly"},
    {"finely", "coarsely"},
    {"partially", "completely"},
};

std::vector<std::pair<std::string, std::string>> adverb_pairs(std::size_t n) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t p = 0; p < n; ++p) {
    if (p < std::size(kAdverbNames)) {
      out.emplace_back(kAdverbNames[p][0], kAdverbNames[p][1]);
    } else {
      out.emplace_back("manner" + std::to_string(p) + "a",
                       "manner" + std::to_string(p) + "b");
    }
  }
  return out;
}

std::string zero_padded(std::size_t v, int width) {
  std::string s = std::to_string(v);
  return std::string(width > static_cast<int>(s.size()) ? width - s.size() : 0,
                     '0') +
         s;
}

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  std::uniform_int_distribution<std::size_t> d(lo, hi);
  return d(rng);
}

}  // namespace

void SynthConfig::validate() const {
  if (num_actions < 2) throw ConfigError("synth: need at least two actions");
  if (num_adverb_pairs == 0) throw ConfigError("synth: need an adverb pair");
  if (window == 0 || feature_dim == 0 || embed_dim == 0)
    throw ConfigError("synth: dimensions must be positive");
  if (span_length_min == 0 || span_length_min > span_length_max)
    throw ConfigError("synth: invalid span length range");
  if (span_offset_min > span_offset_max)
    throw ConfigError("synth: invalid span offset range");
  if (block_length_min == 0 || block_length_min > block_length_max)
    throw ConfigError("synth: invalid distractor block length range");
  if (!(noise_fraction >= 0.0 && noise_fraction < 1.0))
    throw ConfigError("synth: noise_fraction must lie in [0, 1)");
  if (!(signal_to_noise > 0.0))
    throw ConfigError("synth: signal_to_noise must be positive");
  if (distractor_count == 0 || distractor_count >= num_actions)
    throw ConfigError("synth: distractor_count must lie in [1, num_actions)");
  if (video_length < span_length_max)
    throw ConfigError("synth: video shorter than the longest span");
  // The span must sit inside the window for every offset and jitter: with
  // timestamp in [start + L/2 + o - 0.5, start + L/2 + o + 0.5) the floored
  // centre c satisfies start + L/2 + o - 1.5 < c <= start + L/2 + o + 0.5.
  const double half = static_cast<double>(window / 2);
  const double upper = static_cast<double>(window) - half;  // ceil(T/2)
  const double lmax = static_cast<double>(span_length_max);
  if (static_cast<double>(span_offset_max) + lmax / 2.0 + 0.5 > half ||
      lmax - upper > static_cast<double>(span_offset_min) + lmax / 2.0 - 1.5) {
    throw ConfigError(
        "synth: relevant span does not fit inside the window for the "
        "configured offset and length ranges");
  }
  if (groups < 2 || test_groups == 0 || test_groups >= groups)
    throw ConfigError("synth: need 0 < test_groups < groups");
  if (train_videos == 0 || test_videos == 0)
    throw ConfigError("synth: need training and test videos");
}

Matrix random_orthogonal(std::size_t n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  // Columns of q, stored as rows for contiguous access.
  Matrix q(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    while (true) {
      for (double& x : q.row(i)) x = gauss(rng);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < i; ++j) {
          double dot = 0.0;
          for (std::size_t k = 0; k < n; ++k) dot += q(i, k) * q(j, k);
          for (std::size_t k = 0; k < n; ++k) q(i, k) -= dot * q(j, k);
        }
      }
      double norm = 0.0;
      for (double x : q.row(i)) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < 1e-8) continue;
      for (double& x : q.row(i)) x /= norm;
      break;
    }
  }
  return q.transposed();
}

SynthResult synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t A = cfg.num_actions;
  const std::size_t M = 2 * cfg.num_adverb_pairs;
  const std::size_t D = cfg.feature_dim;
  const std::size_t E = cfg.embed_dim;

  SynthResult out;
  SynthTruth& truth = out.truth;

  // Unit-norm action signatures.
  truth.signatures = Matrix(A, D);
  for (std::size_t a = 0; a < A; ++a) {
    double norm = 0.0;
    for (double& x : truth.signatures.row(a)) {
      x = gauss(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : truth.signatures.row(a)) x /= norm;
  }

  // Adverb pair p: R = Q B Q^T with B rotating planes (2i, 2i+1) by the
  // configured angle; the antonym gets R^T = R^-1.
  for (std::size_t p = 0; p < cfg.num_adverb_pairs; ++p) {
    const Matrix q = random_orthogonal(D, rng);
    Matrix b = Matrix::identity(D);
    const double c = std::cos(cfg.adverb_angle);
    const double s = std::sin(cfg.adverb_angle);
    for (std::size_t i = 0; i + 1 < D; i += 2) {
      b(i, i) = c;
      b(i, i + 1) = -s;
      b(i + 1, i) = s;
      b(i + 1, i + 1) = c;
    }
    Matrix r = matmul(matmul(q, b), q, false, true);
    truth.adverb_maps.push_back(r.transposed());
    truth.adverb_maps.insert(truth.adverb_maps.end() - 1, std::move(r));
  }

  std::vector<std::string> action_names;
  Matrix action_vectors(A, E);
  for (std::size_t a = 0; a < A; ++a) {
    action_names.push_back("action" + zero_padded(a, 2));
    for (double& x : action_vectors.row(a)) x = cfg.word_vector_scale * gauss(rng);
  }
  Matrix adverb_vectors(M, E);
  for (double& x : adverb_vectors.values()) x = cfg.word_vector_scale * gauss(rng);

  Dataset& ds = out.dataset;
  ds.actions = ActionVocabulary(action_names, std::move(action_vectors));
  ds.adverbs = AdverbVocabulary::from_pairs(adverb_pairs(cfg.num_adverb_pairs),
                                            std::move(adverb_vectors));
  ds.store = FeatureStore(D);

  std::vector<std::string> groups;
  for (std::size_t g = 0; g < cfg.groups; ++g)
    groups.push_back("task" + zero_padded(g, 3));
  const auto test_groups = choose_test_groups(groups, cfg.test_groups, rng());
  std::vector<std::string> train_groups;
  std::set_difference(groups.begin(), groups.end(), test_groups.begin(),
                      test_groups.end(), std::back_inserter(train_groups));

  const double noise_std =
      std::isinf(cfg.signal_to_noise)
          ? 0.0
          : 1.0 / (cfg.signal_to_noise * std::sqrt(static_cast<double>(D)));
  const std::size_t S = cfg.video_length;

  auto emit = [&](Matrix& video, std::size_t t, std::size_t action,
                  std::size_t adverb) {
    const Matrix& r = truth.adverb_maps[adverb];
    const auto sig = truth.signatures.row(action);
    auto dst = video.row(t);
    for (std::size_t i = 0; i < D; ++i) {
      double v = 0.0;
      for (std::size_t k = 0; k < D; ++k) v += r(i, k) * sig[k];
      dst[i] = v + noise_std * gauss(rng);
    }
  };

  const std::size_t total = cfg.train_videos + cfg.test_videos;
  for (std::size_t n = 0; n < total; ++n) {
    const bool is_test = n >= cfg.train_videos;
    const std::string id = (is_test ? "test" : "train") +
                           std::string("_") + zero_padded(n, 5);
    const auto& pool = is_test ? test_groups : train_groups;
    const std::string group = pool[uniform_index(rng, 0, pool.size() - 1)];
    const std::size_t action = uniform_index(rng, 0, A - 1);
    const std::size_t adverb = uniform_index(rng, 0, M - 1);
    const bool present = is_test || unit(rng) >= cfg.noise_fraction;

    // Distractor actions: a random subset of the other actions.
    std::vector<std::size_t> others;
    for (std::size_t a = 0; a < A; ++a)
      if (a != action) others.push_back(a);
    for (std::size_t i = 0; i < cfg.distractor_count; ++i)
      std::swap(others[i], others[uniform_index(rng, i, others.size() - 1)]);
    others.resize(cfg.distractor_count);

    const std::size_t length =
        uniform_index(rng, cfg.span_length_min, cfg.span_length_max);
    const std::size_t start = uniform_index(rng, 0, S - length);
    const std::int64_t offset = static_cast<std::int64_t>(uniform_index(
                                    rng, 0,
                                    static_cast<std::size_t>(cfg.span_offset_max -
                                                             cfg.span_offset_min))) +
                                cfg.span_offset_min;
    const double jitter = unit(rng) - 0.5;
    double ts = static_cast<double>(start) + static_cast<double>(length) / 2.0 +
                static_cast<double>(offset) + jitter;
    ts = std::clamp(ts, 0.0, std::nextafter(static_cast<double>(S), 0.0));

    Matrix video(S, D);
    auto fill_blocks = [&](std::size_t from, std::size_t to) {
      std::size_t t = from;
      while (t < to) {
        const std::size_t len = std::min(
            to - t, uniform_index(rng, cfg.block_length_min, cfg.block_length_max));
        const std::size_t b = others[uniform_index(rng, 0, others.size() - 1)];
        const std::size_t m = uniform_index(rng, 0, M - 1);
        for (std::size_t k = 0; k < len; ++k) emit(video, t + k, b, m);
        t += len;
      }
    };
    fill_blocks(0, start);
    if (present) {
      for (std::size_t t = start; t < start + length; ++t)
        emit(video, t, action, adverb);
    } else {
      fill_blocks(start, start + length);
    }
    fill_blocks(start + length, S);

    ds.store.add(id, std::move(video));
    AnnotationRecord rec;
    rec.video_id = id;
    rec.action = ds.actions.name(action);
    rec.adverb = ds.adverbs.name(adverb);
    rec.timestamp = ts;
    rec.split = is_test ? "test" : "train";
    rec.group = group;
    ds.records.push_back(std::move(rec));
    truth.spans.push_back({id, static_cast<std::int64_t>(start),
                           static_cast<std::int64_t>(start + length), present});
  }
  ds.ground_truth = truth.spans;
  return out;
}

}  // namespace actmod
