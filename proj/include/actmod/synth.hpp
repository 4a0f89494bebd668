#pragma once

#include <cstdint>
#include <vector>

#include "actmod/dataset.hpp"

namespace actmod {

// Planted-truth dataset generator. Each clean video carries the signature of
// its labelled action, transformed by the adverb's orthogonal map, over a
// short span near the weak timestamp; the remaining seconds are blocks of
// distractor actions. A noise_fraction of training videos has the labelled
// action removed entirely. Test videos are always clean.
struct SynthConfig {
  std::size_t num_actions = 10;
  std::size_t num_adverb_pairs = 3;
  std::size_t window = 20;
  std::size_t feature_dim = 32;
  std::size_t embed_dim = 300;
  std::size_t video_length = 40;  // seconds
  // Timestamp = span centre + an integer offset in [min, max] + jitter.
  std::int64_t span_offset_min = -3;
  std::int64_t span_offset_max = 3;
  std::size_t span_length_min = 3;
  std::size_t span_length_max = 6;
  std::size_t block_length_min = 2;
  std::size_t block_length_max = 6;
  double noise_fraction = 0.0;
  std::size_t distractor_count = 3;
  // Ratio of signature norm to per-second Gaussian noise norm; infinity is
  // noiseless.
  double signal_to_noise = 4.0;
  // Rotation angle (radians) of every plane of an adverb's orthogonal map.
  double adverb_angle = 0.7853981633974483;
  // Per-entry standard deviation of the generated word vectors.
  double word_vector_scale = 0.1;
  std::size_t train_videos = 1000;
  std::size_t test_videos = 200;
  std::size_t groups = 83;
  std::size_t test_groups = 18;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthTruth {
  Matrix signatures;                // A x D, one latent vector per action
  std::vector<Matrix> adverb_maps;  // per adverb, D x D orthogonal
  std::vector<GroundTruthSpan> spans;
};

struct SynthResult {
  Dataset dataset;
  SynthTruth truth;
};

SynthResult synth_generate(const SynthConfig& config);

// Uniformly random orthogonal matrix (Gram-Schmidt on Gaussian columns).
Matrix random_orthogonal(std::size_t n, Rng& rng);

}  // namespace actmod
