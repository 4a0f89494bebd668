#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "actmod/gradcheck.hpp"
#include "actmod/model.hpp"

namespace fixtures {

inline actmod::ModelConfig variant(
    actmod::ModifierKind m = actmod::ModifierKind::linear,
    actmod::AttentionKind a = actmod::AttentionKind::sdp,
    actmod::QueryKind q = actmod::QueryKind::action_embedding) {
  actmod::ModelConfig c;
  c.modifier = m;
  c.attention = a;
  c.query = q;
  return c;
}

// Random parameters, vocabulary (one antonym pair) and windows.
inline actmod::ToyProblem instance(std::uint64_t seed,
                                   const actmod::ModelConfig& v = variant(),
                                   std::size_t window = 6,
                                   std::size_t feature_dim = 8,
                                   std::size_t actions = 4,
                                   std::size_t embed = 12, std::size_t heads = 2,
                                   std::size_t samples = 3) {
  actmod::GradCheckConfig g;
  g.seed = seed;
  g.window = window;
  g.feature_dim = feature_dim;
  g.num_actions = actions;
  g.embed_dim = embed;
  g.heads = heads;
  g.samples = samples;
  g.margin = 1.0;
  return actmod::make_toy_problem(g, v);
}

inline actmod::Matrix gaussian(std::size_t r, std::size_t c,
                               std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  actmod::Matrix m(r, c);
  for (double& v : m.values()) v = n(rng);
  return m;
}

inline actmod::VideoSample sample(const actmod::Matrix& features,
                                  std::size_t action, std::size_t adverb,
                                  std::vector<bool> padded = {}) {
  actmod::VideoSample s;
  s.features = features;
  s.padded = padded.empty() ? std::vector<bool>(features.rows(), false)
                            : std::move(padded);
  s.action = action;
  s.adverb = adverb;
  s.video_id = "v";
  return s;
}

inline const std::vector<actmod::ModifierKind>& all_modifiers() {
  static const std::vector<actmod::ModifierKind> v{
      actmod::ModifierKind::fixed_translation,
      actmod::ModifierKind::learned_translation, actmod::ModifierKind::linear,
      actmod::ModifierKind::nonlinear};
  return v;
}

inline const std::vector<actmod::AttentionKind>& all_attentions() {
  static const std::vector<actmod::AttentionKind> v{
      actmod::AttentionKind::single, actmod::AttentionKind::average,
      actmod::AttentionKind::class_agnostic,
      actmod::AttentionKind::class_specific, actmod::AttentionKind::sdp};
  return v;
}

inline const std::vector<actmod::QueryKind>& all_queries() {
  static const std::vector<actmod::QueryKind> v{
      actmod::QueryKind::action_embedding, actmod::QueryKind::action_onehot,
      actmod::QueryKind::adverb_vector, actmod::QueryKind::modifier_matrix,
      actmod::QueryKind::modified_action};
  return v;
}

}  // namespace fixtures
