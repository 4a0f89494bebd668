#pragma once

#include <cstdint>
#include <vector>

#include "actmod/model.hpp"
#include "actmod/optim.hpp"

namespace actmod {

// Toy model and data for checking gradients of the full objective.
struct GradCheckConfig {
  std::uint64_t seed = 7;
  std::size_t window = 6;
  std::size_t feature_dim = 8;
  std::size_t num_actions = 4;
  std::size_t embed_dim = 12;
  std::size_t heads = 2;
  std::size_t samples = 3;
  // Wide enough that every hinge stays active at the random starting point.
  double margin = 5.0;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  double floor = 1e-6;
};

struct ToyProblem {
  ModelParams params;
  std::vector<VideoSample> samples;
  std::vector<std::size_t> negative_actions;
};

// Random vocabulary (one antonym pair, with word vectors), random windows
// (the last row of the first sample is padding) and randomised parameters.
// Dimensions of `variant` are replaced by the toy sizes; its variant
// selectors are kept.
ToyProblem make_toy_problem(const GradCheckConfig& config,
                            const ModelConfig& variant);

// Checks d/dtheta of mean(L_act + L_adv) over the toy samples.
GradCheckReport check_toy_gradients(ToyProblem& toy,
                                    const GradCheckConfig& config);

}  // namespace actmod
