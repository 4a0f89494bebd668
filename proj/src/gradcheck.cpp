#include "actmod/gradcheck.hpp"

#include "actmod/errors.hpp"

namespace actmod {

ToyProblem make_toy_problem(const GradCheckConfig& config,
                            const ModelConfig& variant) {
  if (config.num_actions < 2) throw ConfigError("gradcheck needs two actions");
  if (config.heads == 0 || config.embed_dim % config.heads != 0)
    throw ConfigError("gradcheck embed_dim must be a multiple of heads");
  if (config.samples == 0 || config.window == 0 || config.feature_dim == 0)
    throw ConfigError("gradcheck sizes must be positive");
  Rng rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_matrix = [&](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (double& v : m.values()) v = normal(rng);
    return m;
  };

  ModelConfig mc = variant;
  mc.embed_dim = config.embed_dim;
  mc.heads = config.heads;
  mc.head_dim = config.embed_dim / config.heads;
  mc.feature_dim = config.feature_dim;
  mc.window = config.window;
  mc.scorer_hidden = std::max<std::size_t>(2, config.feature_dim / 2);
  mc.margin = config.margin;

  std::vector<std::string> names;
  for (std::size_t a = 0; a < config.num_actions; ++a)
    names.push_back("act" + std::to_string(a));
  ActionVocabulary actions(names,
                           random_matrix(config.num_actions, config.embed_dim));
  AdverbVocabulary adverbs = AdverbVocabulary::from_pairs(
      {{"up", "down"}}, random_matrix(2, config.embed_dim));

  ToyProblem toy{ModelParams(mc, std::move(actions), std::move(adverbs), rng),
                 {},
                 {}};
  randomize_parameters(toy.params, rng);
  std::uniform_int_distribution<std::size_t> pick_action(
      0, config.num_actions - 1);
  std::uniform_int_distribution<std::size_t> pick_adverb(0, 1);
  for (std::size_t i = 0; i < config.samples; ++i) {
    VideoSample s;
    s.features = random_matrix(config.window, config.feature_dim);
    s.padded.assign(config.window, false);
    if (i == 0 && config.window > 1) {
      s.padded.back() = true;
      for (double& v : s.features.row(config.window - 1)) v = 0.0;
    }
    s.action = pick_action(rng);
    s.adverb = pick_adverb(rng);
    s.video_id = "toy" + std::to_string(i);
    toy.samples.push_back(std::move(s));
    toy.negative_actions.push_back((toy.samples.back().action + 1 +
                                    pick_action(rng) % (config.num_actions - 1)) %
                                   config.num_actions);
  }
  return toy;
}

GradCheckReport check_toy_gradients(ToyProblem& toy,
                                    const GradCheckConfig& config) {
  const LossBuilder build = [&](Tape& tape) {
    ForwardPass fp(tape, toy.params);
    std::vector<NodeId> terms;
    for (std::size_t i = 0; i < toy.samples.size(); ++i) {
      const VideoSample& s = toy.samples[i];
      const NodeId video = fp.video(s).embedding;
      terms.push_back(tape.add(fp.action_loss(video, s, toy.negative_actions[i]),
                               fp.adverb_loss(video, s)));
    }
    return tape.mean(terms);
  };
  const auto params = toy.params.parameters();
  return fd_gradient_check(build, params,
                           {config.epsilon, config.tolerance, config.floor});
}

}  // namespace actmod
