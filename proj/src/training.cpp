#include "actmod/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "actmod/dataset.hpp"
#include "actmod/errors.hpp"

namespace actmod {

std::string to_string(LossMode m) {
  switch (m) {
    case LossMode::both:
      return "both";
    case LossMode::single:
      return "single";
    case LossMode::any_adverb_negative:
      return "any_adverb_negative";
  }
  return "?";
}

std::string to_string(Stage s) {
  return s == Stage::actions_only ? "actions_only" : "joint";
}

LossMode parse_loss_mode(const std::string& s) {
  if (s == "both") return LossMode::both;
  if (s == "single") return LossMode::single;
  if (s == "any_adverb_negative") return LossMode::any_adverb_negative;
  throw ConfigError("unknown loss mode '" + s + "'");
}

void TrainConfig::validate() const {
  if (stage1_epochs > epochs)
    throw ConfigError("stage1_epochs exceeds epochs");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0) || !(modifier_lr > 0.0))
    throw ConfigError("learning rates must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
      !(adam_epsilon > 0.0))
    throw ConfigError("invalid Adam constants");
  if (checkpoint_every == 0)
    throw ConfigError("checkpoint_every must be positive");
}

std::vector<BatchItem> sample_batch(const std::vector<VideoSample>& samples,
                                    std::size_t num_actions,
                                    std::size_t num_adverbs, Rng& rng,
                                    std::size_t batch_size, LossMode mode) {
  if (samples.empty()) throw ContractError("cannot sample from an empty dataset");
  if (num_actions < 2)
    throw ContractError("negative sampling needs at least two actions");
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::vector<BatchItem> batch(batch_size);
  std::set<std::size_t> present;
  for (auto& item : batch) {
    item.sample = pick(rng);
    present.insert(samples[item.sample].action);
  }
  std::vector<std::size_t> candidates;
  for (auto& item : batch) {
    const std::size_t a = samples[item.sample].action;
    candidates.clear();
    for (std::size_t c : present)
      if (c != a) candidates.push_back(c);
    if (candidates.empty()) {
      for (std::size_t c = 0; c < num_actions; ++c)
        if (c != a) candidates.push_back(c);
    }
    std::uniform_int_distribution<std::size_t> neg(0, candidates.size() - 1);
    item.negative_action = candidates[neg(rng)];
    if (mode != LossMode::both) {
      const std::size_t m = samples[item.sample].adverb;
      if (num_adverbs < 2)
        throw ContractError("adverb negatives need at least two adverbs");
      std::uniform_int_distribution<std::size_t> adv(0, num_adverbs - 2);
      std::size_t other = adv(rng);
      if (other >= m) ++other;
      item.negative_adverb = other;
      if (mode == LossMode::single) {
        std::uniform_int_distribution<int> kind(0, 2);
        item.negative_kind = static_cast<std::uint8_t>(kind(rng));
      }
    }
  }
  return batch;
}

std::string format_train_log(const TrainLog& log, bool include_wall_time) {
  std::ostringstream os;
  os << "epoch\tstage\taction_loss\tadverb_loss\tgrad_norm\tbatches";
  if (include_wall_time) os << "\twall_seconds";
  os << '\n';
  for (const auto& e : log.epochs) {
    os << e.epoch << '\t' << to_string(e.stage) << '\t'
       << format_double(e.action_loss) << '\t' << format_double(e.adverb_loss)
       << '\t' << format_double(e.grad_norm) << '\t' << e.batches;
    if (include_wall_time) os << '\t' << format_double(e.wall_seconds);
    os << '\n';
  }
  return os.str();
}

TrainState init_train_state(const TrainConfig& config,
                            const ModelConfig& model_config,
                            ActionVocabulary actions, AdverbVocabulary adverbs) {
  config.validate();
  Rng rng(config.seed);
  ModelParams params(model_config, std::move(actions), std::move(adverbs), rng);
  return TrainState{std::move(params), rng, 0, {}};
}

Trainer::Trainer(TrainConfig config, const std::vector<VideoSample>& samples)
    : config_(config), samples_(samples) {
  config_.validate();
}

Stage Trainer::stage_for(std::size_t epoch) const {
  return epoch < config_.stage1_epochs ? Stage::actions_only : Stage::joint;
}

Trainer::Objective Trainer::build(ForwardPass& fp,
                                  const std::vector<BatchItem>& batch,
                                  Stage stage) const {
  Tape& tape = fp.tape();
  Objective obj;
  std::vector<NodeId> per_sample;
  per_sample.reserve(batch.size());
  const bool uniform =
      stage == Stage::actions_only && config_.stage1_uniform_attention;
  for (const BatchItem& item : batch) {
    const VideoSample& s = samples_.at(item.sample);
    NodeId video;
    try {
      video = fp.video(s, uniform).embedding;
    } catch (const DomainError& e) {
      // Non-finite features surface here before any loss exists.
      throw NumericError("non-finite training loss; offending samples: " +
                         s.video_id + " (" + e.what() + ")");
    }
    if (stage == Stage::actions_only) {
      const NodeId l = fp.action_triplet(video, s.action, item.negative_action);
      obj.action_terms.push_back(l);
      per_sample.push_back(l);
      continue;
    }
    switch (config_.loss_mode) {
      case LossMode::both: {
        const NodeId la = fp.action_loss(video, s, item.negative_action);
        const NodeId ld = fp.adverb_loss(video, s);
        obj.action_terms.push_back(la);
        obj.adverb_terms.push_back(ld);
        per_sample.push_back(tape.add(la, ld));
        break;
      }
      case LossMode::any_adverb_negative: {
        const NodeId la = fp.action_loss(video, s, item.negative_action);
        const NodeId ld = fp.adverb_loss(video, s, item.negative_adverb);
        obj.action_terms.push_back(la);
        obj.adverb_terms.push_back(ld);
        per_sample.push_back(tape.add(la, ld));
        break;
      }
      case LossMode::single: {
        const std::size_t neg_action =
            item.negative_kind == 1 ? s.action : item.negative_action;
        const std::size_t neg_adverb =
            item.negative_kind == 0 ? s.adverb : item.negative_adverb;
        const NodeId l = fp.pair_triplet(video, s, neg_action, neg_adverb);
        obj.action_terms.push_back(l);
        per_sample.push_back(l);
        break;
      }
    }
  }
  obj.total = tape.mean(per_sample);
  return obj;
}

bool Trainer::is_trainable(const Parameter& p, const ModelParams& params,
                           Stage stage) const {
  if (p.group == ParamGroup::modifier) return stage == Stage::joint;
  if (&p == &params.action_table) return !config_.freeze_action_embeddings;
  if (stage == Stage::actions_only && config_.freeze_attention_stage1)
    return false;
  return true;
}

namespace {

double mean_of(const Tape& tape, const std::vector<NodeId>& nodes) {
  if (nodes.empty()) return 0.0;
  double s = 0.0;
  for (NodeId n : nodes) s += tape.scalar(n);
  return s / static_cast<double>(nodes.size());
}

}  // namespace

BatchLoss Trainer::evaluate(ModelParams& params,
                            const std::vector<BatchItem>& batch,
                            Stage stage) const {
  Tape tape;
  ForwardPass fp(tape, params);
  const Objective obj = build(fp, batch, stage);
  return {tape.scalar(obj.total), mean_of(tape, obj.action_terms),
          mean_of(tape, obj.adverb_terms)};
}

BatchLoss Trainer::step(TrainState& state, const std::vector<BatchItem>& batch,
                        Stage stage, double* grad_norm) const {
  Tape tape;
  ForwardPass fp(tape, state.params);
  const Objective obj = build(fp, batch, stage);
  const double total = tape.scalar(obj.total);
  if (!std::isfinite(total)) {
    std::string ids;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double a = tape.scalar(obj.action_terms[i]);
      const double d =
          obj.adverb_terms.empty() ? 0.0 : tape.scalar(obj.adverb_terms[i]);
      if (!std::isfinite(a) || !std::isfinite(d))
        ids += (ids.empty() ? "" : ", ") + samples_[batch[i].sample].video_id;
    }
    throw NumericError("non-finite training loss; offending samples: " + ids);
  }
  for (Parameter* p : state.params.parameters()) p->zero_grad();
  tape.backward(obj.total);

  double sq = 0.0;
  for (Parameter* p : state.params.parameters())
    for (double g : p->grad.values()) sq += g * g;
  if (grad_norm) *grad_norm = std::sqrt(sq);

  AdamConfig adam{config_.lr, config_.beta1, config_.beta2,
                  config_.adam_epsilon};
  AdamConfig modifier_adam = adam;
  modifier_adam.lr = config_.modifier_lr;
  for (Parameter* p : state.params.parameters()) {
    if (!is_trainable(*p, state.params, stage)) {
      p->zero_grad();
      continue;
    }
    adam_step(*p, p->group == ParamGroup::modifier ? modifier_adam : adam);
  }
  return {total, mean_of(tape, obj.action_terms),
          mean_of(tape, obj.adverb_terms)};
}

EpochStats Trainer::train_epoch(TrainState& state, Stage stage) const {
  const auto t0 = std::chrono::steady_clock::now();
  EpochStats stats;
  stats.epoch = state.epoch;
  stats.stage = stage;
  const std::size_t n = samples_.size();
  const std::size_t batches = (n + config_.batch_size - 1) / config_.batch_size;
  const std::size_t bs = std::min(config_.batch_size, n);
  for (std::size_t b = 0; b < batches; ++b) {
    const auto batch =
        sample_batch(samples_, state.params.actions().size(),
                     state.params.adverbs().size(), state.rng, bs,
                     config_.loss_mode);
    double norm = 0.0;
    const BatchLoss loss = step(state, batch, stage, &norm);
    stats.action_loss += loss.action;
    stats.adverb_loss += loss.adverb;
    stats.grad_norm += norm;
  }
  stats.batches = batches;
  if (batches > 0) {
    stats.action_loss /= static_cast<double>(batches);
    stats.adverb_loss /= static_cast<double>(batches);
    stats.grad_norm /= static_cast<double>(batches);
  }
  stats.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  return stats;
}

void Trainer::train(TrainState& state, const CheckpointHook& hook,
                    const EpochHook& on_epoch) const {
  if (samples_.empty()) throw ContractError("no training samples");
  while (state.epoch < config_.epochs) {
    const Stage stage = stage_for(state.epoch);
    EpochStats stats = train_epoch(state, stage);
    state.log.epochs.push_back(stats);
    ++state.epoch;
    if (on_epoch) on_epoch(stats);
    const bool last = state.epoch == config_.epochs;
    if (hook && (last || state.epoch % config_.checkpoint_every == 0))
      hook(state, last);
  }
}

TrainState train(const TrainConfig& config, const ModelConfig& model_config,
                 const ActionVocabulary& actions,
                 const AdverbVocabulary& adverbs,
                 const std::vector<VideoSample>& samples,
                 const Trainer::CheckpointHook& hook) {
  TrainState state = init_train_state(config, model_config, actions, adverbs);
  Trainer trainer(config, samples);
  trainer.train(state, hook);
  return state;
}

}  // namespace actmod
