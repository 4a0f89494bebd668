#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "actmod/model.hpp"
#include "actmod/optim.hpp"

namespace actmod {

enum class LossMode : std::uint8_t {
  both,                 // action triplet + antonym-negative adverb triplet
  single,               // one triplet; negative differs in action, adverb or both
  any_adverb_negative,  // both triplets, adverb negative drawn from all others
};

enum class Stage : std::uint8_t { actions_only, joint };

std::string to_string(LossMode m);
std::string to_string(Stage s);
LossMode parse_loss_mode(const std::string& s);

struct TrainConfig {
  std::size_t epochs = 1000;
  std::size_t stage1_epochs = 200;
  std::size_t batch_size = 512;
  double lr = 1e-4;
  double modifier_lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::both;
  bool freeze_action_embeddings = false;
  // Stage one pools with uniform weights instead of learned attention.
  bool stage1_uniform_attention = false;
  // Attention parameters stay fixed during stage one.
  bool freeze_attention_stage1 = false;
  std::size_t checkpoint_every = 100;

  void validate() const;
};

struct BatchItem {
  std::size_t sample = 0;
  std::size_t negative_action = 0;
  // Used by the single-loss and any-adverb modes.
  std::size_t negative_adverb = 0;
  // Single-loss mode: 0 = other action, 1 = other adverb, 2 = both.
  std::uint8_t negative_kind = 0;
};

// Uniform sampling with replacement; each anchor gets a negative action drawn
// uniformly from the other actions present in the batch (or from the whole
// vocabulary when the batch holds a single action).
std::vector<BatchItem> sample_batch(const std::vector<VideoSample>& samples,
                                    std::size_t num_actions,
                                    std::size_t num_adverbs, Rng& rng,
                                    std::size_t batch_size,
                                    LossMode mode = LossMode::both);

struct EpochStats {
  std::size_t epoch = 0;
  Stage stage = Stage::actions_only;
  double action_loss = 0.0;  // mean per sample (stage one: plain triplet)
  double adverb_loss = 0.0;  // mean per sample (0 in stage one)
  double grad_norm = 0.0;    // mean global gradient norm over batches
  double wall_seconds = 0.0;
  std::size_t batches = 0;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
};

// Writes the log as tab-separated text. Wall time is non-deterministic and
// only included on request.
std::string format_train_log(const TrainLog& log, bool include_wall_time);

struct TrainState {
  ModelParams params;
  Rng rng;
  std::size_t epoch = 0;  // epochs completed
  TrainLog log;
};

// Parameters, optimizer and RNG seeded from config.seed.
TrainState init_train_state(const TrainConfig& config,
                            const ModelConfig& model_config,
                            ActionVocabulary actions, AdverbVocabulary adverbs);

// Loss of one batch on a fresh tape (no parameter update). Returns the mean
// of the per-sample objective and fills the two component means.
struct BatchLoss {
  double total = 0.0;
  double action = 0.0;
  double adverb = 0.0;
};

class Trainer {
 public:
  Trainer(TrainConfig config, const std::vector<VideoSample>& samples);

  const TrainConfig& config() const { return config_; }
  Stage stage_for(std::size_t epoch) const;

  // Forward + backward + Adam step for one batch.
  BatchLoss step(TrainState& state, const std::vector<BatchItem>& batch,
                 Stage stage, double* grad_norm = nullptr) const;
  // Forward only.
  BatchLoss evaluate(ModelParams& params, const std::vector<BatchItem>& batch,
                     Stage stage) const;
  EpochStats train_epoch(TrainState& state, Stage stage) const;

  using CheckpointHook = std::function<void(const TrainState&, bool final)>;
  using EpochHook = std::function<void(const EpochStats&)>;
  // Runs epochs state.epoch .. config.epochs - 1, calling the checkpoint hook
  // every checkpoint_every epochs and after the last one.
  void train(TrainState& state, const CheckpointHook& hook = {},
             const EpochHook& on_epoch = {}) const;

 private:
  struct Objective {
    NodeId total;
    std::vector<NodeId> action_terms;
    std::vector<NodeId> adverb_terms;
  };
  Objective build(ForwardPass& fp, const std::vector<BatchItem>& batch,
                  Stage stage) const;
  bool is_trainable(const Parameter& p, const ModelParams& params,
                    Stage stage) const;

  TrainConfig config_;
  const std::vector<VideoSample>& samples_;
};

// Convenience wrapper: init, then train from scratch.
TrainState train(const TrainConfig& config, const ModelConfig& model_config,
                 const ActionVocabulary& actions,
                 const AdverbVocabulary& adverbs,
                 const std::vector<VideoSample>& samples,
                 const Trainer::CheckpointHook& hook = {});

}  // namespace actmod
