#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "actmod/matrix.hpp"
#include "actmod/tape.hpp"

namespace actmod {

using Rng = std::mt19937_64;

// Actions with their pretrained word vectors (one row per action).
class ActionVocabulary {
 public:
  ActionVocabulary() = default;
  ActionVocabulary(std::vector<std::string> names, Matrix vectors);

  std::size_t size() const { return names_.size(); }
  std::size_t dim() const { return vectors_.cols(); }
  const std::string& name(std::size_t id) const;
  std::size_t id(const std::string& name) const;
  bool contains(const std::string& name) const {
    return index_.count(name) != 0;
  }
  const std::vector<std::string>& names() const { return names_; }
  const Matrix& vectors() const { return vectors_; }

 private:
  std::vector<std::string> names_;
  Matrix vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Adverbs, each paired with exactly one antonym. Pretrained vectors are
// optional and only needed by the variants that consume them.
class AdverbVocabulary {
 public:
  AdverbVocabulary() = default;
  AdverbVocabulary(std::vector<std::string> names,
                   std::vector<std::size_t> antonyms,
                   std::optional<Matrix> vectors = std::nullopt);
  // Builds ids from antonym pairs in order: pair k gives ids 2k and 2k+1.
  static AdverbVocabulary from_pairs(
      const std::vector<std::pair<std::string, std::string>>& pairs,
      std::optional<Matrix> vectors = std::nullopt);

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t id) const;
  std::size_t id(const std::string& name) const;
  bool contains(const std::string& name) const {
    return index_.count(name) != 0;
  }
  std::size_t antonym(std::size_t id) const;
  // One adverb standing for its antonym pair (the smaller id).
  std::size_t representative(std::size_t id) const;
  bool has_vectors() const { return vectors_.has_value(); }
  const Matrix& vectors() const;
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::size_t>& antonyms() const { return antonyms_; }

 private:
  std::vector<std::string> names_;
  std::vector<std::size_t> antonyms_;
  std::optional<Matrix> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class ModifierKind : std::uint8_t {
  fixed_translation,    // z + word_vector(m)
  learned_translation,  // z + b_m
  linear,               // W_m z
  nonlinear,            // W2_m relu(W1_m z + b_m)
};

enum class AttentionKind : std::uint8_t {
  single,          // centre segment only
  average,         // uniform mean over unpadded segments
  class_agnostic,  // softmax(w1 . tanh(W2 f(x))) pooling
  class_specific,  // as above with one filter w1 per action
  sdp,             // multi-head scaled dot-product queried by the action
};

enum class QueryKind : std::uint8_t {
  action_embedding,
  action_onehot,
  adverb_vector,
  modifier_matrix,
  modified_action,
};

enum class SoftmaxScale : std::uint8_t { sqrt_window, sqrt_key_dim };

std::string to_string(ModifierKind k);
std::string to_string(AttentionKind k);
std::string to_string(QueryKind k);
std::string to_string(SoftmaxScale k);
ModifierKind parse_modifier_kind(const std::string& s);
AttentionKind parse_attention_kind(const std::string& s);
QueryKind parse_query_kind(const std::string& s);
SoftmaxScale parse_softmax_scale(const std::string& s);

struct ModelConfig {
  std::size_t embed_dim = 300;
  std::size_t head_dim = 75;
  std::size_t heads = 4;
  std::size_t feature_dim = 2048;
  std::size_t window = 20;
  // Hidden width of the class-agnostic / class-specific scoring layer.
  std::size_t scorer_hidden = 75;
  double margin = 1.0;
  ModifierKind modifier = ModifierKind::linear;
  AttentionKind attention = AttentionKind::sdp;
  QueryKind query = QueryKind::action_embedding;
  SoftmaxScale scale = SoftmaxScale::sqrt_window;

  void validate() const;
};

// One window of per-second features around a weak timestamp.
struct VideoSample {
  Matrix features;           // window x feature_dim
  std::vector<bool> padded;  // per row; padded rows are zero
  std::size_t action = 0;
  std::size_t adverb = 0;
  std::string video_id;
  std::int64_t window_start = 0;  // video second of row 0

  std::size_t unpadded_rows() const;
};

struct AttentionHead {
  Parameter query;  // head_dim x query_dim
  Parameter key;    // head_dim x feature_dim
  Parameter value;  // head_dim x feature_dim
};

// Every trainable tensor of the embedding model. Only the members used by the
// configured variants are populated; parameters() lists exactly those.
class ModelParams {
 public:
  ModelParams(ModelConfig config, ActionVocabulary actions,
              AdverbVocabulary adverbs, Rng& rng);

  const ModelConfig& config() const { return config_; }
  const ActionVocabulary& actions() const { return actions_; }
  const AdverbVocabulary& adverbs() const { return adverbs_; }
  std::size_t query_dim() const;

  Parameter action_table;                 // A x E, starts at word vectors
  std::vector<Parameter> modifier;        // W_m (linear) or W1_m (nonlinear)
  std::vector<Parameter> modifier_out;    // W2_m (nonlinear)
  std::vector<Parameter> modifier_bias;   // b_m (learned translation, nonlinear)
  std::vector<AttentionHead> heads;       // sdp
  Parameter head_projection;              // E x (heads * head_dim), sdp
  Parameter segment_projection;           // E x D, non-sdp variants
  Parameter scorer_hidden;                // H x D, class agnostic/specific
  Parameter scorer_filter;                // 1 x H or A x H

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Parameter* find(const std::string& name);

 private:
  ModelConfig config_;
  ActionVocabulary actions_;
  AdverbVocabulary adverbs_;
};

// Uniform Xavier/Glorot initialisation, bound sqrt(6 / (rows + cols)).
Matrix xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng);

// Redraws every parameter except the action table from xavier_uniform, so
// that modifiers are no longer identities. Gives an untrained random model.
void randomize_parameters(ModelParams& params, Rng& rng);

struct VideoEmbedding {
  NodeId embedding;
  // Attention weights per head (sdp), one set for the scored variants, and
  // none for single/average.
  std::vector<NodeId> weights;
};

// Builds model computations on a tape. Text-side nodes (g(a), O_m(g(a)),
// projected queries) are memoised so a batch shares them.
class ForwardPass {
 public:
  ForwardPass(Tape& tape, ModelParams& params);

  Tape& tape() { return tape_; }
  ModelParams& params() { return params_; }

  NodeId action(std::size_t a);
  NodeId modify(std::size_t m, NodeId z);
  NodeId modified_action(std::size_t m, std::size_t a);
  NodeId query(const VideoSample& sample);
  // f'(x, a) for the configured attention variant. uniform_attention replaces
  // learned weights by a uniform distribution over unpadded rows.
  VideoEmbedding video(const VideoSample& sample, bool uniform_attention = false);

  NodeId triplet(NodeId anchor, NodeId positive, NodeId negative);
  // Action-only triplet against unmodified action embeddings.
  NodeId action_triplet(NodeId video, std::size_t action,
                        std::size_t negative_action);
  NodeId action_loss(NodeId video, const VideoSample& sample,
                     std::size_t negative_action);
  // Defaults to the antonym as the negative adverb.
  NodeId adverb_loss(NodeId video, const VideoSample& sample,
                     std::optional<std::size_t> negative_adverb = std::nullopt);
  // Single triplet against an arbitrary (action, adverb) negative target.
  NodeId pair_triplet(NodeId video, const VideoSample& sample,
                      std::size_t negative_action, std::size_t negative_adverb);

 private:
  struct HeadContext {
    NodeId context;
    NodeId weights;
  };
  HeadContext head(AttentionHead& h, NodeId features,
                   const VideoSample& sample, NodeId query_node,
                   bool uniform_attention);
  NodeId uniform_weights(const VideoSample& sample);
  NodeId projected_query(std::size_t head_index, const VideoSample& sample);
  std::pair<int, std::size_t> query_key(const VideoSample& sample) const;
  double softmax_scale() const;

  Tape& tape_;
  ModelParams& params_;
  std::map<std::size_t, NodeId> actions_;
  std::map<std::pair<std::size_t, std::size_t>, NodeId> modified_;
  std::map<std::pair<int, std::size_t>, NodeId> queries_;
  std::map<std::tuple<std::size_t, int, std::size_t>, NodeId> projected_;
};

// Value-level entry points mirroring ForwardPass.
Vector embed_action(ModelParams& params, std::size_t a);
Vector apply_modifier(ModelParams& params, std::size_t m, const Vector& z);
Vector build_query(ModelParams& params, const VideoSample& sample);

struct HeadOutput {
  Vector context;
  Vector weights;
};
HeadOutput attention_head(AttentionHead& head, const VideoSample& sample,
                          const Vector& query, double scale);

struct VideoOutput {
  Vector embedding;
  std::vector<Vector> weights;
};
// f'(x, a) with the configured attention variant and the sample's query.
VideoOutput embed_video(ModelParams& params, const VideoSample& sample);

double triplet_loss(const Vector& anchor, const Vector& positive,
                    const Vector& negative, double margin);
double action_loss(ModelParams& params, const VideoSample& sample,
                   std::size_t negative_action);
double adverb_loss(ModelParams& params, const VideoSample& sample);

}  // namespace actmod
