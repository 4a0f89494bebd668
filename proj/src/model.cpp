#include "actmod/model.hpp"

#include <algorithm>
#include <cmath>

#include "actmod/errors.hpp"

namespace actmod {

ActionVocabulary::ActionVocabulary(std::vector<std::string> names,
                                   Matrix vectors)
    : names_(std::move(names)), vectors_(std::move(vectors)) {
  if (vectors_.rows() != names_.size()) {
    throw DimensionError("action vocabulary: " + std::to_string(names_.size()) +
                         " names but " + std::to_string(vectors_.rows()) +
                         " vectors");
  }
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], i).second)
      throw DataError("duplicate action '" + names_[i] + "'");
  }
}

const std::string& ActionVocabulary::name(std::size_t id) const {
  if (id >= names_.size())
    throw LookupError("unknown action id " + std::to_string(id));
  return names_[id];
}

std::size_t ActionVocabulary::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("unknown action '" + name + "'");
  return it->second;
}

AdverbVocabulary::AdverbVocabulary(std::vector<std::string> names,
                                   std::vector<std::size_t> antonyms,
                                   std::optional<Matrix> vectors)
    : names_(std::move(names)),
      antonyms_(std::move(antonyms)),
      vectors_(std::move(vectors)) {
  if (antonyms_.size() != names_.size())
    throw DataError("adverb vocabulary: antonym table size mismatch");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], i).second)
      throw DataError("duplicate adverb '" + names_[i] + "'");
    const std::size_t j = antonyms_[i];
    if (j >= names_.size() || j == i || antonyms_[j] != i) {
      throw DataError("antonym relation for '" + names_[i] +
                      "' is not an involution without fixed points");
    }
  }
  if (vectors_ && vectors_->rows() != names_.size())
    throw DimensionError("adverb vocabulary: vector count mismatch");
}

AdverbVocabulary AdverbVocabulary::from_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    std::optional<Matrix> vectors) {
  std::vector<std::string> names;
  std::vector<std::size_t> antonyms;
  for (const auto& [a, b] : pairs) {
    const std::size_t i = names.size();
    names.push_back(a);
    names.push_back(b);
    antonyms.push_back(i + 1);
    antonyms.push_back(i);
  }
  return AdverbVocabulary(std::move(names), std::move(antonyms),
                          std::move(vectors));
}

const std::string& AdverbVocabulary::name(std::size_t id) const {
  if (id >= names_.size())
    throw LookupError("unknown adverb id " + std::to_string(id));
  return names_[id];
}

std::size_t AdverbVocabulary::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("unknown adverb '" + name + "'");
  return it->second;
}

std::size_t AdverbVocabulary::antonym(std::size_t id) const {
  if (id >= antonyms_.size())
    throw LookupError("adverb id " + std::to_string(id) + " has no antonym");
  return antonyms_[id];
}

std::size_t AdverbVocabulary::representative(std::size_t id) const {
  return std::min(id, antonym(id));
}

const Matrix& AdverbVocabulary::vectors() const {
  if (!vectors_) throw LookupError("adverb vocabulary has no word vectors");
  return *vectors_;
}

namespace {

template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::pair<const char*, E> (&table)[N],
             const char* what) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

template <typename E, std::size_t N>
std::string enum_name(E v, const std::pair<const char*, E> (&table)[N]) {
  for (const auto& [name, value] : table)
    if (v == value) return name;
  return "?";
}

constexpr std::pair<const char*, ModifierKind> kModifierNames[] = {
    {"fixed_translation", ModifierKind::fixed_translation},
    {"learned_translation", ModifierKind::learned_translation},
    {"linear", ModifierKind::linear},
    {"nonlinear", ModifierKind::nonlinear},
};
constexpr std::pair<const char*, AttentionKind> kAttentionNames[] = {
    {"single", AttentionKind::single},
    {"average", AttentionKind::average},
    {"class_agnostic", AttentionKind::class_agnostic},
    {"class_specific", AttentionKind::class_specific},
    {"sdp", AttentionKind::sdp},
};
constexpr std::pair<const char*, QueryKind> kQueryNames[] = {
    {"action_embedding", QueryKind::action_embedding},
    {"action_onehot", QueryKind::action_onehot},
    {"adverb_vector", QueryKind::adverb_vector},
    {"modifier_matrix", QueryKind::modifier_matrix},
    {"modified_action", QueryKind::modified_action},
};
constexpr std::pair<const char*, SoftmaxScale> kScaleNames[] = {
    {"sqrt_window", SoftmaxScale::sqrt_window},
    {"sqrt_key_dim", SoftmaxScale::sqrt_key_dim},
};

}  // namespace

std::string to_string(ModifierKind k) { return enum_name(k, kModifierNames); }
std::string to_string(AttentionKind k) { return enum_name(k, kAttentionNames); }
std::string to_string(QueryKind k) { return enum_name(k, kQueryNames); }
std::string to_string(SoftmaxScale k) { return enum_name(k, kScaleNames); }
ModifierKind parse_modifier_kind(const std::string& s) {
  return parse_enum(s, kModifierNames, "modifier kind");
}
AttentionKind parse_attention_kind(const std::string& s) {
  return parse_enum(s, kAttentionNames, "attention kind");
}
QueryKind parse_query_kind(const std::string& s) {
  return parse_enum(s, kQueryNames, "query kind");
}
SoftmaxScale parse_softmax_scale(const std::string& s) {
  return parse_enum(s, kScaleNames, "softmax scale");
}

void ModelConfig::validate() const {
  if (embed_dim == 0 || head_dim == 0 || heads == 0 || feature_dim == 0 ||
      window == 0 || scorer_hidden == 0)
    throw ConfigError("model dimensions must be positive");
  if (attention == AttentionKind::sdp && heads * head_dim != embed_dim) {
    throw ConfigError("heads * head_dim (" + std::to_string(heads * head_dim) +
                      ") must equal embed_dim (" + std::to_string(embed_dim) +
                      ")");
  }
  if (!(margin > 0.0)) throw ConfigError("margin must be positive");
  if (query == QueryKind::modifier_matrix &&
      (modifier == ModifierKind::fixed_translation ||
       modifier == ModifierKind::learned_translation)) {
    throw ConfigError("modifier_matrix queries need a matrix modifier");
  }
}

std::size_t VideoSample::unpadded_rows() const {
  return static_cast<std::size_t>(
      std::count(padded.begin(), padded.end(), false));
}

Matrix xavier_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& x : m.values()) x = dist(rng);
  return m;
}

void randomize_parameters(ModelParams& params, Rng& rng) {
  for (Parameter* p : params.parameters()) {
    if (p == &params.action_table) continue;
    p->value = xavier_uniform(p->value.rows(), p->value.cols(), rng);
  }
}

ModelParams::ModelParams(ModelConfig config, ActionVocabulary actions,
                         AdverbVocabulary adverbs, Rng& rng)
    : config_(config),
      actions_(std::move(actions)),
      adverbs_(std::move(adverbs)) {
  config_.validate();
  const std::size_t E = config_.embed_dim;
  const std::size_t D = config_.feature_dim;
  if (actions_.size() == 0) throw ConfigError("empty action vocabulary");
  if (actions_.dim() != E) {
    throw DimensionError("action vectors have dimension " +
                         std::to_string(actions_.dim()) + ", embedding is " +
                         std::to_string(E));
  }
  const bool needs_adverb_vectors =
      config_.modifier == ModifierKind::fixed_translation ||
      config_.modifier == ModifierKind::learned_translation ||
      config_.query == QueryKind::adverb_vector;
  if (needs_adverb_vectors) {
    if (!adverbs_.has_vectors())
      throw LookupError("configured variant needs adverb word vectors");
    if (adverbs_.vectors().cols() != E)
      throw DimensionError("adverb vectors do not match embedding dimension");
  }

  action_table = Parameter("action_table", actions_.vectors());
  const std::size_t M = adverbs_.size();
  for (std::size_t m = 0; m < M; ++m) {
    const std::string tag = std::to_string(m);
    switch (config_.modifier) {
      case ModifierKind::fixed_translation:
        break;
      case ModifierKind::learned_translation:
        modifier_bias.emplace_back("modifier_bias." + tag,
                                   Matrix::column(adverbs_.vectors().row(m)),
                                   ParamGroup::modifier);
        break;
      case ModifierKind::linear:
        modifier.emplace_back("modifier." + tag, Matrix::identity(E),
                              ParamGroup::modifier);
        break;
      case ModifierKind::nonlinear:
        modifier.emplace_back("modifier." + tag, xavier_uniform(E, E, rng),
                              ParamGroup::modifier);
        modifier_out.emplace_back("modifier_out." + tag,
                                  xavier_uniform(E, E, rng),
                                  ParamGroup::modifier);
        modifier_bias.emplace_back("modifier_bias." + tag, Matrix(E, 1),
                                   ParamGroup::modifier);
        break;
    }
  }

  const std::size_t Hd = config_.head_dim;
  switch (config_.attention) {
    case AttentionKind::sdp: {
      const std::size_t Q = query_dim();
      for (std::size_t h = 0; h < config_.heads; ++h) {
        const std::string tag = "head." + std::to_string(h);
        AttentionHead head;
        head.query = Parameter(tag + ".query", xavier_uniform(Hd, Q, rng));
        head.key = Parameter(tag + ".key", xavier_uniform(Hd, D, rng));
        head.value = Parameter(tag + ".value", xavier_uniform(Hd, D, rng));
        heads.push_back(std::move(head));
      }
      head_projection = Parameter("head_projection",
                                  xavier_uniform(E, config_.heads * Hd, rng));
      break;
    }
    case AttentionKind::single:
    case AttentionKind::average:
      segment_projection =
          Parameter("segment_projection", xavier_uniform(E, D, rng));
      break;
    case AttentionKind::class_agnostic:
    case AttentionKind::class_specific: {
      const std::size_t H = config_.scorer_hidden;
      const std::size_t filters =
          config_.attention == AttentionKind::class_specific ? actions_.size()
                                                             : 1;
      scorer_hidden = Parameter("scorer_hidden", xavier_uniform(H, D, rng));
      scorer_filter =
          Parameter("scorer_filter", xavier_uniform(filters, H, rng));
      segment_projection =
          Parameter("segment_projection", xavier_uniform(E, D, rng));
      break;
    }
  }
}

std::size_t ModelParams::query_dim() const {
  switch (config_.query) {
    case QueryKind::action_onehot:
      return actions_.size();
    case QueryKind::modifier_matrix:
      return config_.embed_dim * config_.embed_dim;
    default:
      return config_.embed_dim;
  }
}

std::vector<Parameter*> ModelParams::parameters() {
  std::vector<Parameter*> out;
  out.push_back(&action_table);
  for (auto& p : modifier) out.push_back(&p);
  for (auto& p : modifier_out) out.push_back(&p);
  for (auto& p : modifier_bias) out.push_back(&p);
  for (auto& h : heads) {
    out.push_back(&h.query);
    out.push_back(&h.key);
    out.push_back(&h.value);
  }
  for (Parameter* p : {&head_projection, &segment_projection, &scorer_hidden,
                       &scorer_filter}) {
    if (p->value.size() != 0) out.push_back(p);
  }
  return out;
}

std::vector<const Parameter*> ModelParams::parameters() const {
  auto mut = const_cast<ModelParams*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

Parameter* ModelParams::find(const std::string& name) {
  for (Parameter* p : parameters())
    if (p->name == name) return p;
  return nullptr;
}

// ---------------------------------------------------------------------------

ForwardPass::ForwardPass(Tape& tape, ModelParams& params)
    : tape_(tape), params_(params) {}

NodeId ForwardPass::action(std::size_t a) {
  if (a >= params_.actions().size())
    throw LookupError("unknown action id " + std::to_string(a));
  if (auto it = actions_.find(a); it != actions_.end()) return it->second;
  const NodeId table = tape_.parameter(params_.action_table);
  const NodeId node = tape_.row(table, a);
  actions_.emplace(a, node);
  return node;
}

NodeId ForwardPass::modify(std::size_t m, NodeId z) {
  if (m >= params_.adverbs().size())
    throw LookupError("unknown adverb id " + std::to_string(m));
  const std::size_t E = params_.config().embed_dim;
  const Matrix& zv = tape_.value(z);
  if (zv.rows() != E || zv.cols() != 1) {
    throw DimensionError("modifier input " + zv.shape_string() +
                         ", expected " + std::to_string(E) + "x1");
  }
  switch (params_.config().modifier) {
    case ModifierKind::fixed_translation:
      return tape_.add(
          z, tape_.constant(Matrix::column(params_.adverbs().vectors().row(m))));
    case ModifierKind::learned_translation:
      return tape_.add(z, tape_.parameter(params_.modifier_bias[m]));
    case ModifierKind::linear:
      return tape_.matmul(tape_.parameter(params_.modifier[m]), z);
    case ModifierKind::nonlinear: {
      const NodeId hidden = tape_.relu(
          tape_.add(tape_.matmul(tape_.parameter(params_.modifier[m]), z),
                    tape_.parameter(params_.modifier_bias[m])));
      return tape_.matmul(tape_.parameter(params_.modifier_out[m]), hidden);
    }
  }
  throw ContractError("unhandled modifier kind");
}

NodeId ForwardPass::modified_action(std::size_t m, std::size_t a) {
  const auto key = std::make_pair(m, a);
  if (auto it = modified_.find(key); it != modified_.end()) return it->second;
  const NodeId node = modify(m, action(a));
  modified_.emplace(key, node);
  return node;
}

std::pair<int, std::size_t> ForwardPass::query_key(
    const VideoSample& sample) const {
  const auto kind = params_.config().query;
  switch (kind) {
    case QueryKind::action_embedding:
    case QueryKind::action_onehot:
      return {static_cast<int>(kind), sample.action};
    case QueryKind::adverb_vector:
    case QueryKind::modifier_matrix:
      return {static_cast<int>(kind),
              params_.adverbs().representative(sample.adverb)};
    case QueryKind::modified_action:
      return {static_cast<int>(kind),
              params_.adverbs().representative(sample.adverb) *
                      params_.actions().size() +
                  sample.action};
  }
  throw ContractError("unhandled query kind");
}

NodeId ForwardPass::query(const VideoSample& sample) {
  const auto key = query_key(sample);
  if (auto it = queries_.find(key); it != queries_.end()) return it->second;
  if (sample.action >= params_.actions().size())
    throw LookupError("unknown action id " + std::to_string(sample.action));
  NodeId node{};
  switch (params_.config().query) {
    case QueryKind::action_embedding:
      node = action(sample.action);
      break;
    case QueryKind::action_onehot: {
      Matrix onehot(params_.actions().size(), 1);
      onehot(sample.action, 0) = 1.0;
      node = tape_.constant(std::move(onehot));
      break;
    }
    case QueryKind::adverb_vector: {
      const std::size_t rep = params_.adverbs().representative(sample.adverb);
      node = tape_.constant(Matrix::column(params_.adverbs().vectors().row(rep)));
      break;
    }
    case QueryKind::modifier_matrix: {
      const std::size_t rep = params_.adverbs().representative(sample.adverb);
      node = tape_.flatten(tape_.parameter(params_.modifier[rep]));
      break;
    }
    case QueryKind::modified_action:
      node = modified_action(params_.adverbs().representative(sample.adverb),
                             sample.action);
      break;
  }
  queries_.emplace(key, node);
  return node;
}

double ForwardPass::softmax_scale() const {
  const auto& c = params_.config();
  return c.scale == SoftmaxScale::sqrt_window
             ? std::sqrt(static_cast<double>(c.window))
             : std::sqrt(static_cast<double>(c.head_dim));
}

NodeId ForwardPass::projected_query(std::size_t head_index,
                                    const VideoSample& sample) {
  const auto qk = query_key(sample);
  const auto key = std::make_tuple(head_index, qk.first, qk.second);
  if (auto it = projected_.find(key); it != projected_.end()) return it->second;
  const NodeId node = tape_.matmul(
      tape_.parameter(params_.heads[head_index].query), query(sample));
  projected_.emplace(key, node);
  return node;
}

NodeId ForwardPass::uniform_weights(const VideoSample& sample) {
  const std::size_t n = sample.unpadded_rows();
  if (n == 0)
    throw DomainError("video window '" + sample.video_id +
                      "' has no unpadded rows");
  Matrix w(sample.padded.size(), 1);
  for (std::size_t t = 0; t < sample.padded.size(); ++t)
    if (!sample.padded[t]) w(t, 0) = 1.0 / static_cast<double>(n);
  return tape_.constant(std::move(w));
}

ForwardPass::HeadContext ForwardPass::head(AttentionHead& h,
                                           NodeId features,
                                           const VideoSample& sample,
                                           NodeId query_node,
                                           bool uniform_attention) {
  NodeId weights{};
  if (uniform_attention) {
    weights = uniform_weights(sample);
  } else {
    // (W^Q q)^T (W^K x_t) for every row t, computed as X (W^K^T (W^Q q)).
    const NodeId key_query =
        tape_.matmul(tape_.parameter(h.key), query_node, true, false);
    const NodeId logits = tape_.matmul(features, key_query);
    weights = tape_.masked_softmax(logits, sample.padded, softmax_scale());
  }
  // sum_t w_t W^V x_t = W^V (X^T w)
  const NodeId pooled = tape_.matmul(features, weights, true, false);
  const NodeId context = tape_.matmul(tape_.parameter(h.value), pooled);
  return {context, weights};
}

VideoEmbedding ForwardPass::video(const VideoSample& sample,
                                  bool uniform_attention) {
  const auto& cfg = params_.config();
  if (sample.features.rows() != cfg.window ||
      sample.features.cols() != cfg.feature_dim ||
      sample.padded.size() != cfg.window) {
    throw DimensionError("video window " + sample.features.shape_string() +
                         " does not match model " + std::to_string(cfg.window) +
                         "x" + std::to_string(cfg.feature_dim));
  }
  if (sample.unpadded_rows() == 0)
    throw DomainError("video window '" + sample.video_id +
                      "' has no unpadded rows");
  const NodeId features = tape_.constant(sample.features);
  VideoEmbedding out;
  switch (cfg.attention) {
    case AttentionKind::sdp: {
      std::vector<NodeId> contexts;
      for (std::size_t i = 0; i < params_.heads.size(); ++i) {
        const NodeId q =
            uniform_attention ? NodeId{} : projected_query(i, sample);
        auto hc = head(params_.heads[i], features, sample, q, uniform_attention);
        contexts.push_back(hc.context);
        out.weights.push_back(hc.weights);
      }
      out.embedding = tape_.matmul(tape_.parameter(params_.head_projection),
                                   tape_.concat(contexts));
      break;
    }
    case AttentionKind::single: {
      const std::size_t centre = cfg.window / 2;
      if (sample.padded[centre])
        throw DomainError("centre segment of '" + sample.video_id +
                          "' is padding");
      const NodeId x = tape_.row(features, centre);
      out.embedding =
          tape_.matmul(tape_.parameter(params_.segment_projection), x);
      Matrix one_hot(cfg.window, 1, 0.0);
      one_hot(centre, 0) = 1.0;
      out.weights.push_back(tape_.constant(one_hot));
      break;
    }
    case AttentionKind::average: {
      const NodeId weights = uniform_weights(sample);
      const NodeId pooled = tape_.matmul(features, weights, true, false);
      out.weights.push_back(weights);
      out.embedding =
          tape_.matmul(tape_.parameter(params_.segment_projection), pooled);
      break;
    }
    case AttentionKind::class_agnostic:
    case AttentionKind::class_specific: {
      NodeId weights{};
      if (uniform_attention) {
        weights = uniform_weights(sample);
      } else {
        const NodeId filters = tape_.parameter(params_.scorer_filter);
        NodeId filter{};
        if (cfg.attention == AttentionKind::class_specific) {
          if (sample.action >= params_.actions().size())
            throw LookupError("unknown action id " +
                              std::to_string(sample.action));
          filter = tape_.row(filters, sample.action);
        } else {
          filter = tape_.row(filters, 0);
        }
        // tanh(W2 X^T) is H x T; scores_t = w1 . column t.
        const NodeId hidden = tape_.tanh(tape_.matmul(
            tape_.parameter(params_.scorer_hidden), features, false, true));
        const NodeId scores = tape_.matmul(hidden, filter, true, false);
        weights = tape_.masked_softmax(scores, sample.padded, 1.0);
      }
      const NodeId pooled = tape_.matmul(features, weights, true, false);
      out.embedding =
          tape_.matmul(tape_.parameter(params_.segment_projection), pooled);
      out.weights.push_back(weights);
      break;
    }
  }
  return out;
}

NodeId ForwardPass::triplet(NodeId anchor, NodeId positive, NodeId negative) {
  const NodeId diff =
      tape_.sub(tape_.distance(anchor, positive), tape_.distance(anchor, negative));
  Matrix margin(1, 1, params_.config().margin);
  return tape_.hinge(tape_.add(diff, tape_.constant(std::move(margin))));
}

NodeId ForwardPass::action_triplet(NodeId video, std::size_t a,
                                   std::size_t negative_action) {
  if (negative_action == a)
    throw ContractError("negative action equals the positive action");
  return triplet(video, action(a), action(negative_action));
}

NodeId ForwardPass::action_loss(NodeId video, const VideoSample& sample,
                                std::size_t negative_action) {
  if (negative_action == sample.action)
    throw ContractError("negative action equals the labelled action");
  return triplet(video, modified_action(sample.adverb, sample.action),
                 modified_action(sample.adverb, negative_action));
}

NodeId ForwardPass::adverb_loss(NodeId video, const VideoSample& sample,
                                std::optional<std::size_t> negative_adverb) {
  const std::size_t neg =
      negative_adverb ? *negative_adverb
                      : params_.adverbs().antonym(sample.adverb);
  if (neg == sample.adverb)
    throw ContractError("negative adverb equals the labelled adverb");
  return triplet(video, modified_action(sample.adverb, sample.action),
                 modified_action(neg, sample.action));
}

NodeId ForwardPass::pair_triplet(NodeId video, const VideoSample& sample,
                                 std::size_t negative_action,
                                 std::size_t negative_adverb) {
  if (negative_action == sample.action && negative_adverb == sample.adverb)
    throw ContractError("negative pair equals the labelled pair");
  return triplet(video, modified_action(sample.adverb, sample.action),
                 modified_action(negative_adverb, negative_action));
}

// ---------------------------------------------------------------------------

Vector embed_action(ModelParams& params, std::size_t a) {
  Tape tape;
  ForwardPass fp(tape, params);
  return tape.value(fp.action(a)).to_vector();
}

Vector apply_modifier(ModelParams& params, std::size_t m, const Vector& z) {
  Tape tape;
  ForwardPass fp(tape, params);
  return tape.value(fp.modify(m, tape.constant(Matrix::column(z)))).to_vector();
}

Vector build_query(ModelParams& params, const VideoSample& sample) {
  Tape tape;
  ForwardPass fp(tape, params);
  return tape.value(fp.query(sample)).to_vector();
}

HeadOutput attention_head(AttentionHead& head, const VideoSample& sample,
                          const Vector& query, double scale) {
  if (sample.padded.size() != sample.features.rows())
    throw DimensionError("pad mask does not match window rows");
  Tape tape;
  const NodeId features = tape.constant(sample.features);
  const NodeId q = tape.matmul(tape.parameter(head.query),
                               tape.constant(Matrix::column(query)));
  const NodeId kq = tape.matmul(tape.parameter(head.key), q, true, false);
  const NodeId w =
      tape.masked_softmax(tape.matmul(features, kq), sample.padded, scale);
  const NodeId ctx = tape.matmul(tape.parameter(head.value),
                                 tape.matmul(features, w, true, false));
  return {tape.value(ctx).to_vector(), tape.value(w).to_vector()};
}

VideoOutput embed_video(ModelParams& params, const VideoSample& sample) {
  Tape tape;
  ForwardPass fp(tape, params);
  auto v = fp.video(sample);
  VideoOutput out;
  out.embedding = tape.value(v.embedding).to_vector();
  for (NodeId w : v.weights) out.weights.push_back(tape.value(w).to_vector());
  return out;
}

double triplet_loss(const Vector& anchor, const Vector& positive,
                    const Vector& negative, double margin) {
  if (!(margin > 0.0)) throw ContractError("margin must be positive");
  return hinge(euclidean_distance(anchor, positive) -
               euclidean_distance(anchor, negative) + margin);
}

double action_loss(ModelParams& params, const VideoSample& sample,
                   std::size_t negative_action) {
  Tape tape;
  ForwardPass fp(tape, params);
  const NodeId v = fp.video(sample).embedding;
  return tape.scalar(fp.action_loss(v, sample, negative_action));
}

double adverb_loss(ModelParams& params, const VideoSample& sample) {
  Tape tape;
  ForwardPass fp(tape, params);
  const NodeId v = fp.video(sample).embedding;
  return tape.scalar(fp.adverb_loss(v, sample));
}

}  // namespace actmod
