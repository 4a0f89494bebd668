#include "actmod/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <type_traits>

#include "actmod/errors.hpp"
#include "json.hpp"

namespace actmod {

using nlohmann::json;

namespace {

template <class F>
void visit(ModelConfig& c, F&& f) {
  f("embed_dim", c.embed_dim);
  f("head_dim", c.head_dim);
  f("heads", c.heads);
  f("feature_dim", c.feature_dim);
  f("window", c.window);
  f("scorer_hidden", c.scorer_hidden);
  f("margin", c.margin);
  f("modifier", c.modifier);
  f("attention", c.attention);
  f("query", c.query);
  f("scale", c.scale);
}

template <class F>
void visit(TrainConfig& c, F&& f) {
  f("epochs", c.epochs);
  f("stage1_epochs", c.stage1_epochs);
  f("batch_size", c.batch_size);
  f("lr", c.lr);
  f("modifier_lr", c.modifier_lr);
  f("beta1", c.beta1);
  f("beta2", c.beta2);
  f("adam_epsilon", c.adam_epsilon);
  f("seed", c.seed);
  f("loss_mode", c.loss_mode);
  f("freeze_action_embeddings", c.freeze_action_embeddings);
  f("stage1_uniform_attention", c.stage1_uniform_attention);
  f("freeze_attention_stage1", c.freeze_attention_stage1);
  f("checkpoint_every", c.checkpoint_every);
}

template <class F>
void visit(SynthConfig& c, F&& f) {
  f("num_actions", c.num_actions);
  f("num_adverb_pairs", c.num_adverb_pairs);
  f("window", c.window);
  f("feature_dim", c.feature_dim);
  f("embed_dim", c.embed_dim);
  f("video_length", c.video_length);
  f("span_offset_min", c.span_offset_min);
  f("span_offset_max", c.span_offset_max);
  f("span_length_min", c.span_length_min);
  f("span_length_max", c.span_length_max);
  f("block_length_min", c.block_length_min);
  f("block_length_max", c.block_length_max);
  f("noise_fraction", c.noise_fraction);
  f("distractor_count", c.distractor_count);
  f("signal_to_noise", c.signal_to_noise);
  f("adverb_angle", c.adverb_angle);
  f("word_vector_scale", c.word_vector_scale);
  f("train_videos", c.train_videos);
  f("test_videos", c.test_videos);
  f("groups", c.groups);
  f("test_groups", c.test_groups);
  f("seed", c.seed);
}

template <class F>
void visit(EvalConfig& c, F&& f) {
  f("modality", c.modality);
  f("modality_split", c.modality_split);
  f("per_adverb", c.per_adverb);
  f("setting", c.setting);
  f("direction", c.direction);
}

template <class F>
void visit(GradCheckConfig& c, F&& f) {
  f("seed", c.seed);
  f("window", c.window);
  f("feature_dim", c.feature_dim);
  f("num_actions", c.num_actions);
  f("embed_dim", c.embed_dim);
  f("heads", c.heads);
  f("samples", c.samples);
  f("margin", c.margin);
  f("epsilon", c.epsilon);
  f("tolerance", c.tolerance);
  f("floor", c.floor);
}

template <class F>
void visit(PathsConfig& c, F&& f) {
  f("data", c.data);
  f("out", c.out);
  f("ckpt", c.ckpt);
}

// Enum <-> string through the per-type helpers.
std::string enum_name(ModifierKind v) { return to_string(v); }
std::string enum_name(AttentionKind v) { return to_string(v); }
std::string enum_name(QueryKind v) { return to_string(v); }
std::string enum_name(SoftmaxScale v) { return to_string(v); }
std::string enum_name(LossMode v) { return to_string(v); }
std::string enum_name(Modality v) { return to_string(v); }
std::string enum_name(Setting v) { return to_string(v); }
void enum_parse(const std::string& s, ModifierKind& v) { v = parse_modifier_kind(s); }
void enum_parse(const std::string& s, AttentionKind& v) { v = parse_attention_kind(s); }
void enum_parse(const std::string& s, QueryKind& v) { v = parse_query_kind(s); }
void enum_parse(const std::string& s, SoftmaxScale& v) { v = parse_softmax_scale(s); }
void enum_parse(const std::string& s, LossMode& v) { v = parse_loss_mode(s); }
void enum_parse(const std::string& s, Modality& v) { v = parse_modality(s); }
void enum_parse(const std::string& s, Setting& v) { v = parse_setting(s); }

template <class T>
json write_value(const T& v) {
  if constexpr (std::is_enum_v<T>) {
    return enum_name(v);
  } else if constexpr (std::is_floating_point_v<T>) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  } else {
    return v;
  }
}

template <class T>
void read_value(const json& j, const std::string& where, T& out) {
  auto bad = [&](const char* expected) {
    throw ConfigError(where + ": expected " + expected + ", got " + j.dump());
  };
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) bad("a boolean");
    out = j.get<bool>();
  } else if constexpr (std::is_enum_v<T>) {
    if (!j.is_string()) bad("a string");
    enum_parse(j.get<std::string>(), out);
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) bad("a string");
    out = j.get<std::string>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (j.is_string() && (j == "inf" || j == "-inf")) {
      out = (j == "inf" ? 1.0 : -1.0) * std::numeric_limits<T>::infinity();
    } else {
      if (!j.is_number()) bad("a number");
      out = j.get<T>();
    }
  } else if constexpr (std::is_signed_v<T>) {
    if (!j.is_number_integer()) bad("an integer");
    out = j.get<T>();
  } else {
    if (!j.is_number_unsigned()) bad("a non-negative integer");
    out = j.get<T>();
  }
}

template <class S>
json section_to_json(S c) {
  json j = json::object();
  visit(c, [&](const char* key, auto& v) { j[key] = write_value(v); });
  return j;
}

template <class S>
void section_from_json(const json& j, const std::string& where, S& c) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    visit(c, [&](const char* name, auto& field) {
      if (key != name) return;
      found = true;
      read_value(value, where + "." + key, field);
    });
    if (!found) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text,
                           const std::string& source) {
  const json j = parse_json(json_text, source);
  if (!j.is_object()) throw ConfigError(source + ": expected a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    const std::string where = source + ": " + key;
    if (key == "model") {
      section_from_json(value, where, c.model);
    } else if (key == "train") {
      section_from_json(value, where, c.train);
    } else if (key == "synth") {
      section_from_json(value, where, c.synth);
    } else if (key == "eval") {
      section_from_json(value, where, c.eval);
    } else if (key == "gradcheck") {
      section_from_json(value, where, c.gradcheck);
    } else if (key == "paths") {
      section_from_json(value, where, c.paths);
    } else {
      throw ConfigError(source + ": unknown section '" + key + "'");
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

std::string to_json(const RunConfig& c, int indent) {
  json j;
  j["model"] = section_to_json(c.model);
  j["train"] = section_to_json(c.train);
  j["synth"] = section_to_json(c.synth);
  j["eval"] = section_to_json(c.eval);
  j["gradcheck"] = section_to_json(c.gradcheck);
  j["paths"] = section_to_json(c.paths);
  return j.dump(indent);
}

std::string model_config_json(const ModelConfig& c) {
  return section_to_json(c).dump();
}

std::string train_config_json(const TrainConfig& c) {
  return section_to_json(c).dump();
}

ModelConfig parse_model_config(const std::string& json_text) {
  ModelConfig c;
  section_from_json(parse_json(json_text, "model"), "model", c);
  return c;
}

TrainConfig parse_train_config(const std::string& json_text) {
  TrainConfig c;
  section_from_json(parse_json(json_text, "train"), "train", c);
  return c;
}

}  // namespace actmod
