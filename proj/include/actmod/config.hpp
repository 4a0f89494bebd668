#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "actmod/eval.hpp"
#include "actmod/gradcheck.hpp"
#include "actmod/model.hpp"
#include "actmod/synth.hpp"
#include "actmod/training.hpp"

namespace actmod {

struct EvalConfig {
  Modality modality = Modality::both;
  std::size_t modality_split = 0;
  bool per_adverb = false;
  Setting setting = Setting::all;
  std::string direction = "v2a";  // v2a, a2v or v2act
};

struct PathsConfig {
  std::string data;
  std::string out;
  std::string ckpt;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  SynthConfig synth;
  EvalConfig eval;
  GradCheckConfig gradcheck;
  PathsConfig paths;
};

// JSON with optional sections model, train, synth, eval, gradcheck and paths;
// missing keys keep their defaults and unknown keys raise ConfigError.
RunConfig parse_run_config(const std::string& json_text,
                           const std::string& source = "config");
RunConfig load_run_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& c, int indent = 2);

// Single sections, used by the checkpoint header.
std::string model_config_json(const ModelConfig& c);
std::string train_config_json(const TrainConfig& c);
ModelConfig parse_model_config(const std::string& json_text);
TrainConfig parse_train_config(const std::string& json_text);

}  // namespace actmod
