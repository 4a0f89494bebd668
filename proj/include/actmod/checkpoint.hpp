#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "actmod/training.hpp"

namespace actmod {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig train;
  TrainState state;
};

// CRC-32 over vocabulary names, antonym links and word vectors.
std::uint32_t vocabulary_digest(const ActionVocabulary& actions);
std::uint32_t vocabulary_digest(const AdverbVocabulary& adverbs);

// Layout (little endian): "AMCK", u32 version, model and train config as
// JSON strings, the two vocabulary digests, both vocabularies, epoch, RNG
// state, the training log without wall times, every parameter with its Adam
// moments and step count, and a trailing CRC-32 of all preceding bytes.
std::string encode_checkpoint(const TrainConfig& train, const TrainState& state);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const TrainConfig& train, const TrainState& state,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace actmod
