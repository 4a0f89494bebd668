#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actmod/dataset.hpp"
#include "actmod/model.hpp"

namespace actmod {

// Candidates ordered by ascending distance; ties by ascending id.
struct Ranking {
  std::string query;
  std::vector<std::size_t> ids;
  std::vector<double> scores;
  std::vector<std::size_t> relevant;  // sorted ids

  bool is_relevant(std::size_t id) const;
  std::size_t relevant_count() const { return relevant.size(); }
};

Ranking make_ranking(std::string query, std::vector<std::size_t> ids,
                     std::vector<double> scores,
                     std::vector<std::size_t> relevant);

// Mean of precision@k over the ranks k of relevant hits; nullopt when the
// ranking has no relevant candidate.
std::optional<double> average_precision(const Ranking& r);

struct MapResult {
  double value = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  // rankings without relevant candidates
};
MapResult mean_average_precision(std::span<const Ranking> rankings);

// Fraction of two-candidate rankings whose top candidate is relevant.
double antonym_p_at_1(std::span<const Ranking> rankings);

enum class Setting : std::uint8_t { all, antonym };
enum class Modality : std::uint8_t { both, appearance, motion };
std::string to_string(Setting s);
std::string to_string(Modality m);
Setting parse_setting(const std::string& s);
Modality parse_modality(const std::string& s);

// Caches text-side embeddings (g(a) and O_m(g(a))) of a parameter set.
class RetrievalIndex {
 public:
  explicit RetrievalIndex(ModelParams& params);

  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }
  const Vector& action(std::size_t a) const { return actions_.at(a); }
  const Vector& modified(std::size_t m, std::size_t a) const;
  VideoOutput embed(const VideoSample& sample) const;

 private:
  ModelParams& params_;
  std::vector<Vector> actions_;
  std::vector<Vector> modified_;  // index m * A + a
};

Ranking rank_video_to_adverb(const RetrievalIndex& index,
                             const VideoSample& sample, const Vector& video,
                             Setting setting);
Ranking rank_video_to_adverb(ModelParams& params, const VideoSample& sample,
                             Setting setting);

// Query adverb m against videos, each embedded with its own action label.
// The Antonym setting keeps only videos labelled m or its antonym.
Ranking rank_adverb_to_video(const RetrievalIndex& index, std::size_t adverb,
                             std::span<const VideoSample> videos,
                             std::span<const Vector> embeddings,
                             Setting setting);
Ranking rank_adverb_to_video(ModelParams& params, std::size_t adverb,
                             std::span<const VideoSample> videos,
                             Setting setting);

Ranking rank_video_to_action(const RetrievalIndex& index,
                             const VideoSample& sample, const Vector& video);
Ranking rank_video_to_action(ModelParams& params, const VideoSample& sample);

struct AdverbRow {
  std::string adverb;
  std::size_t samples = 0;
  double v2a_antonym_p1 = 0.0;
  double v2a_all_map = 0.0;
  double a2v_antonym_ap = 0.0;
  double a2v_all_ap = 0.0;
};

struct LocalizationStats {
  std::size_t samples = 0;
  double mean_span_mass = 0.0;
  double mean_uniform_mass = 0.0;
  // Fraction of samples whose span mass is at least twice the uniform mass.
  double fraction_at_least_2x = 0.0;
};

struct EvalReport {
  std::string modality = "both";
  std::size_t samples = 0;
  double v2a_antonym_p1 = 0.0;
  double v2a_antonym_map = 0.0;
  double v2a_all_map = 0.0;
  double a2v_antonym_map = 0.0;
  double a2v_all_map = 0.0;
  double v2act_map = 0.0;
  std::vector<AdverbRow> per_adverb;
  std::optional<LocalizationStats> localization;
};

struct EvalOptions {
  Modality modality = Modality::both;
  // First `modality_split` feature dims are appearance, the rest motion;
  // 0 means half of the feature dimension.
  std::size_t modality_split = 0;
  bool per_adverb = true;
};

// Zeroes the feature dims outside the requested modality.
std::vector<VideoSample> mask_modality(std::vector<VideoSample> samples,
                                       Modality modality, std::size_t split);

// Attention mass on each sample's planted span (averaged over heads).
LocalizationStats localization(const RetrievalIndex& index,
                               std::span<const VideoSample> samples,
                               std::span<const GroundTruthSpan> spans);

EvalReport evaluate(ModelParams& params, std::span<const VideoSample> samples,
                    const EvalOptions& options = {},
                    std::span<const GroundTruthSpan> spans = {});

std::string format_report_table(const EvalReport& r);
std::string format_report_tsv(const EvalReport& r);

}  // namespace actmod
