#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "actmod/matrix.hpp"
#include "actmod/model.hpp"

namespace actmod {

// Per-second feature sequences, one S x D matrix per video.
class FeatureStore {
 public:
  FeatureStore() = default;
  explicit FeatureStore(std::size_t feature_dim) : dim_(feature_dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return videos_.size(); }
  bool contains(const std::string& id) const { return videos_.count(id) != 0; }
  void add(const std::string& id, Matrix features);
  const Matrix& features(const std::string& id) const;
  const std::map<std::string, Matrix>& videos() const { return videos_; }

  bool operator==(const FeatureStore&) const = default;

 private:
  std::size_t dim_ = 0;
  std::map<std::string, Matrix> videos_;
};

struct AnnotationRecord {
  std::string video_id;
  std::string action;
  std::string adverb;
  double timestamp = 0.0;
  std::string split = "train";
  // Grouping key for disjoint splits (task id); defaults to the video id.
  std::string group;

  bool operator==(const AnnotationRecord&) const = default;
};

struct Window {
  Matrix features;
  std::vector<bool> padded;
  std::int64_t start = 0;  // video second of row 0
};

// Rows floor(ts) - floor(T/2) ... floor(ts) + ceil(T/2) - 1; rows outside the
// video are zero and flagged as padding.
Window extract_window(const FeatureStore& store, const std::string& video_id,
                      double timestamp, std::size_t window);

struct SplitPolicy {
  // Exact number of test groups; when unset, test_fraction of the groups.
  std::optional<std::size_t> test_groups;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct SplitResult {
  std::vector<AnnotationRecord> train;
  std::vector<AnnotationRecord> test;
  std::vector<std::string> test_group_ids;
};

// Partitions records so that every group lands entirely on one side. The
// returned records carry the matching split tag.
SplitResult split_dataset(const std::vector<AnnotationRecord>& records,
                          const SplitPolicy& policy);

// Picks k of the given groups for testing, deterministically from the seed.
std::vector<std::string> choose_test_groups(std::vector<std::string> groups,
                                            std::size_t k, std::uint64_t seed);

struct LoadWarnings {
  std::vector<std::string> messages;
};

// Feature store on disk: a directory holding index.tsv plus one binary file
// per video (magic "AMFS", version, id, S, D, then S*D little-endian f64).
void save_feature_store(const FeatureStore& store,
                        const std::filesystem::path& dir);
FeatureStore load_feature_store(const std::filesystem::path& dir);
void write_feature_file(const std::filesystem::path& path,
                        const std::string& video_id, const Matrix& features);
std::pair<std::string, Matrix> read_feature_file(
    const std::filesystem::path& path);

// Annotations: tab-separated video_id, action, adverb, timestamp, split and an
// optional group column; '#' starts a comment line.
void save_annotations(const std::vector<AnnotationRecord>& records,
                      const std::filesystem::path& path,
                      const std::vector<std::string>& header_lines = {});
std::vector<AnnotationRecord> load_annotations(
    const std::filesystem::path& path, LoadWarnings* warnings = nullptr);
std::string format_annotation(const AnnotationRecord& r, bool with_group);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// "token v1 v2 ... vn" per line.
struct WordVectors {
  std::vector<std::string> tokens;
  Matrix vectors;
};
WordVectors load_word_vectors(const std::filesystem::path& path);
void save_word_vectors(const WordVectors& wv, const std::filesystem::path& path);

std::vector<std::pair<std::string, std::string>> load_antonym_pairs(
    const std::filesystem::path& path);
void save_antonym_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::filesystem::path& path);

// Per-video planted truth of synthetic datasets.
struct GroundTruthSpan {
  std::string video_id;
  std::int64_t start = 0;  // first second of the relevant span
  std::int64_t end = 0;    // one past the last second
  bool label_present = true;

  bool operator==(const GroundTruthSpan&) const = default;
};

void save_ground_truth(const std::vector<GroundTruthSpan>& spans,
                       const std::filesystem::path& path);
std::vector<GroundTruthSpan> load_ground_truth(
    const std::filesystem::path& path);

// Everything train/eval need: features, annotations and vocabularies.
struct Dataset {
  FeatureStore store;
  std::vector<AnnotationRecord> records;
  ActionVocabulary actions;
  AdverbVocabulary adverbs;
  std::vector<GroundTruthSpan> ground_truth;  // empty for real data

  // Checks that every record resolves against the store and vocabularies and
  // that no (video, timestamp, action, adverb) record repeats.
  void validate() const;
  std::vector<AnnotationRecord> split(const std::string& tag) const;
  const GroundTruthSpan* truth(const std::string& video_id) const;
};

// Directory layout: features/, annotations.tsv, actions.vec, antonyms.tsv,
// optional adverbs.vec and ground_truth.tsv.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir,
                     LoadWarnings* warnings = nullptr);

VideoSample make_sample(const Dataset& ds, const AnnotationRecord& r,
                        std::size_t window);
std::vector<VideoSample> make_samples(const Dataset& ds,
                                      const std::vector<AnnotationRecord>& rs,
                                      std::size_t window);

}  // namespace actmod
