#include "actmod/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "actmod/binary_io.hpp"
#include "actmod/errors.hpp"
#include "actmod/text.hpp"

namespace fs = std::filesystem;

namespace actmod {

namespace {

constexpr char kFeatureMagic[4] = {'A', 'M', 'F', 'S'};
constexpr std::uint32_t kFeatureVersion = 1;

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

}  // namespace

void FeatureStore::add(const std::string& id, Matrix features) {
  if (videos_.empty() && dim_ == 0) dim_ = features.cols();
  if (features.cols() != dim_) {
    throw DimensionError("video '" + id + "' has feature dimension " +
                         std::to_string(features.cols()) + ", store uses " +
                         std::to_string(dim_));
  }
  if (!videos_.emplace(id, std::move(features)).second)
    throw DataError("duplicate video '" + id + "' in feature store");
}

const Matrix& FeatureStore::features(const std::string& id) const {
  auto it = videos_.find(id);
  if (it == videos_.end()) throw LookupError("unknown video '" + id + "'");
  return it->second;
}

Window extract_window(const FeatureStore& store, const std::string& video_id,
                      double timestamp, std::size_t window) {
  if (window == 0) throw ContractError("window length must be positive");
  if (!std::isfinite(timestamp) || timestamp < 0.0)
    throw DomainError("timestamp must be finite and non-negative");
  const Matrix& video = store.features(video_id);
  const auto centre = static_cast<std::int64_t>(std::floor(timestamp));
  const auto half = static_cast<std::int64_t>(window / 2);
  Window w;
  w.start = centre - half;
  w.features = Matrix(window, store.dim());
  w.padded.assign(window, true);
  const auto length = static_cast<std::int64_t>(video.rows());
  for (std::size_t r = 0; r < window; ++r) {
    const std::int64_t t = w.start + static_cast<std::int64_t>(r);
    if (t < 0 || t >= length) continue;
    const auto src = video.row(static_cast<std::size_t>(t));
    std::copy(src.begin(), src.end(), w.features.row(r).begin());
    w.padded[r] = false;
  }
  return w;
}

std::vector<std::string> choose_test_groups(std::vector<std::string> groups,
                                            std::size_t k, std::uint64_t seed) {
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  if (groups.size() < 2)
    throw DataError("cannot split a dataset with fewer than two groups");
  if (k == 0 || k >= groups.size()) {
    throw DataError("requested " + std::to_string(k) + " test groups out of " +
                    std::to_string(groups.size()));
  }
  Rng rng(seed);
  // Fisher-Yates with explicit draws keeps the order independent of the
  // standard library's shuffle implementation.
  for (std::size_t i = groups.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(groups[i], groups[pick(rng)]);
  }
  groups.resize(k);
  std::sort(groups.begin(), groups.end());
  return groups;
}

SplitResult split_dataset(const std::vector<AnnotationRecord>& records,
                          const SplitPolicy& policy) {
  std::vector<std::string> groups;
  for (const auto& r : records)
    groups.push_back(r.group.empty() ? r.video_id : r.group);
  std::set<std::string> unique(groups.begin(), groups.end());
  if (unique.size() < 2)
    throw DataError("cannot split a dataset with fewer than two groups");
  std::size_t k = 0;
  if (policy.test_groups) {
    k = *policy.test_groups;
  } else {
    if (!(policy.test_fraction > 0.0 && policy.test_fraction < 1.0))
      throw ConfigError("test_fraction must lie in (0, 1)");
    const double want = policy.test_fraction * static_cast<double>(unique.size());
    k = static_cast<std::size_t>(std::llround(want));
    k = std::clamp<std::size_t>(k, 1, unique.size() - 1);
  }
  SplitResult out;
  out.test_group_ids = choose_test_groups(
      std::vector<std::string>(unique.begin(), unique.end()), k, policy.seed);
  const std::set<std::string> test(out.test_group_ids.begin(),
                                   out.test_group_ids.end());
  for (std::size_t i = 0; i < records.size(); ++i) {
    AnnotationRecord r = records[i];
    if (test.count(groups[i])) {
      r.split = "test";
      out.test.push_back(std::move(r));
    } else {
      r.split = "train";
      out.train.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature store codec

void write_feature_file(const fs::path& path, const std::string& video_id,
                        const Matrix& features) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  os.write(kFeatureMagic, 4);
  binary::write_u32(os, kFeatureVersion);
  binary::write_string(os, video_id);
  binary::write_u64(os, features.rows());
  binary::write_u64(os, features.cols());
  for (double x : features.values()) binary::write_f64(os, x);
  if (!os) throw DataError("write failed for '" + path.string() + "'");
}

std::pair<std::string, Matrix> read_feature_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path.string() + "'");
  char magic[4];
  binary::read_exact(is, magic, 4, "feature magic");
  if (!std::equal(magic, magic + 4, kFeatureMagic))
    throw CorruptionError("'" + path.string() + "' is not a feature file");
  const std::uint32_t version = binary::read_u32(is, "feature version");
  if (version != kFeatureVersion) {
    throw DataError("'" + path.string() + "' has feature format version " +
                    std::to_string(version) + ", expected " +
                    std::to_string(kFeatureVersion));
  }
  std::string id = binary::read_string(is, 1 << 16, "video id");
  const std::uint64_t rows = binary::read_u64(is, "row count");
  const std::uint64_t cols = binary::read_u64(is, "feature dimension");
  if (rows > (1u << 24) || cols > (1u << 20))
    throw CorruptionError("'" + path.string() + "' has implausible shape");
  Matrix m(rows, cols);
  for (double& x : m.values()) x = binary::read_f64(is, "feature values");
  if (!m.all_finite())
    throw DataError("'" + path.string() + "' holds non-finite features");
  if (is.peek() != std::char_traits<char>::eof())
    throw CorruptionError("trailing bytes in '" + path.string() + "'");
  return {std::move(id), std::move(m)};
}

void save_feature_store(const FeatureStore& store, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream index(dir / "index.tsv", std::ios::trunc);
  if (!index) throw DataError("cannot write index in '" + dir.string() + "'");
  index << "# actmod feature index v1\n";
  index << "# video_id\tfile\tseconds\tdim\n";
  std::size_t n = 0;
  for (const auto& [id, feats] : store.videos()) {
    const std::string file = "v" + std::to_string(n++) + ".feat";
    write_feature_file(dir / file, id, feats);
    index << id << '\t' << file << '\t' << feats.rows() << '\t' << feats.cols()
          << '\n';
  }
}

FeatureStore load_feature_store(const fs::path& dir) {
  const fs::path index_path = dir / "index.tsv";
  std::ifstream index(index_path);
  if (!index) throw DataError("cannot open '" + index_path.string() + "'");
  FeatureStore store;
  std::optional<std::size_t> dim;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(index, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() != 4)
      throw DataError(where(index_path, line_no) + ": expected 4 columns");
    const auto rows = text::parse_size(cols[2], where(index_path, line_no));
    const auto d = text::parse_size(cols[3], where(index_path, line_no));
    if (dim && *dim != d) {
      throw DataError(where(index_path, line_no) + ": feature dimension " +
                      std::to_string(d) + " differs from " +
                      std::to_string(*dim));
    }
    dim = d;
    auto [id, feats] = read_feature_file(dir / cols[1]);
    if (id != cols[0] || feats.rows() != rows || feats.cols() != d) {
      throw DataError(where(index_path, line_no) +
                      ": index entry does not match '" + cols[1] + "'");
    }
    if (store.size() == 0) store = FeatureStore(d);
    store.add(id, std::move(feats));
  }
  return store;
}

// ---------------------------------------------------------------------------
// Text formats

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_annotation(const AnnotationRecord& r, bool with_group) {
  std::string s = r.video_id + '\t' + r.action + '\t' + r.adverb + '\t' +
                  format_double(r.timestamp) + '\t' + r.split;
  if (with_group) s += '\t' + r.group;
  return s;
}

void save_annotations(const std::vector<AnnotationRecord>& records,
                      const fs::path& path,
                      const std::vector<std::string>& header_lines) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  const bool with_group = std::any_of(
      records.begin(), records.end(),
      [](const AnnotationRecord& r) { return !r.group.empty(); });
  for (const auto& h : header_lines) os << "# " << h << '\n';
  os << "# video_id\taction\tadverb\ttimestamp\tsplit"
     << (with_group ? "\tgroup" : "") << '\n';
  for (const auto& r : records) os << format_annotation(r, with_group) << '\n';
  if (!os) throw DataError("write failed for '" + path.string() + "'");
}

std::vector<AnnotationRecord> load_annotations(const fs::path& path,
                                               LoadWarnings* warnings) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path.string() + "'");
  std::vector<AnnotationRecord> out;
  std::set<std::tuple<std::string, double, std::string, std::string>> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() != 5 && cols.size() != 6) {
      throw DataError(where(path, line_no) + ": expected 5 or 6 columns, got " +
                      std::to_string(cols.size()));
    }
    AnnotationRecord r;
    r.video_id = cols[0];
    r.action = cols[1];
    r.adverb = cols[2];
    r.timestamp = text::parse_double(cols[3], where(path, line_no));
    r.split = cols[4];
    if (cols.size() == 6) r.group = cols[5];
    if (r.video_id.empty() || r.action.empty() || r.adverb.empty())
      throw DataError(where(path, line_no) + ": empty field");
    if (!(r.timestamp >= 0.0))
      throw DataError(where(path, line_no) + ": negative timestamp");
    if (!seen.emplace(r.video_id, r.timestamp, r.action, r.adverb).second)
      throw DataError(where(path, line_no) + ": duplicate record");
    out.push_back(std::move(r));
  }
  if (out.empty() && warnings)
    warnings->messages.push_back("no annotation records in '" + path.string() +
                                 "'");
  return out;
}

WordVectors load_word_vectors(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path.string() + "'");
  WordVectors wv;
  std::vector<double> values;
  std::optional<std::size_t> dim;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto cols = text::split_whitespace(line);
    if (cols.size() < 2)
      throw DataError(where(path, line_no) + ": token without vector");
    if (dim && *dim != cols.size() - 1) {
      throw DataError(where(path, line_no) + ": vector of length " +
                      std::to_string(cols.size() - 1) + ", expected " +
                      std::to_string(*dim));
    }
    dim = cols.size() - 1;
    wv.tokens.push_back(cols[0]);
    for (std::size_t i = 1; i < cols.size(); ++i)
      values.push_back(text::parse_double(cols[i], where(path, line_no)));
  }
  wv.vectors = Matrix(wv.tokens.size(), dim.value_or(0), std::move(values));
  return wv;
}

void save_word_vectors(const WordVectors& wv, const fs::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < wv.tokens.size(); ++i) {
    os << wv.tokens[i];
    for (double x : wv.vectors.row(i)) os << ' ' << format_double(x);
    os << '\n';
  }
}

std::vector<std::pair<std::string, std::string>> load_antonym_pairs(
    const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path.string() + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto cols = text::split_whitespace(line);
    if (cols.size() != 2)
      throw DataError(where(path, line_no) + ": expected an adverb pair");
    out.emplace_back(cols[0], cols[1]);
  }
  return out;
}

void save_antonym_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const fs::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  for (const auto& [a, b] : pairs) os << a << '\t' << b << '\n';
}

void save_ground_truth(const std::vector<GroundTruthSpan>& spans,
                       const fs::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  os << "# video_id\tspan_start\tspan_end\tlabel_present\n";
  for (const auto& s : spans) {
    os << s.video_id << '\t' << s.start << '\t' << s.end << '\t'
       << (s.label_present ? 1 : 0) << '\n';
  }
}

std::vector<GroundTruthSpan> load_ground_truth(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path.string() + "'");
  std::vector<GroundTruthSpan> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto cols = text::split(line, '\t');
    if (cols.size() != 4)
      throw DataError(where(path, line_no) + ": expected 4 columns");
    GroundTruthSpan s;
    s.video_id = cols[0];
    s.start = text::parse_int(cols[1], where(path, line_no));
    s.end = text::parse_int(cols[2], where(path, line_no));
    s.label_present = text::parse_int(cols[3], where(path, line_no)) != 0;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset

void Dataset::validate() const {
  std::set<std::tuple<std::string, double, std::string, std::string>> seen;
  for (const auto& r : records) {
    if (!store.contains(r.video_id))
      throw DataError("annotation refers to unknown video '" + r.video_id + "'");
    if (!actions.contains(r.action))
      throw DataError("annotation uses unknown action '" + r.action + "'");
    if (!adverbs.contains(r.adverb))
      throw DataError("annotation uses unknown adverb '" + r.adverb + "'");
    if (!seen.emplace(r.video_id, r.timestamp, r.action, r.adverb).second) {
      throw DataError("duplicate record for video '" + r.video_id + "' at " +
                      format_double(r.timestamp));
    }
  }
}

std::vector<AnnotationRecord> Dataset::split(const std::string& tag) const {
  std::vector<AnnotationRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const AnnotationRecord& r) { return r.split == tag; });
  return out;
}

const GroundTruthSpan* Dataset::truth(const std::string& video_id) const {
  for (const auto& g : ground_truth)
    if (g.video_id == video_id) return &g;
  return nullptr;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  save_feature_store(ds.store, dir / "features");
  save_annotations(ds.records, dir / "annotations.tsv");
  save_word_vectors({ds.actions.names(), ds.actions.vectors()},
                    dir / "actions.vec");
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t m = 0; m < ds.adverbs.size(); ++m) {
    if (ds.adverbs.antonym(m) > m)
      pairs.emplace_back(ds.adverbs.name(m),
                         ds.adverbs.name(ds.adverbs.antonym(m)));
  }
  save_antonym_pairs(pairs, dir / "antonyms.tsv");
  if (ds.adverbs.has_vectors())
    save_word_vectors({ds.adverbs.names(), ds.adverbs.vectors()},
                      dir / "adverbs.vec");
  if (!ds.ground_truth.empty())
    save_ground_truth(ds.ground_truth, dir / "ground_truth.tsv");
}

Dataset load_dataset(const fs::path& dir, LoadWarnings* warnings) {
  if (!fs::is_directory(dir))
    throw DataError("dataset directory '" + dir.string() + "' not found");
  Dataset ds;
  ds.store = load_feature_store(dir / "features");
  ds.records = load_annotations(dir / "annotations.tsv", warnings);
  auto actions = load_word_vectors(dir / "actions.vec");
  ds.actions = ActionVocabulary(std::move(actions.tokens),
                                std::move(actions.vectors));
  const auto pairs = load_antonym_pairs(dir / "antonyms.tsv");
  AdverbVocabulary adverbs = AdverbVocabulary::from_pairs(pairs);
  if (fs::exists(dir / "adverbs.vec")) {
    // Reorder the vector rows to the pair-derived adverb ids.
    auto wv = load_word_vectors(dir / "adverbs.vec");
    Matrix ordered(adverbs.size(), wv.vectors.cols());
    std::vector<bool> found(adverbs.size(), false);
    for (std::size_t i = 0; i < wv.tokens.size(); ++i) {
      if (!adverbs.contains(wv.tokens[i])) continue;
      const std::size_t id = adverbs.id(wv.tokens[i]);
      const auto src = wv.vectors.row(i);
      std::copy(src.begin(), src.end(), ordered.row(id).begin());
      found[id] = true;
    }
    if (std::all_of(found.begin(), found.end(), [](bool b) { return b; })) {
      adverbs = AdverbVocabulary(adverbs.names(), adverbs.antonyms(),
                                 std::move(ordered));
    } else if (warnings) {
      warnings->messages.push_back(
          "adverbs.vec does not cover every adverb; ignoring it");
    }
  }
  ds.adverbs = std::move(adverbs);
  if (fs::exists(dir / "ground_truth.tsv"))
    ds.ground_truth = load_ground_truth(dir / "ground_truth.tsv");
  ds.validate();
  return ds;
}

VideoSample make_sample(const Dataset& ds, const AnnotationRecord& r,
                        std::size_t window) {
  Window w = extract_window(ds.store, r.video_id, r.timestamp, window);
  VideoSample s;
  s.features = std::move(w.features);
  s.padded = std::move(w.padded);
  s.window_start = w.start;
  s.action = ds.actions.id(r.action);
  s.adverb = ds.adverbs.id(r.adverb);
  s.video_id = r.video_id;
  return s;
}

std::vector<VideoSample> make_samples(const Dataset& ds,
                                      const std::vector<AnnotationRecord>& rs,
                                      std::size_t window) {
  std::vector<VideoSample> out;
  out.reserve(rs.size());
  for (const auto& r : rs) out.push_back(make_sample(ds, r, window));
  return out;
}

}  // namespace actmod
