#include "actmod/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "actmod/errors.hpp"

namespace actmod {

bool Ranking::is_relevant(std::size_t id) const {
  return std::binary_search(relevant.begin(), relevant.end(), id);
}

Ranking make_ranking(std::string query, std::vector<std::size_t> ids,
                     std::vector<double> scores,
                     std::vector<std::size_t> relevant) {
  if (ids.size() != scores.size())
    throw DimensionError("ranking: ids and scores differ in length");
  if (ids.empty()) throw ContractError("ranking over an empty candidate set");
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return ids[a] < ids[b];
  });
  Ranking r;
  r.query = std::move(query);
  r.ids.reserve(ids.size());
  r.scores.reserve(ids.size());
  for (std::size_t i : order) {
    r.ids.push_back(ids[i]);
    r.scores.push_back(scores[i]);
  }
  std::sort(relevant.begin(), relevant.end());
  relevant.erase(std::unique(relevant.begin(), relevant.end()), relevant.end());
  r.relevant = std::move(relevant);
  return r;
}

std::optional<double> average_precision(const Ranking& r) {
  double hits = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < r.ids.size(); ++k) {
    if (!r.is_relevant(r.ids[k])) continue;
    hits += 1.0;
    sum += hits / static_cast<double>(k + 1);
  }
  if (hits == 0.0) return std::nullopt;
  return sum / hits;
}

MapResult mean_average_precision(std::span<const Ranking> rankings) {
  MapResult out;
  double sum = 0.0;
  for (const Ranking& r : rankings) {
    if (auto ap = average_precision(r)) {
      sum += *ap;
      ++out.used;
    } else {
      ++out.excluded;
    }
  }
  if (out.used > 0) out.value = sum / static_cast<double>(out.used);
  return out;
}

double antonym_p_at_1(std::span<const Ranking> rankings) {
  if (rankings.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Ranking& r : rankings) {
    if (r.ids.size() != 2) {
      throw ContractError("antonym P@1 needs exactly two candidates, got " +
                          std::to_string(r.ids.size()));
    }
    if (r.is_relevant(r.ids.front())) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rankings.size());
}

std::string to_string(Setting s) {
  return s == Setting::all ? "all" : "antonym";
}

std::string to_string(Modality m) {
  switch (m) {
    case Modality::both:
      return "both";
    case Modality::appearance:
      return "appearance";
    case Modality::motion:
      return "motion";
  }
  return "?";
}

Setting parse_setting(const std::string& s) {
  if (s == "all") return Setting::all;
  if (s == "antonym") return Setting::antonym;
  throw ConfigError("unknown setting '" + s + "'");
}

Modality parse_modality(const std::string& s) {
  if (s == "both") return Modality::both;
  if (s == "appearance") return Modality::appearance;
  if (s == "motion") return Modality::motion;
  throw ConfigError("unknown modality '" + s + "'");
}

RetrievalIndex::RetrievalIndex(ModelParams& params) : params_(params) {
  Tape tape;
  ForwardPass fp(tape, params);
  const std::size_t A = params.actions().size();
  const std::size_t M = params.adverbs().size();
  for (std::size_t a = 0; a < A; ++a)
    actions_.push_back(tape.value(fp.action(a)).to_vector());
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t a = 0; a < A; ++a)
      modified_.push_back(tape.value(fp.modified_action(m, a)).to_vector());
}

const Vector& RetrievalIndex::modified(std::size_t m, std::size_t a) const {
  const std::size_t A = params_.actions().size();
  if (m >= params_.adverbs().size() || a >= A)
    throw LookupError("modified action (" + std::to_string(m) + ", " +
                      std::to_string(a) + ") out of range");
  return modified_[m * A + a];
}

VideoOutput RetrievalIndex::embed(const VideoSample& sample) const {
  return embed_video(params_, sample);
}

Ranking rank_video_to_adverb(const RetrievalIndex& index,
                             const VideoSample& sample, const Vector& video,
                             Setting setting) {
  const auto& adverbs = index.params().adverbs();
  if (sample.adverb >= adverbs.size())
    throw LookupError("unknown adverb id " + std::to_string(sample.adverb));
  std::vector<std::size_t> candidates;
  if (setting == Setting::all) {
    candidates.resize(adverbs.size());
    std::iota(candidates.begin(), candidates.end(), 0);
  } else {
    candidates = {sample.adverb, adverbs.antonym(sample.adverb)};
  }
  std::vector<double> scores;
  for (std::size_t m : candidates)
    scores.push_back(
        euclidean_distance(video, index.modified(m, sample.action)));
  return make_ranking(sample.video_id, std::move(candidates), std::move(scores),
                      {sample.adverb});
}

Ranking rank_video_to_adverb(ModelParams& params, const VideoSample& sample,
                             Setting setting) {
  RetrievalIndex index(params);
  return rank_video_to_adverb(index, sample, index.embed(sample).embedding,
                              setting);
}

Ranking rank_adverb_to_video(const RetrievalIndex& index, std::size_t adverb,
                             std::span<const VideoSample> videos,
                             std::span<const Vector> embeddings,
                             Setting setting) {
  if (videos.empty()) throw ContractError("adverb-to-video over no videos");
  if (embeddings.size() != videos.size())
    throw DimensionError("one embedding per video required");
  const auto& adverbs = index.params().adverbs();
  const std::size_t antonym = adverbs.antonym(adverb);
  std::vector<std::size_t> ids;
  std::vector<double> scores;
  std::vector<std::size_t> relevant;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    const VideoSample& v = videos[i];
    if (setting == Setting::antonym && v.adverb != adverb && v.adverb != antonym)
      continue;
    ids.push_back(i);
    scores.push_back(
        euclidean_distance(index.modified(adverb, v.action), embeddings[i]));
    if (v.adverb == adverb) relevant.push_back(i);
  }
  if (ids.empty()) throw ContractError("adverb-to-video: empty candidate set");
  return make_ranking(adverbs.name(adverb), std::move(ids), std::move(scores),
                      std::move(relevant));
}

Ranking rank_adverb_to_video(ModelParams& params, std::size_t adverb,
                             std::span<const VideoSample> videos,
                             Setting setting) {
  RetrievalIndex index(params);
  std::vector<Vector> emb;
  for (const auto& v : videos) emb.push_back(index.embed(v).embedding);
  return rank_adverb_to_video(index, adverb, videos, emb, setting);
}

Ranking rank_video_to_action(const RetrievalIndex& index,
                             const VideoSample& sample, const Vector& video) {
  const std::size_t A = index.params().actions().size();
  std::vector<std::size_t> ids(A);
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<double> scores;
  for (std::size_t a = 0; a < A; ++a)
    scores.push_back(euclidean_distance(video, index.action(a)));
  return make_ranking(sample.video_id, std::move(ids), std::move(scores),
                      {sample.action});
}

Ranking rank_video_to_action(ModelParams& params, const VideoSample& sample) {
  RetrievalIndex index(params);
  return rank_video_to_action(index, sample, index.embed(sample).embedding);
}

std::vector<VideoSample> mask_modality(std::vector<VideoSample> samples,
                                       Modality modality, std::size_t split) {
  if (modality == Modality::both) return samples;
  for (auto& s : samples) {
    const std::size_t D = s.features.cols();
    const std::size_t cut = split == 0 ? D / 2 : split;
    if (cut > D) throw ConfigError("modality split beyond feature dimension");
    for (std::size_t r = 0; r < s.features.rows(); ++r) {
      auto row = s.features.row(r);
      // appearance keeps [0, cut), motion keeps [cut, D)
      const std::size_t lo = modality == Modality::appearance ? cut : 0;
      const std::size_t hi = modality == Modality::appearance ? D : cut;
      for (std::size_t c = lo; c < hi; ++c) row[c] = 0.0;
    }
  }
  return samples;
}

LocalizationStats localization(const RetrievalIndex& index,
                               std::span<const VideoSample> samples,
                               std::span<const GroundTruthSpan> spans) {
  std::map<std::string, const GroundTruthSpan*> by_id;
  for (const auto& s : spans) by_id[s.video_id] = &s;
  LocalizationStats out;
  std::size_t good = 0;
  for (const auto& sample : samples) {
    auto it = by_id.find(sample.video_id);
    if (it == by_id.end() || !it->second->label_present) continue;
    const GroundTruthSpan& span = *it->second;
    const VideoOutput v = index.embed(sample);
    if (v.weights.empty()) continue;
    const std::size_t T = sample.padded.size();
    std::vector<double> w(T, 0.0);
    for (const Vector& head : v.weights)
      for (std::size_t t = 0; t < T; ++t)
        w[t] += head[t] / static_cast<double>(v.weights.size());
    double mass = 0.0;
    std::size_t in_span = 0;
    for (std::size_t t = 0; t < T; ++t) {
      const std::int64_t sec = sample.window_start + static_cast<std::int64_t>(t);
      if (sample.padded[t] || sec < span.start || sec >= span.end) continue;
      mass += w[t];
      ++in_span;
    }
    const double uniform = static_cast<double>(in_span) /
                           static_cast<double>(sample.unpadded_rows());
    out.mean_span_mass += mass;
    out.mean_uniform_mass += uniform;
    if (in_span > 0 && mass >= 2.0 * uniform) ++good;
    ++out.samples;
  }
  if (out.samples > 0) {
    const double n = static_cast<double>(out.samples);
    out.mean_span_mass /= n;
    out.mean_uniform_mass /= n;
    out.fraction_at_least_2x = static_cast<double>(good) / n;
  }
  return out;
}

EvalReport evaluate(ModelParams& params, std::span<const VideoSample> input,
                    const EvalOptions& options,
                    std::span<const GroundTruthSpan> spans) {
  const std::vector<VideoSample> samples = mask_modality(
      std::vector<VideoSample>(input.begin(), input.end()), options.modality,
      options.modality_split);
  RetrievalIndex index(params);
  const std::size_t M = params.adverbs().size();
  EvalReport report;
  report.modality = to_string(options.modality);
  report.samples = samples.size();
  if (samples.empty()) return report;

  std::vector<Vector> emb;
  emb.reserve(samples.size());
  for (const auto& s : samples) emb.push_back(index.embed(s).embedding);

  std::vector<Ranking> v2a_all, v2a_ant, v2act;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    v2a_all.push_back(rank_video_to_adverb(index, samples[i], emb[i], Setting::all));
    v2a_ant.push_back(
        rank_video_to_adverb(index, samples[i], emb[i], Setting::antonym));
    v2act.push_back(rank_video_to_action(index, samples[i], emb[i]));
  }
  report.v2a_all_map = mean_average_precision(v2a_all).value;
  report.v2a_antonym_map = mean_average_precision(v2a_ant).value;
  report.v2a_antonym_p1 = antonym_p_at_1(v2a_ant);
  report.v2act_map = mean_average_precision(v2act).value;

  std::vector<Ranking> a2v_all, a2v_ant;
  std::vector<std::optional<double>> a2v_all_ap(M), a2v_ant_ap(M);
  for (std::size_t m = 0; m < M; ++m) {
    a2v_all.push_back(rank_adverb_to_video(index, m, samples, emb, Setting::all));
    a2v_all_ap[m] = average_precision(a2v_all.back());
    const std::size_t anti = params.adverbs().antonym(m);
    const bool any = std::any_of(samples.begin(), samples.end(), [&](auto& s) {
      return s.adverb == m || s.adverb == anti;
    });
    if (any) {
      a2v_ant.push_back(
          rank_adverb_to_video(index, m, samples, emb, Setting::antonym));
      a2v_ant_ap[m] = average_precision(a2v_ant.back());
    }
  }
  report.a2v_all_map = mean_average_precision(a2v_all).value;
  report.a2v_antonym_map = mean_average_precision(a2v_ant).value;

  if (options.per_adverb) {
    for (std::size_t m = 0; m < M; ++m) {
      AdverbRow row;
      row.adverb = params.adverbs().name(m);
      std::vector<Ranking> ant, all;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].adverb != m) continue;
        ant.push_back(v2a_ant[i]);
        all.push_back(v2a_all[i]);
      }
      row.samples = ant.size();
      if (!ant.empty()) {
        row.v2a_antonym_p1 = antonym_p_at_1(ant);
        row.v2a_all_map = mean_average_precision(all).value;
      }
      row.a2v_all_ap = a2v_all_ap[m].value_or(0.0);
      row.a2v_antonym_ap = a2v_ant_ap[m].value_or(0.0);
      report.per_adverb.push_back(std::move(row));
    }
  }
  if (!spans.empty()) report.localization = localization(index, samples, spans);
  return report;
}

namespace {

std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string format_report_table(const EvalReport& r) {
  std::ostringstream os;
  os << "modality: " << r.modality << "   samples: " << r.samples << "\n\n";
  os << std::left << std::setw(18) << "" << std::setw(12) << "Antonym"
     << std::setw(12) << "All" << "\n";
  os << std::setw(18) << "video-to-adverb" << std::setw(12)
     << fixed(r.v2a_antonym_p1) << std::setw(12) << fixed(r.v2a_all_map)
     << "(Antonym: P@1, All: mAP)\n";
  os << std::setw(18) << "adverb-to-video" << std::setw(12)
     << fixed(r.a2v_antonym_map) << std::setw(12) << fixed(r.a2v_all_map)
     << "(mAP)\n";
  os << std::setw(18) << "video-to-action" << std::setw(12) << "" << std::setw(12)
     << fixed(r.v2act_map) << "(mAP)\n";
  if (!r.per_adverb.empty()) {
    os << "\n"
       << std::setw(14) << "adverb" << std::setw(9) << "samples" << std::setw(12)
       << "v2a P@1" << std::setw(12) << "v2a mAP" << std::setw(12) << "a2v ant"
       << std::setw(12) << "a2v all" << "\n";
    for (const auto& row : r.per_adverb) {
      os << std::setw(14) << row.adverb << std::setw(9) << row.samples
         << std::setw(12) << fixed(row.v2a_antonym_p1) << std::setw(12)
         << fixed(row.v2a_all_map) << std::setw(12) << fixed(row.a2v_antonym_ap)
         << std::setw(12) << fixed(row.a2v_all_ap) << "\n";
    }
  }
  if (r.localization) {
    const auto& l = *r.localization;
    os << "\nattention on planted span: mean mass " << fixed(l.mean_span_mass)
       << " vs uniform " << fixed(l.mean_uniform_mass) << ", >=2x on "
       << fixed(l.fraction_at_least_2x) << " of " << l.samples << " videos\n";
  }
  return os.str();
}

std::string format_report_tsv(const EvalReport& r) {
  std::ostringstream os;
  os << "section\tname\tmetric\tvalue\n";
  auto put = [&](const std::string& sec, const std::string& name,
                 const std::string& metric, double v) {
    os << sec << '\t' << name << '\t' << metric << '\t' << format_double(v)
       << '\n';
  };
  const std::string all = "overall";
  put(all, r.modality, "samples", static_cast<double>(r.samples));
  put(all, r.modality, "v2a_antonym_p1", r.v2a_antonym_p1);
  put(all, r.modality, "v2a_antonym_map", r.v2a_antonym_map);
  put(all, r.modality, "v2a_all_map", r.v2a_all_map);
  put(all, r.modality, "a2v_antonym_map", r.a2v_antonym_map);
  put(all, r.modality, "a2v_all_map", r.a2v_all_map);
  put(all, r.modality, "v2act_map", r.v2act_map);
  for (const auto& row : r.per_adverb) {
    put("adverb", row.adverb, "samples", static_cast<double>(row.samples));
    put("adverb", row.adverb, "v2a_antonym_p1", row.v2a_antonym_p1);
    put("adverb", row.adverb, "v2a_all_map", row.v2a_all_map);
    put("adverb", row.adverb, "a2v_antonym_ap", row.a2v_antonym_ap);
    put("adverb", row.adverb, "a2v_all_ap", row.a2v_all_ap);
  }
  if (r.localization) {
    const auto& l = *r.localization;
    put("localization", r.modality, "samples", static_cast<double>(l.samples));
    put("localization", r.modality, "mean_span_mass", l.mean_span_mass);
    put("localization", r.modality, "mean_uniform_mass", l.mean_uniform_mass);
    put("localization", r.modality, "fraction_at_least_2x",
        l.fraction_at_least_2x);
  }
  return os.str();
}

}  // namespace actmod
