#include "actmod/parser.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include "actmod/dataset.hpp"
#include "actmod/errors.hpp"
#include "actmod/text.hpp"
#include "json.hpp"

namespace actmod {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kDirective = "video_id:";

std::string location(const std::string& source, std::size_t line) {
  return (source.empty() ? std::string("line ") : source + ":") +
         std::to_string(line);
}

}  // namespace

std::vector<TaggedDocument> parse_tagged_text(const std::string& text,
                                              const std::string& default_id,
                                              const std::string& source) {
  std::vector<TaggedDocument> docs;
  std::vector<bool> named;
  TaggedDocument cur;
  bool cur_named = false;
  std::string pending;
  double last_ts = 0.0;

  auto finish = [&] {
    if (cur.sentences.empty()) return;
    docs.push_back(std::move(cur));
    named.push_back(cur_named);
    cur = {};
    cur_named = false;
  };

  std::istringstream is(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string_view line = text::trim(raw);
    if (line.empty()) {
      finish();
      continue;
    }
    if (line.front() == '#') {
      const std::string_view body = text::trim(line.substr(1));
      if (body.substr(0, kDirective.size()) == kDirective) {
        finish();
        pending = std::string(text::trim(body.substr(kDirective.size())));
        if (pending.empty())
          throw DataError(location(source, line_no) + ": empty video_id");
      }
      continue;
    }
    const auto cols = text::split(raw, '\t');
    const std::string at = location(source, line_no);
    if (cols.size() != 7) {
      throw DataError(at + ": expected 7 tab-separated columns, got " +
                      std::to_string(cols.size()));
    }
    TaggedToken tok;
    tok.sentence = text::parse_size(cols[0], at);
    tok.index = text::parse_size(cols[1], at);
    tok.text = cols[2];
    tok.pos = cols[3];
    tok.dep = cols[4];
    tok.head = text::parse_size(cols[5], at);
    tok.timestamp = text::parse_double(cols[6], at);

    if (cur.sentences.empty()) {
      cur.video_id = pending;
      cur_named = !pending.empty();
      pending.clear();
      last_ts = tok.timestamp;
    }
    if (tok.timestamp < last_ts)
      throw DataError(at + ": timestamp decreases within a document");
    last_ts = tok.timestamp;
    if (cur.sentences.empty() || cur.sentences.back().index != tok.sentence) {
      if (!cur.sentences.empty() && tok.sentence < cur.sentences.back().index)
        throw DataError(at + ": sentence indices must increase");
      cur.sentences.push_back({tok.sentence, {}});
    }
    auto& tokens = cur.sentences.back().tokens;
    if (tok.index != tokens.size()) {
      throw DataError(at + ": token index " + std::to_string(tok.index) +
                      ", expected " + std::to_string(tokens.size()));
    }
    tokens.push_back(std::move(tok));
  }
  finish();

  std::size_t unnamed = std::count(named.begin(), named.end(), false);
  std::size_t k = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (named[i]) continue;
    ++k;
    docs[i].video_id =
        unnamed == 1 ? default_id : default_id + "_" + std::to_string(k);
  }
  return docs;
}

std::vector<TaggedDocument> load_tagged_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_tagged_text(ss.str(), path.stem().string(), path.string());
}

void ExtractionRules::validate() const {
  std::map<std::string, std::string> partner;
  for (const auto& [a, b] : antonym_pairs) {
    if (a == b) throw ConfigError("adverb '" + a + "' is its own antonym");
    for (const auto& w : {a, b}) {
      if (partner.count(w))
        throw ConfigError("adverb '" + w + "' appears in two antonym pairs");
    }
    partner[a] = b;
    partner[b] = a;
  }
}

void ExtractionRules::add_cluster(const std::string& cluster,
                                  const std::vector<std::string>& surfaces) {
  for (const auto& s : surfaces) {
    const std::string key = text::to_lower(s);
    auto [it, inserted] = verb_cluster_map.emplace(key, cluster);
    if (!inserted && it->second != cluster) {
      throw ConfigError("verb '" + key + "' mapped to both '" + it->second +
                        "' and '" + cluster + "'");
    }
  }
}

namespace {

std::set<std::string> string_set(const json& j, const std::string& key,
                                 bool lower) {
  if (!j.is_array()) throw ConfigError(key + " must be an array of strings");
  std::set<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw ConfigError(key + " must hold strings");
    out.insert(lower ? text::to_lower(v.get<std::string>())
                     : v.get<std::string>());
  }
  return out;
}

}  // namespace

ExtractionRules parse_rules(const std::string& json_text,
                            const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(source + ": expected a JSON object");
  ExtractionRules r;
  for (const auto& [key, value] : j.items()) {
    if (key == "excluded_verb_tags") {
      r.excluded_verb_tags = string_set(value, key, false);
    } else if (key == "clusters") {
      if (!value.is_object()) throw ConfigError("clusters must be an object");
      for (const auto& [cluster, surfaces] : value.items()) {
        const auto s = string_set(surfaces, "clusters." + cluster, true);
        r.add_cluster(cluster, {s.begin(), s.end()});
      }
    } else if (key == "action_blocklist") {
      r.action_blocklist = string_set(value, key, false);
    } else if (key == "adverb_allowlist") {
      r.adverb_allowlist = string_set(value, key, true);
    } else if (key == "antonym_pairs") {
      if (!value.is_array()) throw ConfigError("antonym_pairs must be an array");
      r.antonym_pairs.clear();
      for (const auto& p : value) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_string() ||
            !p[1].is_string())
          throw ConfigError("antonym_pairs entries must be [a, b]");
        r.antonym_pairs.emplace_back(text::to_lower(p[0].get<std::string>()),
                                     text::to_lower(p[1].get<std::string>()));
      }
    } else {
      throw ConfigError(source + ": unknown key '" + key + "'");
    }
  }
  r.validate();
  return r;
}

ExtractionRules load_rules(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open rules file '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_rules(ss.str(), path.string());
}

std::string rules_to_json(const ExtractionRules& r) {
  json j;
  j["excluded_verb_tags"] = r.excluded_verb_tags;
  std::map<std::string, std::vector<std::string>> clusters;
  for (const auto& [surface, cluster] : r.verb_cluster_map)
    clusters[cluster].push_back(surface);
  j["clusters"] = clusters;
  j["action_blocklist"] = r.action_blocklist;
  j["adverb_allowlist"] = r.adverb_allowlist;
  json pairs = json::array();
  for (const auto& [a, b] : r.antonym_pairs) pairs.push_back({a, b});
  j["antonym_pairs"] = pairs;
  return j.dump(2);
}

std::string cluster_verb(const std::string& surface,
                         const ExtractionRules& rules) {
  const std::string key = text::to_lower(surface);
  auto it = rules.verb_cluster_map.find(key);
  return it == rules.verb_cluster_map.end() ? key : it->second;
}

namespace {

bool is_candidate_verb(const TaggedToken& t, const ExtractionRules& rules) {
  return t.pos.rfind("VB", 0) == 0 && !rules.excluded_verb_tags.count(t.pos);
}

}  // namespace

std::vector<PairExtraction> extract_pairs(const TaggedDocument& doc,
                                          const ExtractionRules& rules) {
  std::vector<PairExtraction> out;
  for (const auto& sentence : doc.sentences) {
    const auto& toks = sentence.tokens;
    for (const auto& t : toks) {
      if (t.head >= toks.size()) {
        throw DataError("document '" + doc.video_id + "', sentence " +
                        std::to_string(sentence.index) + ": token " +
                        std::to_string(t.index) + " has head " +
                        std::to_string(t.head) + " outside the sentence");
      }
    }
    for (const auto& t : toks) {
      if (t.dep != "advmod" || t.head == t.index) continue;
      const std::string adverb = text::to_lower(t.text);
      if (!rules.adverb_allowlist.count(adverb)) continue;
      const TaggedToken& verb = toks[t.head];
      if (!is_candidate_verb(verb, rules)) continue;
      std::string action = cluster_verb(verb.text, rules);
      if (rules.action_blocklist.count(action)) continue;
      PairExtraction e;
      e.video_id = doc.video_id;
      e.sentence = sentence.index;
      e.verb = verb;
      e.adverb = t;
      e.action = std::move(action);
      e.adverb_name = adverb;
      e.weak_timestamp = 0.5 * (verb.timestamp + t.timestamp);
      out.push_back(std::move(e));
    }
  }
  return out;
}

bool satisfies_rules(const PairExtraction& e, const TaggedDocument& doc,
                     const ExtractionRules& rules) {
  if (e.video_id != doc.video_id) return false;
  auto s = std::find_if(doc.sentences.begin(), doc.sentences.end(),
                        [&](const auto& x) { return x.index == e.sentence; });
  if (s == doc.sentences.end()) return false;
  const auto& toks = s->tokens;
  if (e.adverb.index >= toks.size() || e.verb.index >= toks.size()) return false;
  const TaggedToken& adv = toks[e.adverb.index];
  const TaggedToken& verb = toks[e.verb.index];
  const double lo = std::min(adv.timestamp, verb.timestamp);
  const double hi = std::max(adv.timestamp, verb.timestamp);
  return adv.dep == "advmod" && adv.head == verb.index &&
         adv.index != verb.index && is_candidate_verb(verb, rules) &&
         rules.adverb_allowlist.count(text::to_lower(adv.text)) &&
         e.adverb_name == text::to_lower(adv.text) &&
         e.action == cluster_verb(verb.text, rules) &&
         !rules.action_blocklist.count(e.action) &&
         e.weak_timestamp == 0.5 * (verb.timestamp + adv.timestamp) &&
         e.weak_timestamp >= lo && e.weak_timestamp <= hi;
}

EmitSummary emit_annotations(const std::vector<PairExtraction>& extractions,
                             const fs::path& path, const std::string& split,
                             const std::vector<std::string>& header) {
  std::vector<AnnotationRecord> records;
  records.reserve(extractions.size());
  for (const auto& e : extractions)
    records.push_back({e.video_id, e.action, e.adverb_name, e.weak_timestamp,
                       split, ""});
  auto key = [](const AnnotationRecord& r) {
    return std::tie(r.video_id, r.timestamp, r.action, r.adverb);
  };
  std::sort(records.begin(), records.end(),
            [&](const auto& a, const auto& b) { return key(a) < key(b); });
  const auto last = std::unique(
      records.begin(), records.end(),
      [&](const auto& a, const auto& b) { return key(a) == key(b); });
  EmitSummary summary;
  summary.extracted = extractions.size();
  summary.duplicates = static_cast<std::size_t>(records.end() - last);
  records.erase(last, records.end());
  summary.written = records.size();
  try {
    std::vector<std::string> lines = header;
    lines.push_back("annotations extracted from tagged narrations");
    lines.push_back("pairs " + std::to_string(summary.written) +
                    ", duplicates removed " +
                    std::to_string(summary.duplicates));
    save_annotations(records, path, lines);
  } catch (const DataError& e) {
    throw DataError(std::string("emit_annotations: ") + e.what());
  }
  return summary;
}

}  // namespace actmod
