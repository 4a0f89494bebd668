#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace actmod {

struct TaggedToken {
  std::size_t sentence = 0;
  std::size_t index = 0;  // 0-based position in the sentence
  std::string text;
  std::string pos;  // Penn tag
  std::string dep;  // dependency label of the arc to `head`
  std::size_t head = 0;  // index of the syntactic head; self for the root
  double timestamp = 0.0;
};

struct TaggedSentence {
  std::size_t index = 0;
  std::vector<TaggedToken> tokens;
};

struct TaggedDocument {
  std::string video_id;
  std::vector<TaggedSentence> sentences;
};

// One token per line: sentence_index, token_index, text, pos, dep, head,
// timestamp (tab separated). Blank lines separate documents and '#' starts a
// comment, except "# video_id: <id>" which names the next document. Unnamed
// documents take `default_id` (suffixed _1, _2, ... when there are several).
std::vector<TaggedDocument> parse_tagged_text(const std::string& text,
                                              const std::string& default_id,
                                              const std::string& source = "");
std::vector<TaggedDocument> load_tagged_file(const std::filesystem::path& path);

struct ExtractionRules {
  std::set<std::string> excluded_verb_tags{"VBD", "VBZ"};
  // surface form (lower case) -> cluster name
  std::map<std::string, std::string> verb_cluster_map;
  std::set<std::string> action_blocklist;
  std::set<std::string> adverb_allowlist{"quickly",  "slowly",  "finely",
                                         "coarsely", "partially", "completely"};
  std::vector<std::pair<std::string, std::string>> antonym_pairs{
      {"quickly", "slowly"}, {"finely", "coarsely"}, {"partially", "completely"}};

  // Antonym pairing must be an involution without fixed points and the
  // cluster map must not map one surface form twice.
  void validate() const;
  // Adds `cluster <- surface` for every listed surface form.
  void add_cluster(const std::string& cluster,
                   const std::vector<std::string>& surfaces);
};

// JSON object with optional keys excluded_verb_tags, clusters
// ({"put": ["put", "place"]}), action_blocklist, adverb_allowlist and
// antonym_pairs ([["quickly", "slowly"], ...]). Unknown keys are rejected.
ExtractionRules parse_rules(const std::string& json_text,
                            const std::string& source = "rules");
ExtractionRules load_rules(const std::filesystem::path& path);
std::string rules_to_json(const ExtractionRules& rules);

struct PairExtraction {
  std::string video_id;
  std::size_t sentence = 0;
  TaggedToken verb;
  TaggedToken adverb;
  std::string action;       // cluster name
  std::string adverb_name;  // lower-cased adverb
  double weak_timestamp = 0.0;
};

// Case-folded cluster lookup; unmapped verbs fall through lower-cased.
std::string cluster_verb(const std::string& surface,
                         const ExtractionRules& rules);

// One extraction per advmod arc from an allowlisted adverb to a verb whose
// tag is VB* and not excluded, unless the verb's cluster is blocklisted.
std::vector<PairExtraction> extract_pairs(const TaggedDocument& doc,
                                          const ExtractionRules& rules);

// Re-checks an extraction against its document (used as a verifier pass).
bool satisfies_rules(const PairExtraction& e, const TaggedDocument& doc,
                     const ExtractionRules& rules);

struct EmitSummary {
  std::size_t extracted = 0;
  std::size_t written = 0;
  std::size_t duplicates = 0;
};

// Sorted by (video_id, timestamp, action, adverb); duplicate
// (video, timestamp, action, adverb) tuples are written once.
// `header` lines are written as comments ahead of the summary lines.
EmitSummary emit_annotations(const std::vector<PairExtraction>& extractions,
                             const std::filesystem::path& path,
                             const std::string& split = "train",
                             const std::vector<std::string>& header = {});

}  // namespace actmod
