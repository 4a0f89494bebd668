#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "actmod/dataset.hpp"
#include "actmod/errors.hpp"
#include "actmod/parser.hpp"

using namespace actmod;
namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(ACTMOD_TEST_DATA) / "parser";

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path out_path(const std::string& name) {
  return fs::temp_directory_path() /
         ("actmod_parser_" + std::to_string(::getpid()) + "_" + name);
}

std::vector<PairExtraction> extract_file(const fs::path& p,
                                         const ExtractionRules& rules) {
  std::vector<PairExtraction> all;
  for (const auto& doc : load_tagged_file(p))
    for (auto& e : extract_pairs(doc, rules)) all.push_back(std::move(e));
  return all;
}

std::string line(std::initializer_list<std::string> cols) {
  std::string s;
  for (const auto& c : cols) s += (s.empty() ? "" : "\t") + c;
  return s + "\n";
}

}  // namespace

TEST(Parser, ExampleSentences) {
  const auto rules = load_rules(kData / "rules.json");
  const auto docs = load_tagged_file(kData / "examples.tok");
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].video_id, "lemons");

  const auto lemons = extract_pairs(docs[0], rules);
  ASSERT_EQ(lemons.size(), 1u);
  EXPECT_EQ(lemons[0].action, "roll");
  EXPECT_EQ(lemons[0].adverb_name, "quickly");
  EXPECT_EQ(lemons[0].weak_timestamp, 12.75);

  // 'chopped' is VBD and 'fits' is VBZ.
  EXPECT_TRUE(extract_pairs(docs[1], rules).empty());
  EXPECT_TRUE(extract_pairs(docs[2], rules).empty());
}

TEST(Parser, ExclusionsAreWhatBlocksTheNegativeExamples) {
  auto rules = load_rules(kData / "rules.json");
  rules.excluded_verb_tags = {};
  const auto docs = load_tagged_file(kData / "examples.tok");
  const auto chopped = extract_pairs(docs[1], rules);
  ASSERT_EQ(chopped.size(), 1u);
  EXPECT_EQ(chopped[0].action, "chopped");
  const auto fits = extract_pairs(docs[2], rules);
  ASSERT_EQ(fits.size(), 1u);
  EXPECT_EQ(fits[0].adverb_name, "neatly");
}

TEST(Parser, GoldenExamplesFile) {
  const auto rules = load_rules(kData / "rules.json");
  const fs::path out = out_path("examples.tsv");
  const auto s = emit_annotations(extract_file(kData / "examples.tok", rules), out);
  EXPECT_EQ(s.written, 1u);
  EXPECT_EQ(slurp(out), slurp(kData / "examples.golden.tsv"));
  fs::remove(out);
}

TEST(Parser, GoldenCorpusFile) {
  const auto rules = load_rules(kData / "rules.json");
  const fs::path out = out_path("corpus.tsv");
  const auto all = extract_file(kData / "corpus.tok", rules);
  const auto s = emit_annotations(all, out);
  EXPECT_EQ(s.extracted, 8u);
  EXPECT_EQ(s.written, 7u);
  EXPECT_EQ(s.duplicates, 1u);
  EXPECT_EQ(slurp(out), slurp(kData / "corpus.golden.tsv"));
  // The golden file is a loadable annotation file.
  EXPECT_EQ(load_annotations(out).size(), 7u);
  fs::remove(out);
}

TEST(Parser, CorpusDocumentIds) {
  const auto docs = load_tagged_file(kData / "corpus.tok");
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].video_id, "vid_b");
  EXPECT_EQ(docs[1].video_id, "vid_a");
  EXPECT_EQ(docs[2].video_id, "corpus");
  std::size_t sentences = 0;
  for (const auto& d : docs) sentences += d.sentences.size();
  EXPECT_EQ(sentences, 10u);
}

TEST(Parser, EveryExtractionPassesVerifierAndMeanRule) {
  const auto rules = load_rules(kData / "rules.json");
  for (const char* f : {"examples.tok", "corpus.tok"}) {
    for (const auto& doc : load_tagged_file(kData / f)) {
      for (const auto& e : extract_pairs(doc, rules)) {
        EXPECT_TRUE(satisfies_rules(e, doc, rules));
        const double lo = std::min(e.verb.timestamp, e.adverb.timestamp);
        const double hi = std::max(e.verb.timestamp, e.adverb.timestamp);
        EXPECT_GE(e.weak_timestamp, lo);
        EXPECT_LE(e.weak_timestamp, hi);
        EXPECT_EQ(e.weak_timestamp, (e.verb.timestamp + e.adverb.timestamp) / 2);
        EXPECT_EQ(e.adverb.dep, "advmod");
        EXPECT_EQ(e.adverb.head, e.verb.index);
      }
    }
  }
}

TEST(Parser, VerifierRejectsTamperedExtraction) {
  const auto rules = load_rules(kData / "rules.json");
  const auto doc = load_tagged_file(kData / "examples.tok")[0];
  auto e = extract_pairs(doc, rules).at(0);
  auto bad = e;
  bad.action = "start";
  EXPECT_FALSE(satisfies_rules(bad, doc, rules));
  bad = e;
  bad.weak_timestamp = 13.0;
  EXPECT_FALSE(satisfies_rules(bad, doc, rules));
  bad = e;
  bad.verb.index = 0;
  EXPECT_FALSE(satisfies_rules(bad, doc, rules));
}

TEST(Parser, DeterministicAndIdempotent) {
  const auto rules = load_rules(kData / "rules.json");
  const fs::path a = out_path("a.tsv"), b = out_path("b.tsv");
  auto all = extract_file(kData / "corpus.tok", rules);
  emit_annotations(all, a);
  // Reversed input order and a second copy of everything give the same file
  // apart from the duplicate count.
  std::vector<PairExtraction> twice(all.rbegin(), all.rend());
  twice.insert(twice.end(), all.begin(), all.end());
  const auto s = emit_annotations(twice, b);
  EXPECT_EQ(s.written, 7u);
  EXPECT_EQ(s.duplicates, 9u);
  std::string fa = slurp(a), fb = slurp(b);
  fa.erase(0, fa.find("# video_id"));
  fb.erase(0, fb.find("# video_id"));
  EXPECT_EQ(fa, fb);
  fs::remove(a);
  fs::remove(b);
}

TEST(Parser, EmptyInputWritesHeaderOnly) {
  const fs::path out = out_path("empty.tsv");
  const auto s = emit_annotations({}, out, "train", {"run header"});
  EXPECT_EQ(s.written, 0u);
  EXPECT_EQ(slurp(out),
            "# run header\n# annotations extracted from tagged narrations\n"
            "# pairs 0, duplicates removed 0\n"
            "# video_id\taction\tadverb\ttimestamp\tsplit\n");
  fs::remove(out);
}

TEST(Parser, EmitErrorNamesPath) {
  const fs::path out = out_path("missing_dir") / "x.tsv";
  try {
    emit_annotations({}, out);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(out.string()), std::string::npos);
  }
}

TEST(ClusterVerb, Examples) {
  ExtractionRules r;
  r.add_cluster("put", {"put", "place"});
  EXPECT_EQ(cluster_verb("place", r), "put");
  EXPECT_EQ(cluster_verb("whisk", r), "whisk");
  EXPECT_EQ(cluster_verb("Place", r), "put");
  EXPECT_THROW(r.add_cluster("set", {"place"}), ConfigError);
}

TEST(Rules, DefaultsAndJson) {
  const ExtractionRules d;
  EXPECT_EQ(d.excluded_verb_tags, (std::set<std::string>{"VBD", "VBZ"}));
  EXPECT_EQ(d.adverb_allowlist.size(), 6u);
  const auto back = parse_rules(rules_to_json(load_rules(kData / "rules.json")));
  EXPECT_EQ(cluster_verb("rolling", back), "roll");
  EXPECT_TRUE(back.action_blocklist.count("melt"));
  EXPECT_THROW(parse_rules(R"({"clusterz": {}})"), ConfigError);
  EXPECT_THROW(parse_rules(R"({"antonym_pairs": [["a", "a"]]})"), ConfigError);
  EXPECT_THROW(parse_rules(R"({"antonym_pairs": [["a", "b"], ["b", "c"]]})"),
               ConfigError);
  EXPECT_THROW(parse_rules("{"), ConfigError);
}

TEST(TaggedText, MalformedInputs) {
  const std::string ok = line({"0", "0", "mix", "VB", "ROOT", "0", "1.0"});
  EXPECT_NO_THROW(parse_tagged_text(ok, "d"));
  EXPECT_THROW(parse_tagged_text("0\t0\tmix\tVB\tROOT\t0\n", "d"), DataError);
  EXPECT_THROW(parse_tagged_text(line({"0", "1", "mix", "VB", "ROOT", "0", "1"}), "d"),
               DataError);
  EXPECT_THROW(parse_tagged_text(ok + line({"0", "1", "it", "PRP", "dobj", "0", "0.5"}),
                                 "d"),
               DataError);
  EXPECT_THROW(parse_tagged_text(line({"0", "0", "mix", "VB", "ROOT", "x", "1"}), "d"),
               DataError);
  try {
    parse_tagged_text(ok + "0\t1\tbad\n", "d", "in.tok");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("in.tok:2"), std::string::npos);
  }
}

TEST(TaggedText, HeadOutOfRangeNamesSentence) {
  const auto docs = parse_tagged_text(
      line({"0", "0", "mix", "VB", "ROOT", "0", "1"}) +
          line({"3", "0", "stir", "VB", "ROOT", "0", "2"}) +
          line({"3", "1", "slowly", "RB", "advmod", "7", "2.5"}),
      "doc");
  try {
    extract_pairs(docs.at(0), ExtractionRules{});
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("sentence 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("doc"), std::string::npos) << msg;
  }
}

TEST(TaggedText, UnnamedDocumentsAreNumbered) {
  const std::string d = line({"0", "0", "mix", "VB", "ROOT", "0", "1"});
  const auto docs = parse_tagged_text(d + "\n" + d + "\n# video_id: x\n" + d, "f");
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].video_id, "f_1");
  EXPECT_EQ(docs[1].video_id, "f_2");
  EXPECT_EQ(docs[2].video_id, "x");
}

TEST(Parser, OnePairPerAdvmodArc) {
  const auto docs = load_tagged_file(kData / "corpus.tok");
  const auto rules = load_rules(kData / "rules.json");
  std::size_t slice = 0;
  for (const auto& e : extract_pairs(docs[0], rules)) slice += e.action == "slice";
  EXPECT_EQ(slice, 2u);
}
