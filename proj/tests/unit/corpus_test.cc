#include <gtest/gtest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "evtuple/corpus.h"
#include "evtuple/errors.h"
#include "test_support.h"

namespace evtuple {
namespace {

using testing::fixture;

LabelSchema table1_schema() { return LabelSchema::load(fixture("table1_schema.json")); }

TEST(CorpusTest, LoadsTable1Record) {
  const auto ex = load_corpus(fixture("table1.jsonl"), table1_schema());
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0].id, "deploy");
  ASSERT_EQ(ex[0].gold.size(), 2u);
  EXPECT_EQ(ex[0].gold[0].event_type, "Movement:Transport");
}

TEST(CorpusTest, WriteReadRoundTrip) {
  const auto ex = load_corpus(fixture("table1.jsonl"), table1_schema());
  std::stringstream buf;
  write_corpus(buf, ex);
  const auto back = parse_corpus(buf, table1_schema());
  ASSERT_EQ(back.size(), ex.size());
  for (size_t i = 0; i < ex.size(); ++i) {
    EXPECT_EQ(back[i].id, ex[i].id);
    EXPECT_EQ(back[i].sentence.tokens, ex[i].sentence.tokens);
    EXPECT_EQ(back[i].sentence.dep_tags, ex[i].sentence.dep_tags);
    EXPECT_EQ(back[i].gold, ex[i].gold);
  }
}

TEST(CorpusTest, MalformedLineReportsLineNumber) {
  std::stringstream in;
  in << R"({"tokens":["a"],"pos":["X"],"dep":["d"],"ent_bio":["O"]})" << "\n\n"
     << "{not json\n";
  try {
    parse_corpus(in, table1_schema());
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(CorpusTest, MissingFieldIsFormatError) {
  std::stringstream in;
  in << R"({"tokens":["a"],"pos":["X"],"dep":["d"]})" << "\n";
  EXPECT_THROW(parse_corpus(in, table1_schema()), FormatError);
}

TEST(CorpusTest, LengthMismatchIsFormatError) {
  std::stringstream in;
  in << R"({"tokens":["a","b"],"pos":["X"],"dep":["d","e"],"ent_bio":["O","O"]})" << "\n";
  EXPECT_THROW(parse_corpus(in, table1_schema()), FormatError);
}

TEST(CorpusTest, UnknownTypeIsSchemaError) {
  std::stringstream in;
  in << R"({"tokens":["a"],"pos":["X"],"dep":["d"],"ent_bio":["O"],)"
     << R"("events":[{"trigger":[0,0],"type":"Nope","arguments":[]}]})" << "\n";
  EXPECT_THROW(parse_corpus(in, table1_schema()), SchemaError);
}

TEST(CorpusTest, VocabReservesUnkAndSentinel) {
  const auto ex = load_corpus(fixture("table1.jsonl"), table1_schema());
  const FeatureVocab v = build_vocab(ex);
  EXPECT_EQ(v.pos.labels()[0], "<unk>");
  EXPECT_EQ(v.pos.labels()[1], "SENT");
  EXPECT_EQ(v.pos.lookup("SENT"), LabelIndex::kSent);
  EXPECT_EQ(v.pos.lookup("never-seen"), LabelIndex::kUnk);
  EXPECT_GT(v.pos.lookup("NNP"), 1);
  EXPECT_EQ(FeatureVocab::from_json(v.to_json()), v);
  EXPECT_THROW(build_vocab({}), Error);
}

TEST(CorpusTest, CharIdsPadAndTruncate) {
  const LabelIndex chars(std::vector<std::string>{"a", "b", "c"});
  const auto ids = char_ids("abcabcabcabc", chars);
  ASSERT_EQ(ids.size(), static_cast<size_t>(kMaxWordLength));
  EXPECT_EQ(ids[0], chars.lookup("a"));
  const auto one = char_ids("b", chars);
  EXPECT_EQ(one[0], chars.lookup("b"));
  for (int k = 1; k < kMaxWordLength; ++k) EXPECT_EQ(one[static_cast<size_t>(k)], -1);
  EXPECT_EQ(utf8_chars("né").size(), 2u);
}

TEST(CorpusTest, BatchPadsGoldWithNullTuples) {
  const auto ex = load_corpus(fixture("table1.jsonl"), table1_schema());
  const auto batches = make_batches(std::span(ex).first(1), build_vocab(ex), 4, 4);
  ASSERT_EQ(batches.size(), 1u);
  const Batch& b = batches[0];
  ASSERT_EQ(b.gold[0].size(), 4u);
  EXPECT_TRUE(b.gold[0][2] == EventTuple::null_tuple());
  EXPECT_TRUE(b.gold[0][3] == EventTuple::null_tuple());
  EXPECT_EQ(b.tuple_mask(0, 0), 1);
  EXPECT_EQ(b.tuple_mask(0, 1), 1);
  EXPECT_EQ(b.tuple_mask(0, 2), 0);
  EXPECT_EQ(b.tuple_mask(0, 3), 0);
  EXPECT_EQ(b.max_len, 18);
  EXPECT_EQ(b.token_mask.sum(), 18);
}

TEST(CorpusTest, BatchesCoverCorpusOnce) {
  std::mt19937_64 rng(5);
  const LabelSchema schema = testing::toy_schema(3, 3);
  std::vector<CorpusExample> ex;
  for (int i = 0; i < 23; ++i) ex.push_back(testing::random_example(rng, 6, schema));
  const int et = static_cast<int>(max_tuple_count(ex));
  const auto batches = make_batches(ex, build_vocab(ex), 5, et, 17);
  ASSERT_EQ(batches.size(), 5u);
  std::vector<size_t> seen;
  for (const auto& b : batches) {
    seen.insert(seen.end(), b.example_indices.begin(), b.example_indices.end());
  }
  std::sort(seen.begin(), seen.end());
  for (size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], i);
  const auto again = make_batches(ex, build_vocab(ex), 5, et, 17);
  EXPECT_EQ(again[0].example_indices, batches[0].example_indices);
  EXPECT_THROW(make_batches(ex, build_vocab(ex), 5, et - 1), ConfigError);
}

TEST(SyntheticTest, DeterministicUnderSeed) {
  SyntheticConfig c;
  c.num_sentences = 40;
  c.seed = 9;
  const auto a = generate_synthetic(c);
  const auto b = generate_synthetic(c);
  std::stringstream sa, sb;
  write_corpus(sa, a.examples);
  write_corpus(sb, b.examples);
  EXPECT_EQ(sa.str(), sb.str());
  c.seed = 10;
  std::stringstream sc;
  write_corpus(sc, generate_synthetic(c).examples);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(SyntheticTest, SchemaAndFlagsMatchContent) {
  SyntheticConfig c;
  c.num_sentences = 300;
  c.overlap_arg_rate = 0.3;
  const auto corpus = generate_synthetic(c);
  EXPECT_EQ(corpus.schema.num_event_classes(), 6);
  EXPECT_EQ(corpus.schema.num_role_classes(), 7);
  int multi = 0, shared = 0, overlap = 0;
  for (size_t i = 0; i < corpus.examples.size(); ++i) {
    const auto& ex = corpus.examples[i];
    const auto events = decode_frames(ex.gold, ex.sentence);
    EXPECT_EQ(corpus.flags[i].multi_event, events.size() > 1) << ex.id;
    multi += corpus.flags[i].multi_event;
    shared += corpus.flags[i].shared_argument;
    overlap += corpus.flags[i].overlapping_arguments;
    std::vector<int> starts(static_cast<size_t>(ex.sentence.raw_size()), 0);
    bool has_overlap = false;
    std::vector<Span> spans;
    for (const auto& e : events) {
      for (const auto& a : e.arguments) spans.push_back(a.span);
    }
    for (size_t x = 0; x < spans.size(); ++x) {
      for (size_t y = 0; y < spans.size(); ++y) {
        if (spans[x] != spans[y] && spans[x].overlaps(spans[y])) has_overlap = true;
      }
    }
    EXPECT_EQ(corpus.flags[i].overlapping_arguments, has_overlap) << ex.id;
  }
  EXPECT_GT(multi, 30);
  EXPECT_GT(shared, 0);
  EXPECT_GT(overlap, 50);
}

TEST(SyntheticTest, ConfigJsonRejectsUnknownKeys) {
  SyntheticConfig c;
  c.num_sentences = 7;
  EXPECT_EQ(SyntheticConfig::from_json(c.to_json()).num_sentences, 7);
  EXPECT_THROW(SyntheticConfig::from_json(nlohmann::json{{"sentences", 3}}), ConfigError);
  c.num_sentences = 0;
  EXPECT_THROW(generate_synthetic(c), ConfigError);
}

}  // namespace
}  // namespace evtuple
