#include <gtest/gtest.h>

#include "docrel/corpus.hpp"
#include "docrel/errors.hpp"
#include "fixtures.hpp"

using namespace docrel;
using docrel::testing::make_document;

namespace {

const std::string kDir = DOCREL_FIXTURE_DIR;

LabelVocabulary fixture_labels() { return LabelVocabulary::load(kDir + "/relations.txt"); }

std::string one_doc_json(const std::string& mention_pos) {
  return R"([{"title":"t","sents":[["a","b"],["c","d"]],"vertexSet":[[{"name":"a","pos":)" +
         mention_pos +
         R"(,"sent_id":0}],[{"name":"c","pos":[0,1],"sent_id":1}]],"labels":[{"h":0,"t":1,"r":"founded_by","evidence":[0]}]}])";
}

}  // namespace

TEST(LabelVocabulary, LoadsNaAsSentinel) {
  const LabelVocabulary v = fixture_labels();
  EXPECT_EQ(v.size(), 2);
  EXPECT_EQ(v.id("founded_by"), 0);
  EXPECT_EQ(v.id("lives_in"), 1);
  EXPECT_EQ(v.find("Na"), LabelVocabulary::kNa);
  EXPECT_EQ(v.find("NA"), LabelVocabulary::kNa);
  EXPECT_FALSE(v.find("unknown").has_value());
  EXPECT_THROW(v.id("unknown"), ValidationError);
}

TEST(LabelVocabulary, RejectsNaAsTrainable) {
  EXPECT_THROW(LabelVocabulary({"r1", "NA"}), ValidationError);
  EXPECT_THROW(LabelVocabulary({"r1", "r1"}), ValidationError);
}

TEST(Corpus, LoadsFixture) {
  const auto docs = load_corpus(kDir + "/mini.json", fixture_labels());
  ASSERT_EQ(docs.size(), 2u);
  const Document& d = docs[0];
  EXPECT_EQ(d.title, "Acme");
  EXPECT_EQ(d.num_entities(), 3);
  EXPECT_EQ(d.num_sentences(), 2);
  EXPECT_EQ(d.num_tokens(), 14);
  EXPECT_EQ(d.sentence_offsets(), (std::vector<int>{0, 8}));
  ASSERT_EQ(d.gold_relations.size(), 2u);  // the Na label is implicit
  EXPECT_EQ(d.gold_relations[1].relation_id, 1);
  EXPECT_EQ(d.gold_relations[1].evidence, (std::set<int>{1}));
  EXPECT_TRUE(docs[1].gold_relations.empty());  // missing labels field
}

TEST(Corpus, MinimalDocument) {
  const auto docs = parse_corpus(one_doc_json("[0,1]"), fixture_labels());
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0].num_entities(), 2);
  EXPECT_EQ(docs[0].num_sentences(), 2);
  EXPECT_EQ(docs[0].gold_relations.size(), 1u);
}

TEST(Corpus, MentionPastSentenceEndIsRejected) {
  EXPECT_THROW(parse_corpus(one_doc_json("[1,3]"), fixture_labels()), ValidationError);
}

TEST(Corpus, MalformedInputIsParseError) {
  EXPECT_THROW(parse_corpus("{not json", fixture_labels()), ParseError);
  EXPECT_THROW(parse_corpus("{}", fixture_labels()), ParseError);
  EXPECT_THROW(parse_corpus(R"([{"title":"x"}])", fixture_labels()), ParseError);
  EXPECT_THROW(load_corpus(kDir + "/missing.json", fixture_labels()), ParseError);
}

TEST(Corpus, UnknownRelationNameIsRejected) {
  std::string text = one_doc_json("[0,1]");
  text.replace(text.find("founded_by"), 10, "married_to");
  EXPECT_THROW(parse_corpus(text, fixture_labels()), ParseError);
}

TEST(Corpus, ValidationCatchesInvariantBreaks) {
  Document d = docrel::testing::small_document();
  EXPECT_NO_THROW(validate(d, 2));
  Document bad = d;
  bad.gold_relations[0].tail_idx = 0;  // head == tail
  EXPECT_THROW(validate(bad, 2), ValidationError);
  bad = d;
  bad.gold_relations[0].evidence = {5};
  EXPECT_THROW(validate(bad, 2), ValidationError);
  bad = d;
  bad.gold_relations[0].relation_id = 2;
  EXPECT_THROW(validate(bad, 2), ValidationError);
  bad = d;
  bad.entities[1].mentions.clear();
  EXPECT_THROW(validate(bad, 2), ValidationError);
  bad = d;
  bad.sentences[1].clear();
  EXPECT_THROW(validate(bad, 2), ValidationError);
}

TEST(Corpus, SerializeRoundTrip) {
  const LabelVocabulary labels = fixture_labels();
  const auto docs = load_corpus(kDir + "/mini.json", labels);
  const auto again = parse_corpus(serialize_corpus(docs, labels), labels);
  EXPECT_EQ(docs, again);
}

TEST(Corpus, MentionsSortedByDocumentOrder) {
  const std::string text =
      R"([{"title":"t","sents":[["a","b"],["c","d"]],"vertexSet":[[{"name":"c","pos":[0,1],"sent_id":1},{"name":"a","pos":[0,1],"sent_id":0}],[{"name":"d","pos":[1,2],"sent_id":1}]]}])";
  const auto docs = parse_corpus(text, fixture_labels());
  EXPECT_EQ(docs[0].entities[0].mentions[0].surface, "a");
}

TEST(TrainFactIndex, Counts) {
  EXPECT_TRUE(build_train_fact_index({}).empty());
  const Document d = docrel::testing::small_document();
  EXPECT_EQ(build_train_fact_index({d}).size(), 2u);
  Document other = d;
  other.title = "copy";
  other.gold_relations.resize(1);
  EXPECT_EQ(build_train_fact_index({d, other}).size(), 2u);
}

TEST(TrainFactIndex, NormalizesSurfaceNames) {
  const Document a = make_document("a", {"x y z"}, {{{0, 0, 1}}, {{0, 2, 3}}}, {{0, 1, 0, {0}}});
  const Document b =
      make_document("b", {"q z q x"}, {{{0, 3, 4}}, {{0, 1, 2}}}, {{0, 1, 0, {0}}});
  const TrainFactIndex index = build_train_fact_index({a});
  EXPECT_TRUE(index.contains(normalize_fact(b, 0, 1, 0)));
  EXPECT_FALSE(index.contains(normalize_fact(b, 1, 0, 0)));
  EXPECT_FALSE(index.contains(normalize_fact(b, 0, 1, 1)));
}
