#pragma once

// Deterministic synthetic corpora with planted relations. Each planted
// relation r(h, t) is expressed by 1-3 template sentences of the form
// "... <head name> <trigger_r> <tail name> ..."; those sentences are its
// evidence. Filler sentences carry no trigger and never contain both
// entities of a planted pair.

#include <cstdint>
#include <string>
#include <vector>

#include "docrel/corpus.hpp"

namespace docrel {

struct SynthConfig {
  int num_documents = 50;
  int min_entities = 2;
  int max_entities = 6;
  int min_sentences = 4;
  int max_sentences = 10;
  int num_relations = 8;  // at most 10
  int min_evidence = 1;
  int max_evidence = 3;
  int vocabulary_size = 200;
  // Allow the same relation type on several pairs of one document, so a
  // pair's relation cannot be read off the tail alone.
  bool repeat_relations = true;
  std::uint64_t seed = 7;

  void validate() const;  // throws ConfigError
};

struct SynthCorpus {
  std::vector<Document> documents;
  LabelVocabulary labels;
  std::vector<std::string> triggers;  // per relation id
};

SynthCorpus generate(const SynthConfig& config);

// Ordered co-occurrence classifier: predicts r(h, t) iff some sentence holds a
// mention of h, then trigger r, then a mention of t.
std::vector<RelationInstance> trigger_classifier(const Document& doc,
                                                 const std::vector<std::string>& triggers);

}  // namespace docrel
