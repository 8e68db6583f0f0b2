#pragma once

// Micro-averaged RE F1, Ign RE F1 and evidence F1 over keyed tuple sets.

#include <compare>
#include <span>
#include <string>
#include <vector>

#include "docrel/corpus.hpp"

namespace docrel {

struct RelationTriple {
  std::string title;
  int head = 0;
  int tail = 0;
  int relation = 0;
  auto operator<=>(const RelationTriple&) const = default;
};

struct EvidenceTuple {
  std::string title;
  int head = 0;
  int tail = 0;
  int relation = 0;
  int sentence = 0;
  auto operator<=>(const EvidenceTuple&) const = default;
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long true_positives = 0;
  long false_positives = 0;
  long false_negatives = 0;
};

struct EvalReport {
  PrecisionRecall re;
  PrecisionRecall ign_re;
  PrecisionRecall evidence;
};

// F1 = 2PR/(P+R), with 0/0 taken as 0.
PrecisionRecall precision_recall(long tp, long num_predicted, long num_gold);

// Throws ValidationError on duplicate predicted triples.
PrecisionRecall re_f1(std::span<const RelationTriple> predicted,
                      std::span<const RelationTriple> gold);

// Triples whose normalized fact is in the index are removed from both sides.
// `docs` resolves titles to entity surface names.
PrecisionRecall ign_re_f1(std::span<const RelationTriple> predicted,
                          std::span<const RelationTriple> gold,
                          std::span<const Document> docs, const TrainFactIndex& index);

PrecisionRecall evi_f1(std::span<const EvidenceTuple> predicted,
                       std::span<const EvidenceTuple> gold);

std::vector<RelationTriple> gold_triples(std::span<const Document> docs);
std::vector<EvidenceTuple> gold_evidence(std::span<const Document> docs);

std::string report_json(const EvalReport& report);

}  // namespace docrel
