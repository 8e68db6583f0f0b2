#include "docrel/metrics.hpp"

#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "docrel/errors.hpp"

namespace docrel {

namespace {

template <typename T>
std::set<T> unique_set(std::span<const T> items, const char* what) {
  std::set<T> out;
  for (const auto& item : items) {
    if (!out.insert(item).second) {
      throw ValidationError(std::string("duplicate ") + what + " for document '" + item.title + "'");
    }
  }
  return out;
}

template <typename T>
long overlap(const std::set<T>& a, const std::set<T>& b) {
  long n = 0;
  for (const auto& x : a) n += b.count(x) != 0 ? 1 : 0;
  return n;
}

nlohmann::json to_json(const PrecisionRecall& pr) {
  return {{"precision", pr.precision}, {"recall", pr.recall}, {"f1", pr.f1},
          {"tp", pr.true_positives},   {"fp", pr.false_positives},
          {"fn", pr.false_negatives}};
}

}  // namespace

PrecisionRecall precision_recall(long tp, long num_predicted, long num_gold) {
  PrecisionRecall pr;
  pr.true_positives = tp;
  pr.false_positives = num_predicted - tp;
  pr.false_negatives = num_gold - tp;
  pr.precision = num_predicted > 0 ? static_cast<double>(tp) / num_predicted : 0.0;
  pr.recall = num_gold > 0 ? static_cast<double>(tp) / num_gold : 0.0;
  pr.f1 = pr.precision + pr.recall > 0
              ? 2.0 * pr.precision * pr.recall / (pr.precision + pr.recall)
              : 0.0;
  return pr;
}

PrecisionRecall re_f1(std::span<const RelationTriple> predicted,
                      std::span<const RelationTriple> gold) {
  const auto pred = unique_set(predicted, "predicted triple");
  const std::set<RelationTriple> ref(gold.begin(), gold.end());
  return precision_recall(overlap(pred, ref), static_cast<long>(pred.size()),
                          static_cast<long>(ref.size()));
}

PrecisionRecall ign_re_f1(std::span<const RelationTriple> predicted,
                          std::span<const RelationTriple> gold,
                          std::span<const Document> docs, const TrainFactIndex& index) {
  const auto pred = unique_set(predicted, "predicted triple");
  std::map<std::string, const Document*> by_title;
  for (const auto& d : docs) by_title.emplace(d.title, &d);
  auto in_train = [&](const RelationTriple& t) {
    if (index.empty()) return false;
    auto it = by_title.find(t.title);
    if (it == by_title.end()) throw ValidationError("unknown document '" + t.title + "'");
    return index.contains(normalize_fact(*it->second, t.head, t.tail, t.relation));
  };
  std::set<RelationTriple> kept_pred;
  std::set<RelationTriple> kept_gold;
  for (const auto& t : pred) {
    if (!in_train(t)) kept_pred.insert(t);
  }
  for (const auto& t : gold) {
    if (!in_train(t)) kept_gold.insert(t);
  }
  return precision_recall(overlap(kept_pred, kept_gold), static_cast<long>(kept_pred.size()),
                          static_cast<long>(kept_gold.size()));
}

PrecisionRecall evi_f1(std::span<const EvidenceTuple> predicted,
                       std::span<const EvidenceTuple> gold) {
  const std::set<EvidenceTuple> pred(predicted.begin(), predicted.end());
  const std::set<EvidenceTuple> ref(gold.begin(), gold.end());
  return precision_recall(overlap(pred, ref), static_cast<long>(pred.size()),
                          static_cast<long>(ref.size()));
}

std::vector<RelationTriple> gold_triples(std::span<const Document> docs) {
  std::vector<RelationTriple> out;
  for (const auto& d : docs) {
    for (const auto& r : d.gold_relations) {
      out.push_back({d.title, r.head_idx, r.tail_idx, r.relation_id});
    }
  }
  return out;
}

std::vector<EvidenceTuple> gold_evidence(std::span<const Document> docs) {
  std::vector<EvidenceTuple> out;
  for (const auto& d : docs) {
    for (const auto& r : d.gold_relations) {
      for (int s : r.evidence) out.push_back({d.title, r.head_idx, r.tail_idx, r.relation_id, s});
    }
  }
  return out;
}

std::string report_json(const EvalReport& report) {
  nlohmann::json j = {{"re", to_json(report.re)},
                      {"ign_re", to_json(report.ign_re)},
                      {"evidence", to_json(report.evidence)}};
  return j.dump(2);
}

}  // namespace docrel
