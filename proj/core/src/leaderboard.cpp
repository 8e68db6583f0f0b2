#include "docrel/leaderboard.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "docrel/errors.hpp"

namespace docrel {

using nlohmann::json;

std::vector<LeaderboardRecord> to_leaderboard(const PredictionSet& predictions,
                                              const LabelVocabulary& labels) {
  std::vector<LeaderboardRecord> out;
  for (const auto& doc : predictions) {
    for (const auto& e : doc.emitted) {
      out.push_back({doc.title, e.head, e.tail, labels.name(e.relation), e.evidence});
    }
  }
  return out;
}

std::vector<LeaderboardRecord> gold_leaderboard(const std::vector<Document>& docs,
                                                const LabelVocabulary& labels) {
  std::vector<LeaderboardRecord> out;
  for (const auto& doc : docs) {
    for (const auto& rel : doc.gold_relations) {
      out.push_back({doc.title, rel.head_idx, rel.tail_idx, labels.name(rel.relation_id),
                     std::vector<int>(rel.evidence.begin(), rel.evidence.end())});
    }
  }
  return out;
}

std::string serialize_leaderboard(const std::vector<LeaderboardRecord>& records) {
  json root = json::array();
  for (const auto& rec : records) {
    root.push_back({{"title", rec.title},
                    {"h_idx", rec.h_idx},
                    {"t_idx", rec.t_idx},
                    {"r", rec.r},
                    {"evidence", rec.evidence}});
  }
  return root.dump();
}

std::vector<LeaderboardRecord> parse_leaderboard(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("prediction file is not valid JSON: ") + e.what());
  }
  if (!root.is_array()) throw ParseError("prediction file must be a JSON array");
  std::vector<LeaderboardRecord> out;
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& j = root[i];
    try {
      LeaderboardRecord rec;
      rec.title = j.at("title").get<std::string>();
      rec.h_idx = j.at("h_idx").get<int>();
      rec.t_idx = j.at("t_idx").get<int>();
      rec.r = j.at("r").get<std::string>();
      if (j.contains("evidence")) rec.evidence = j.at("evidence").get<std::vector<int>>();
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw ParseError("prediction record " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<LeaderboardRecord> load_leaderboard(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_leaderboard(ss.str());
}

void validate_leaderboard(const std::vector<LeaderboardRecord>& records,
                          const std::vector<Document>& docs, const LabelVocabulary& labels) {
  std::map<std::string, const Document*> by_title;
  for (const auto& d : docs) by_title.emplace(d.title, &d);
  std::set<std::tuple<std::string, int, int, std::string>> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const LeaderboardRecord& rec = records[i];
    const std::string where = "prediction " + std::to_string(i) + " ('" + rec.title + "')";
    auto it = by_title.find(rec.title);
    if (it == by_title.end()) throw ValidationError(where + ": unknown document title");
    const Document& doc = *it->second;
    auto id = labels.find(rec.r);
    if (!id || *id == LabelVocabulary::kNa) {
      throw ValidationError(where + ": relation '" + rec.r + "' not in vocabulary");
    }
    if (rec.h_idx < 0 || rec.h_idx >= doc.num_entities() || rec.t_idx < 0 ||
        rec.t_idx >= doc.num_entities()) {
      throw ValidationError(where + ": entity index out of range");
    }
    if (rec.h_idx == rec.t_idx) throw ValidationError(where + ": head equals tail");
    for (int s : rec.evidence) {
      if (s < 0 || s >= doc.num_sentences()) {
        throw ValidationError(where + ": evidence sentence " + std::to_string(s) + " out of range");
      }
    }
    if (!seen.emplace(rec.title, rec.h_idx, rec.t_idx, rec.r).second) {
      throw ValidationError(where + ": duplicate triple");
    }
  }
}

EvalReport evaluate(const std::vector<LeaderboardRecord>& records,
                    const std::vector<Document>& gold, const LabelVocabulary& labels,
                    const TrainFactIndex& train_facts) {
  validate_leaderboard(records, gold, labels);
  std::vector<RelationTriple> pred;
  std::vector<EvidenceTuple> pred_evidence;
  for (const auto& rec : records) {
    const int r = labels.id(rec.r);
    pred.push_back({rec.title, rec.h_idx, rec.t_idx, r});
    for (int s : rec.evidence) pred_evidence.push_back({rec.title, rec.h_idx, rec.t_idx, r, s});
  }
  const auto gold_t = gold_triples(gold);
  const auto gold_e = gold_evidence(gold);
  EvalReport report;
  report.re = re_f1(pred, gold_t);
  report.ign_re = ign_re_f1(pred, gold_t, gold, train_facts);
  report.evidence = evi_f1(pred_evidence, gold_e);
  return report;
}

}  // namespace docrel
