#pragma once

// Leaderboard submission files: a JSON array of
// {title, h_idx, t_idx, r, evidence} records.

#include <filesystem>
#include <string>
#include <vector>

#include "docrel/corpus.hpp"
#include "docrel/metrics.hpp"
#include "docrel/pipeline.hpp"

namespace docrel {

struct LeaderboardRecord {
  std::string title;
  int h_idx = 0;
  int t_idx = 0;
  std::string r;
  std::vector<int> evidence;
  bool operator==(const LeaderboardRecord&) const = default;
};

std::vector<LeaderboardRecord> to_leaderboard(const PredictionSet& predictions,
                                              const LabelVocabulary& labels);
// Gold annotations rendered as a submission; scores perfectly by construction.
std::vector<LeaderboardRecord> gold_leaderboard(const std::vector<Document>& docs,
                                                const LabelVocabulary& labels);

std::string serialize_leaderboard(const std::vector<LeaderboardRecord>& records);
std::vector<LeaderboardRecord> parse_leaderboard(const std::string& json_text);
std::vector<LeaderboardRecord> load_leaderboard(const std::filesystem::path& path);

// Rejects unknown titles, out-of-vocabulary relation names, out-of-range
// entity or sentence indices, head == tail and duplicate triples.
void validate_leaderboard(const std::vector<LeaderboardRecord>& records,
                          const std::vector<Document>& docs, const LabelVocabulary& labels);

EvalReport evaluate(const std::vector<LeaderboardRecord>& records,
                    const std::vector<Document>& gold, const LabelVocabulary& labels,
                    const TrainFactIndex& train_facts);

}  // namespace docrel
