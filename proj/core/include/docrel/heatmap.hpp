#pragma once

// Per-token attention heatmaps for a (head, tail) pair.

#include <string>
#include <vector>

#include "docrel/corpus.hpp"
#include "docrel/model.hpp"
#include "docrel/tokenizer.hpp"

namespace docrel {

struct HeatmapRecord {
  std::string title;
  int head = 0;
  int tail = 0;
  std::vector<std::string> tokens;     // document tokens, in order
  std::vector<double> token_values;    // pooled attention per document token
  std::vector<double> sentence_values; // per-sentence feature a_j
};

// attention_layers == 0 uses the checkpoint's value.
HeatmapRecord compute_heatmap(const Document& doc, const ModelParameters& params,
                              const Tokenizer& tokenizer, int head, int tail,
                              int attention_layers = 0);

// CSV with header token_index,token,feature_value.
std::string heatmap_csv(const HeatmapRecord& record);
// CSV with header sent_id,feature_value.
std::string heatmap_sentence_csv(const HeatmapRecord& record);
// Binary PGM strip, one column per token, scaled to the record's maximum.
std::string heatmap_pgm(const HeatmapRecord& record, int cell_width = 4, int height = 24);

}  // namespace docrel
