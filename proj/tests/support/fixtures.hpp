#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "docrel/corpus.hpp"
#include "docrel/model.hpp"
#include "docrel/pipeline.hpp"
#include "docrel/tokenizer.hpp"

namespace docrel::testing {

// (sent_id, start, end) per mention.
using MentionSpec = std::tuple<int, int, int>;

std::vector<std::string> words(const std::string& text);

// Sentences as whitespace-separated text; mention surfaces are filled in from
// the sentence words.
Document make_document(const std::string& title, const std::vector<std::string>& sentences,
                       const std::vector<std::vector<MentionSpec>>& entities,
                       const std::vector<RelationInstance>& relations = {});

// Three entities over two sentences; relation 0 from entity 0 to 1 with
// evidence {0}, relation 1 from 2 to 0 with evidence {0, 1}.
Document small_document();

// d=8, 2 heads, 2 layers, ffn 16, m=4, no dropout.
ModelConfig tiny_model_config(int vocab_size, int num_relations);

// Training settings used for the synthetic end-to-end runs.
TrainConfig desk_train_config();

}  // namespace docrel::testing
