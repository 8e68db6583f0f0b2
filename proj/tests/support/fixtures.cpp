#include "fixtures.hpp"

#include <sstream>

namespace docrel::testing {

std::vector<std::string> words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

Document make_document(const std::string& title, const std::vector<std::string>& sentences,
                       const std::vector<std::vector<MentionSpec>>& entities,
                       const std::vector<RelationInstance>& relations) {
  Document doc;
  doc.title = title;
  for (const auto& s : sentences) doc.sentences.push_back(words(s));
  for (const auto& mentions : entities) {
    Entity e;
    for (const auto& [sent, start, end] : mentions) {
      Mention m;
      m.sent_id = sent;
      m.span = {start, end};
      for (int i = start; i < end; ++i) {
        if (i > start) m.surface += ' ';
        m.surface += doc.sentences[sent][i];
      }
      m.entity_type = "ENT";
      e.mentions.push_back(m);
    }
    doc.entities.push_back(e);
  }
  doc.gold_relations = relations;
  return doc;
}

Document small_document() {
  return make_document("small",
                       {"alpha beta founded gamma city", "delta lives in alpha beta"},
                       {{{0, 0, 2}, {1, 3, 5}}, {{0, 3, 4}}, {{1, 0, 1}}},
                       {{0, 1, 0, {0}}, {2, 0, 1, {0, 1}}});
}

ModelConfig tiny_model_config(int vocab_size, int num_relations) {
  ModelConfig c;
  c.encoder.num_layers = 2;
  c.encoder.num_heads = 2;
  c.encoder.model_dim = 8;
  c.encoder.ffn_dim = 16;
  c.encoder.vocab_size = vocab_size;
  c.encoder.max_positions = 64;
  c.encoder.dropout = 0.0;
  c.num_relations = num_relations;
  c.relation_dim = 4;
  c.attention_layers = 2;
  c.max_seq_len = 64;
  return c;
}

TrainConfig desk_train_config() {
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.head_learning_rate = 1e-3;
  c.epochs = 200;
  c.seed = 1;
  c.loss.lambda1 = 1.0;
  c.model.encoder.num_layers = 2;
  c.model.encoder.num_heads = 2;
  c.model.encoder.model_dim = 32;
  c.model.encoder.ffn_dim = 64;
  c.model.relation_dim = 16;
  c.model.attention_layers = 2;
  return c;
}

}  // namespace docrel::testing
