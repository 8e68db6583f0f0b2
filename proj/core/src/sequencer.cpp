#include "docrel/sequencer.hpp"

#include <algorithm>

#include "docrel/errors.hpp"

namespace docrel {

namespace {

EntityGuidedSequence assemble(const Document& doc, const Tokenizer& tok,
                              const std::vector<int>& head_ids, int head_entity_idx,
                              int max_len) {
  const int prefix = static_cast<int>(head_ids.size()) + 2;
  if (max_len < prefix + 2) {
    throw ConfigError("max_len " + std::to_string(max_len) + " too small for head prefix of " +
                      std::to_string(head_ids.size()) + " tokens");
  }
  EntityGuidedSequence seq;
  seq.head_entity_idx = head_entity_idx;
  seq.ids.reserve(prefix + doc.num_tokens() + 1);
  seq.ids.push_back(tok.cls_id());
  seq.ids.insert(seq.ids.end(), head_ids.begin(), head_ids.end());
  seq.ids.push_back(tok.sep_id());
  seq.head_span = {1, 1 + static_cast<int>(head_ids.size())};

  for (const auto& sent : doc.sentences) {
    const int sent_start = seq.length();
    for (const auto& word : sent) {
      const int start = seq.length();
      auto piece = tok.encode_word(word);
      if (piece.empty()) {
        throw ConfigError("document '" + doc.title + "': word '" + word +
                          "' tokenizes to nothing");
      }
      seq.ids.insert(seq.ids.end(), piece.begin(), piece.end());
      seq.doc_pos_map.push_back({start, seq.length()});
    }
    seq.sentence_spans.push_back({sent_start, seq.length()});
  }
  seq.ids.push_back(tok.sep_id());
  seq.windows = split_windows(seq, max_len);
  return seq;
}

}  // namespace

EntityGuidedSequence build_sequence(const Document& doc, const Tokenizer& tok,
                                    int head_entity_idx, int max_len) {
  const Mention& first = doc.entities.at(head_entity_idx).mentions.front();
  std::vector<int> head_ids = tok.encode_text(first.surface);
  if (head_ids.empty()) {
    throw ConfigError("document '" + doc.title + "': entity " +
                      std::to_string(head_entity_idx) + " has an empty first mention");
  }
  if (static_cast<int>(head_ids.size()) > max_len / 2) {
    throw ConfigError("document '" + doc.title + "': entity " +
                      std::to_string(head_entity_idx) + " first mention is " +
                      std::to_string(head_ids.size()) + " tokens, more than max_len/2");
  }
  return assemble(doc, tok, head_ids, head_entity_idx, max_len);
}

std::vector<EntityGuidedSequence> build_sequences(const Document& doc, const Tokenizer& tok,
                                                  int max_len) {
  std::vector<EntityGuidedSequence> out;
  out.reserve(doc.entities.size());
  for (int e = 0; e < doc.num_entities(); ++e) out.push_back(build_sequence(doc, tok, e, max_len));
  return out;
}

EntityGuidedSequence build_plain_sequence(const Document& doc, const Tokenizer& tok,
                                          int max_len) {
  return assemble(doc, tok, {}, -1, max_len);
}

std::vector<Window> split_windows(const EntityGuidedSequence& seq, int max_len) {
  const int prefix = seq.prefix_length();
  const int doc_len = seq.doc_length();
  auto make = [&](int offset, int count) {
    Window w;
    w.offset = offset;
    w.doc_length = count;
    w.ids.reserve(prefix + count + 1);
    w.ids.insert(w.ids.end(), seq.ids.begin(), seq.ids.begin() + prefix);
    w.ids.insert(w.ids.end(), seq.ids.begin() + prefix + offset,
                 seq.ids.begin() + prefix + offset + count);
    w.ids.push_back(seq.ids.back());
    return w;
  };
  if (seq.length() <= max_len) return {make(0, doc_len)};

  const int budget = max_len - (seq.head_span.size() + 3);
  if (budget <= 0) throw ConfigError("max_len leaves no room for document tokens");
  if (doc_len > 2 * budget) {
    throw ConfigError("document of " + std::to_string(doc_len) +
                      " tokens exceeds two windows of " + std::to_string(budget));
  }
  return {make(0, budget), make(doc_len - budget, budget)};
}

std::vector<int> coverage_count(const EntityGuidedSequence& seq) {
  std::vector<int> counts(seq.doc_length(), 0);
  for (const auto& w : seq.windows) {
    for (int i = w.offset; i < w.offset + w.doc_length; ++i) ++counts[i];
  }
  return counts;
}

std::optional<int> window_position(const EntityGuidedSequence& seq, const Window& window,
                                   int seq_pos) {
  const int prefix = seq.prefix_length();
  if (seq_pos < 0 || seq_pos >= seq.length()) return std::nullopt;
  if (seq_pos < prefix) return seq_pos;
  if (seq_pos == seq.length() - 1) return window.length() - 1;
  const int d = seq_pos - prefix;
  if (d < window.offset || d >= window.offset + window.doc_length) return std::nullopt;
  return prefix + d - window.offset;
}

std::vector<int> entity_positions(const EntityGuidedSequence& seq, const Document& doc,
                                  int entity_idx) {
  const auto offsets = doc.sentence_offsets();
  std::vector<int> positions;
  for (const auto& m : doc.entities.at(entity_idx).mentions) {
    for (int w = m.span.start; w < m.span.end; ++w) {
      const TokenSpan span = seq.doc_pos_map.at(offsets[m.sent_id] + w);
      for (int p = span.start; p < span.end; ++p) positions.push_back(p);
    }
  }
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
  return positions;
}

std::vector<int> head_positions(const EntityGuidedSequence& seq, const Document& doc,
                                int entity_idx) {
  if (seq.head_span.size() == 0) return entity_positions(seq, doc, entity_idx);
  std::vector<int> positions;
  for (int p = seq.head_span.start; p < seq.head_span.end; ++p) positions.push_back(p);
  return positions;
}

}  // namespace docrel
