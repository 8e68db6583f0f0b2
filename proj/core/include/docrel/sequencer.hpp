#pragma once

// Entity-guided input sequences: [CLS] + H + [SEP] + D + [SEP], where H is the
// tokenized first mention of the head entity and D the tokenized document.
// Sequences longer than the encoder limit are covered by two windows that
// share the prefix and slice D from the start and from the end.

#include <optional>
#include <vector>

#include "docrel/corpus.hpp"
#include "docrel/tokenizer.hpp"

namespace docrel {

inline constexpr int kDefaultMaxSeqLen = 512;

struct Window {
  int offset = 0;      // first D token covered
  int doc_length = 0;  // number of D tokens covered
  std::vector<int> ids;

  int length() const { return static_cast<int>(ids.size()); }
};

struct EntityGuidedSequence {
  // -1 for the prefix-free baseline sequence ([CLS] [SEP] D [SEP]).
  int head_entity_idx = -1;
  std::vector<int> ids;               // un-windowed
  TokenSpan head_span;                // positions of H; starts at 1
  std::vector<TokenSpan> doc_pos_map;  // document word -> positions in ids
  std::vector<TokenSpan> sentence_spans;
  std::vector<Window> windows;

  int prefix_length() const { return head_span.end + 1; }  // [CLS] H [SEP]
  int doc_length() const { return length() - prefix_length() - 1; }
  int length() const { return static_cast<int>(ids.size()); }
  bool windowed() const { return windows.size() > 1; }
};

// One sequence per entity, in entity order.
std::vector<EntityGuidedSequence> build_sequences(const Document& doc,
                                                  const Tokenizer& tok,
                                                  int max_len = kDefaultMaxSeqLen);

EntityGuidedSequence build_sequence(const Document& doc, const Tokenizer& tok,
                                    int head_entity_idx, int max_len);

// The same layout with an empty H, shared by every head entity.
EntityGuidedSequence build_plain_sequence(const Document& doc, const Tokenizer& tok,
                                          int max_len = kDefaultMaxSeqLen);

std::vector<Window> split_windows(const EntityGuidedSequence& seq, int max_len);

// Number of windows covering each D token (1 or 2).
std::vector<int> coverage_count(const EntityGuidedSequence& seq);

// Position of an un-windowed sequence position inside a window, if covered.
std::optional<int> window_position(const EntityGuidedSequence& seq, const Window& window,
                                   int seq_pos);

// Sequence positions of every token of every mention of an entity.
std::vector<int> entity_positions(const EntityGuidedSequence& seq, const Document& doc,
                                  int entity_idx);

std::vector<int> head_positions(const EntityGuidedSequence& seq, const Document& doc,
                                int entity_idx);

}  // namespace docrel
