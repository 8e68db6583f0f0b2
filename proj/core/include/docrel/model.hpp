#pragma once

// The full relation/evidence model: encoder plus heads, per-document
// preparation, and the per-sequence loss with its gradient.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "docrel/corpus.hpp"
#include "docrel/encoder.hpp"
#include "docrel/heads.hpp"
#include "docrel/objectives.hpp"
#include "docrel/sequencer.hpp"
#include "docrel/tokenizer.hpp"

namespace docrel {

inline constexpr int kDefaultAttentionLayers = 3;

struct ModelConfig {
  EncoderConfig encoder;
  int num_relations = 0;
  int relation_dim = kDefaultRelationDim;
  bool per_relation_evidence = false;
  // false: a single prefix-free sequence per document, entity embeddings
  // taken from mention tokens for both head and tail.
  bool entity_guided = true;
  int attention_layers = kDefaultAttentionLayers;
  int max_seq_len = kDefaultMaxSeqLen;

  void validate() const;  // throws ConfigError
  bool operator==(const ModelConfig&) const = default;
};

struct ModelParameters {
  ModelConfig config;
  EncoderParams encoder;
  RelationHeadParams relation;
  RelationEmbeddingTable relation_embeddings;
  EvidenceHeadParams evidence;

  static ModelParameters zeros(const ModelConfig& config);
  static ModelParameters random(const ModelConfig& config, std::uint64_t seed);
  ModelParameters zeros_like() const { return zeros(config); }

  template <typename F>
  void visit(F&& f) {
    encoder.visit(f);
    relation.visit(f);
    relation_embeddings.visit(f);
    evidence.visit(f);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<ModelParameters*>(this)->visit(
        [&](const std::string& name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }

  void set_zero();
  // this += other (shapes must match).
  void accumulate(const ModelParameters& other);
  std::size_t num_scalars() const;
};

// One encoder input and the head entities read from it. Entity-guided mode
// has one head per sequence; the baseline shares one sequence for all heads.
struct SequenceGroup {
  EntityGuidedSequence sequence;
  std::vector<int> heads;
  std::vector<std::vector<int>> entity_positions;  // per entity, sequence coords
};

struct PreparedDocument {
  const Document* doc = nullptr;
  std::vector<SequenceGroup> groups;

  int num_heads() const;
};

PreparedDocument prepare_document(const Document& doc, const Tokenizer& tok,
                                  const ModelConfig& config);

// Gold label matrix (tails x N_r) for one head, tails in increasing entity order.
Matrix relation_labels(const Document& doc, int head, const std::vector<int>& tails,
                       int num_relations);

struct GroupLoss {
  LossBreakdown sum;  // summed over the group's heads
  int heads = 0;
  int evidence_terms = 0;
};

// Loss of one sequence group; when grads is non-null, accumulates dLoss/dθ.
// A non-null rng enables dropout.
GroupLoss group_loss(const ModelParameters& params, const PreparedDocument& prepared,
                     std::size_t group, const LossWeights& weights, int attention_layers,
                     ModelParameters* grads, std::mt19937_64* rng = nullptr);

// Sum over all groups (deterministic order).
GroupLoss document_loss(const ModelParameters& params, const PreparedDocument& prepared,
                        const LossWeights& weights, int attention_layers,
                        ModelParameters* grads);

// Scores and the cached state needed for evidence prediction of one group.
struct GroupInference {
  WindowedEncoding encoding;
  Matrix sentences;
  struct Head {
    int head = 0;
    std::vector<int> tails;
    std::vector<int> rows;
    Matrix probabilities;  // tails x N_r
  };
  std::vector<Head> heads;
};

GroupInference infer_group(const ModelParameters& params, const PreparedDocument& prepared,
                           std::size_t group);

// Attention-guided evidence probabilities for (head, tail, relation) using the
// given relation's embedding.
Vector evidence_probabilities(const ModelParameters& params, const PreparedDocument& prepared,
                              std::size_t group, const GroupInference& inference, int head,
                              int tail, int relation_id, int attention_layers);

}  // namespace docrel
