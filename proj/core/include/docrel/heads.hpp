#pragma once

// Readouts on top of the encoder: entity and sentence embeddings, the bilinear
// relation classifier, the relation-conditioned sentence representation, the
// pooled attention feature per sentence, and the attention-guided evidence
// classifier. Each forward op has a matching vector-Jacobian product used by
// the training loop.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "docrel/encoder.hpp"

namespace docrel {

inline constexpr int kDefaultRelationDim = 108;

struct RelationHeadParams {
  std::vector<Matrix> weights;  // per relation, d x d
  Matrix bias;                  // 1 x N_r

  int num_relations() const { return static_cast<int>(weights.size()); }
  static RelationHeadParams zeros(int model_dim, int num_relations);

  template <typename F>
  void visit(F&& f) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      f("relation.weight." + std::to_string(i), weights[i]);
    }
    f("relation.bias", bias);
  }
};

struct RelationEmbeddingTable {
  Matrix vectors;  // N_r x m

  template <typename F>
  void visit(F&& f) { f("relation_embedding", vectors); }
};

// One set of evidence-head weights. The fused representation of sentence j
// under relation vector r is f_j = sum_{a,b} s_j[a] r[b] W[a][b][:] + in_bias,
// where W[a] is stored as the m x m block in rows [a*m, (a+1)*m) of
// in_weight.
struct EvidenceBank {
  Matrix in_weight;   // (d*m) x m
  Matrix in_bias;     // 1 x m
  Matrix out_weight;  // m x 1
  Matrix out_bias;    // 1 x 1
  Matrix att_weight;  // 1 x m
  Matrix att_bias;    // 1 x 1

  static EvidenceBank zeros(int model_dim, int relation_dim);
  int relation_dim() const { return static_cast<int>(in_bias.cols()); }

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "in_weight", in_weight);
    f(prefix + "in_bias", in_bias);
    f(prefix + "out_weight", out_weight);
    f(prefix + "out_bias", out_bias);
    f(prefix + "att_weight", att_weight);
    f(prefix + "att_bias", att_bias);
  }
};

// Either one bank shared by all relations or one bank per relation.
struct EvidenceHeadParams {
  std::vector<EvidenceBank> banks;

  const EvidenceBank& bank(int relation_id) const {
    return banks.size() == 1 ? banks.front() : banks.at(relation_id);
  }
  EvidenceBank& bank(int relation_id) {
    return banks.size() == 1 ? banks.front() : banks.at(relation_id);
  }

  template <typename F>
  void visit(F&& f) {
    for (std::size_t i = 0; i < banks.size(); ++i) {
      banks[i].visit("evidence." + std::to_string(i) + ".", f);
    }
  }
};

RowVector mean_rows(const Matrix& embeddings, std::span<const int> positions);

RowVector extract_head_embedding(const Matrix& embeddings, TokenSpan head_span);
RowVector extract_tail_embedding(const Matrix& embeddings, const Document& doc, int tail_idx,
                                 const EntityGuidedSequence& seq);
Matrix extract_sentence_embeddings(const Matrix& embeddings,
                                   std::span<const TokenSpan> sentence_spans);

// (N_tails x N_r) pre-sigmoid scores h^T W_i t_k + b_i.
Matrix relation_logits(const RowVector& head, const Matrix& tails,
                       const RelationHeadParams& params);
Matrix relation_scores(const RowVector& head, const Matrix& tails,
                       const RelationHeadParams& params);

struct RelationGradients {
  RowVector d_head;
  Matrix d_tails;
};
RelationGradients relation_backward(const RowVector& head, const Matrix& tails,
                                    const RelationHeadParams& params, const Matrix& d_logits,
                                    RelationHeadParams& grads);

struct FusedEvidence {
  Matrix fused;         // N_s x m
  Vector logits;        // plain evidence logits
  Vector probabilities;
};

FusedEvidence fused_evidence(const Matrix& sentences, const RowVector& relation_vector,
                             const EvidenceBank& bank);

struct FusedGradients {
  Matrix d_sentences;
  RowVector d_relation_vector;
};
// d_fused: dL/d(fused) (N_s x m); d_logits: dL/d(plain logits), may be empty.
FusedGradients fused_evidence_backward(const Matrix& sentences, const RowVector& relation_vector,
                                       const EvidenceBank& bank, const Matrix& d_fused,
                                       const Vector& d_logits, EvidenceBank& grads);

// Pooled attention feature per sentence for one head/tail pair: max over
// heads, mean over the last `last_layers` layers, mean over the head and tail
// rows, mean over each sentence's columns. With two windows the feature is
// computed per window and averaged over the windows that contain both some
// head/tail row and some of the sentence's tokens; 0 if there is none.
struct AttentionFeatures {
  Vector sentence;  // N_s
  Vector token;     // per un-windowed sequence position, NaN where uncovered
};

AttentionFeatures attention_features(const EntityGuidedSequence& seq,
                                     std::span<const AttentionStack> window_attention,
                                     std::span<const int> head_rows,
                                     std::span<const int> tail_rows, int last_layers);

Vector attention_sentence_features(const EntityGuidedSequence& seq,
                                   std::span<const AttentionStack> window_attention,
                                   std::span<const int> head_rows,
                                   std::span<const int> tail_rows, int last_layers);

// Adds dL/d(attention) into d_attention (one stack per window, layers and
// heads allocated on demand).
void attention_sentence_features_backward(const EntityGuidedSequence& seq,
                                          std::span<const AttentionStack> window_attention,
                                          std::span<const int> head_rows,
                                          std::span<const int> tail_rows, int last_layers,
                                          const Vector& d_features,
                                          std::vector<AttentionStack>& d_attention);

// Per-sentence logit a_j * <att_weight, f_j> + att_bias.
Vector attention_guided_logits(const Vector& features, const Matrix& fused,
                               const EvidenceBank& bank);
Vector attention_guided_evidence(const Vector& features, const Matrix& fused,
                                 const EvidenceBank& bank);

struct AttentionGuidedGradients {
  Vector d_features;
  Matrix d_fused;
};
AttentionGuidedGradients attention_guided_backward(const Vector& features, const Matrix& fused,
                                                   const EvidenceBank& bank,
                                                   const Vector& d_logits, EvidenceBank& grads);

double sigmoid(double x);
Matrix sigmoid(const Matrix& x);
Vector sigmoid(const Vector& x);

}  // namespace docrel
