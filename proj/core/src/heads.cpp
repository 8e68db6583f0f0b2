#include "docrel/heads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "docrel/errors.hpp"

namespace docrel {

namespace {

void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) throw NonFiniteError(std::string(what) + " contains non-finite values");
}

// Window-local row and column sets for one head/tail pair.
struct WindowSelection {
  std::vector<int> rows;
  std::vector<std::vector<int>> columns;  // per sentence
};

std::vector<WindowSelection> select(const EntityGuidedSequence& seq,
                                    std::span<const int> head_rows,
                                    std::span<const int> tail_rows) {
  std::vector<int> all_rows(head_rows.begin(), head_rows.end());
  all_rows.insert(all_rows.end(), tail_rows.begin(), tail_rows.end());
  std::sort(all_rows.begin(), all_rows.end());
  all_rows.erase(std::unique(all_rows.begin(), all_rows.end()), all_rows.end());

  std::vector<WindowSelection> out(seq.windows.size());
  for (std::size_t w = 0; w < seq.windows.size(); ++w) {
    const Window& win = seq.windows[w];
    for (int p : all_rows) {
      if (auto wp = window_position(seq, win, p)) out[w].rows.push_back(*wp);
    }
    out[w].columns.resize(seq.sentence_spans.size());
    for (std::size_t j = 0; j < seq.sentence_spans.size(); ++j) {
      for (int p = seq.sentence_spans[j].start; p < seq.sentence_spans[j].end; ++p) {
        if (auto wp = window_position(seq, win, p)) out[w].columns[j].push_back(*wp);
      }
    }
  }
  return out;
}

void check_layers(const AttentionStack& stack, int last_layers) {
  if (last_layers <= 0 || last_layers > static_cast<int>(stack.size())) {
    throw ConfigError("attention layer count " + std::to_string(last_layers) +
                      " outside [1, " + std::to_string(stack.size()) + "]");
  }
}

// Mean over selected rows of (mean over last layers of (max over heads)).
RowVector pooled_row_average(const AttentionStack& stack, std::span<const int> rows,
                             int last_layers) {
  const int num_layers = static_cast<int>(stack.size());
  const Eigen::Index n = stack.front().front().cols();
  RowVector acc = RowVector::Zero(n);
  for (int l = num_layers - last_layers; l < num_layers; ++l) {
    for (int r : rows) {
      RowVector mx = stack[l].front().row(r);
      for (std::size_t h = 1; h < stack[l].size(); ++h) mx = mx.cwiseMax(stack[l][h].row(r));
      acc += mx;
    }
  }
  return acc / (static_cast<double>(last_layers) * static_cast<double>(rows.size()));
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

Vector sigmoid(const Vector& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

RelationHeadParams RelationHeadParams::zeros(int model_dim, int num_relations) {
  RelationHeadParams p;
  p.weights.assign(num_relations, Matrix::Zero(model_dim, model_dim));
  p.bias = Matrix::Zero(1, num_relations);
  return p;
}

EvidenceBank EvidenceBank::zeros(int model_dim, int relation_dim) {
  EvidenceBank b;
  b.in_weight = Matrix::Zero(static_cast<Eigen::Index>(model_dim) * relation_dim, relation_dim);
  b.in_bias = Matrix::Zero(1, relation_dim);
  b.out_weight = Matrix::Zero(relation_dim, 1);
  b.out_bias = Matrix::Zero(1, 1);
  b.att_weight = Matrix::Zero(1, relation_dim);
  b.att_bias = Matrix::Zero(1, 1);
  return b;
}

RowVector mean_rows(const Matrix& embeddings, std::span<const int> positions) {
  if (positions.empty()) throw ValidationError("cannot average an empty token set");
  RowVector acc = embeddings.row(positions.front());
  for (std::size_t i = 1; i < positions.size(); ++i) acc += embeddings.row(positions[i]);
  if (positions.size() > 1) acc /= static_cast<double>(positions.size());
  return acc;
}

RowVector extract_head_embedding(const Matrix& embeddings, TokenSpan head_span) {
  if (head_span.size() <= 0) throw ValidationError("empty head span");
  std::vector<int> pos;
  for (int p = head_span.start; p < head_span.end; ++p) pos.push_back(p);
  return mean_rows(embeddings, pos);
}

RowVector extract_tail_embedding(const Matrix& embeddings, const Document& doc, int tail_idx,
                                 const EntityGuidedSequence& seq) {
  return mean_rows(embeddings, entity_positions(seq, doc, tail_idx));
}

Matrix extract_sentence_embeddings(const Matrix& embeddings,
                                   std::span<const TokenSpan> sentence_spans) {
  Matrix out(sentence_spans.size(), embeddings.cols());
  for (std::size_t j = 0; j < sentence_spans.size(); ++j) {
    const TokenSpan s = sentence_spans[j];
    if (s.size() <= 0) throw ValidationError("empty sentence span");
    out.row(j) = embeddings.middleRows(s.start, s.size()).colwise().sum() /
                 static_cast<double>(s.size());
  }
  return out;
}

Matrix relation_logits(const RowVector& head, const Matrix& tails,
                       const RelationHeadParams& params) {
  require_finite(head, "head embedding");
  require_finite(tails, "tail embeddings");
  const int nr = params.num_relations();
  Matrix logits(tails.rows(), nr);
  for (int i = 0; i < nr; ++i) {
    const RowVector hw = head * params.weights[i];
    logits.col(i) = (tails * hw.transpose()).array() + params.bias(0, i);
  }
  return logits;
}

Matrix relation_scores(const RowVector& head, const Matrix& tails,
                       const RelationHeadParams& params) {
  return sigmoid(relation_logits(head, tails, params));
}

RelationGradients relation_backward(const RowVector& head, const Matrix& tails,
                                    const RelationHeadParams& params, const Matrix& d_logits,
                                    RelationHeadParams& grads) {
  RelationGradients g;
  g.d_head = RowVector::Zero(head.size());
  g.d_tails = Matrix::Zero(tails.rows(), tails.cols());
  for (int i = 0; i < params.num_relations(); ++i) {
    const Vector dcol = d_logits.col(i);
    if (dcol.isZero(0.0)) continue;
    // sum_k dcol[k] * t_k, as a row vector
    const RowVector weighted_tails = dcol.transpose() * tails;
    grads.weights[i].noalias() += head.transpose() * weighted_tails;
    grads.bias(0, i) += dcol.sum();
    g.d_head.noalias() += weighted_tails * params.weights[i].transpose();
    g.d_tails.noalias() += dcol * (head * params.weights[i]);
  }
  return g;
}

FusedEvidence fused_evidence(const Matrix& sentences, const RowVector& relation_vector,
                             const EvidenceBank& bank) {
  require_finite(sentences, "sentence embeddings");
  require_finite(relation_vector, "relation vector");
  const Eigen::Index d = sentences.cols();
  const Eigen::Index m = bank.relation_dim();
  if (bank.in_weight.rows() != d * m || relation_vector.size() != m) {
    throw ValidationError("evidence head shape mismatch");
  }
  // contracted(a, :) = r^T W[a]
  Matrix contracted(d, m);
  for (Eigen::Index a = 0; a < d; ++a) {
    contracted.row(a) = relation_vector * bank.in_weight.middleRows(a * m, m);
  }
  FusedEvidence out;
  out.fused = (sentences * contracted).rowwise() + bank.in_bias.row(0);
  out.logits = (out.fused * bank.out_weight).col(0).array() + bank.out_bias(0, 0);
  out.probabilities = sigmoid(out.logits);
  return out;
}

FusedGradients fused_evidence_backward(const Matrix& sentences, const RowVector& relation_vector,
                                       const EvidenceBank& bank, const Matrix& d_fused,
                                       const Vector& d_logits, EvidenceBank& grads) {
  const Eigen::Index d = sentences.cols();
  const Eigen::Index m = bank.relation_dim();
  Matrix contracted(d, m);
  for (Eigen::Index a = 0; a < d; ++a) {
    contracted.row(a) = relation_vector * bank.in_weight.middleRows(a * m, m);
  }
  Matrix d_f = d_fused;
  if (d_logits.size() != 0) {
    // plain logits = fused * out_weight + out_bias
    const Matrix fused = (sentences * contracted).rowwise() + bank.in_bias.row(0);
    grads.out_weight.noalias() += fused.transpose() * d_logits;
    grads.out_bias(0, 0) += d_logits.sum();
    d_f.noalias() += d_logits * bank.out_weight.transpose();
  }
  grads.in_bias.row(0) += d_f.colwise().sum();
  const Matrix d_contracted = sentences.transpose() * d_f;  // d x m
  FusedGradients g;
  g.d_relation_vector = RowVector::Zero(m);
  for (Eigen::Index a = 0; a < d; ++a) {
    const auto block = bank.in_weight.middleRows(a * m, m);
    grads.in_weight.middleRows(a * m, m).noalias() +=
        relation_vector.transpose() * d_contracted.row(a);
    g.d_relation_vector.noalias() += d_contracted.row(a) * block.transpose();
  }
  g.d_sentences = d_f * contracted.transpose();
  return g;
}

AttentionFeatures attention_features(const EntityGuidedSequence& seq,
                                     std::span<const AttentionStack> window_attention,
                                     std::span<const int> head_rows,
                                     std::span<const int> tail_rows, int last_layers) {
  if (window_attention.size() != seq.windows.size() || window_attention.empty()) {
    throw ValidationError("attention stacks do not match the sequence windows");
  }
  for (const auto& stack : window_attention) check_layers(stack, last_layers);
  const auto selection = select(seq, head_rows, tail_rows);
  const std::size_t ns = seq.sentence_spans.size();

  AttentionFeatures out;
  out.sentence = Vector::Zero(ns);
  out.token = Vector::Zero(seq.length());
  std::vector<int> sentence_windows(ns, 0);
  std::vector<int> token_windows(seq.length(), 0);
  for (std::size_t w = 0; w < seq.windows.size(); ++w) {
    const WindowSelection& sel = selection[w];
    if (sel.rows.empty()) continue;
    const RowVector pooled = pooled_row_average(window_attention[w], sel.rows, last_layers);
    for (int p = 0; p < seq.length(); ++p) {
      if (auto wp = window_position(seq, seq.windows[w], p)) {
        out.token(p) += pooled(*wp);
        ++token_windows[p];
      }
    }
    for (std::size_t j = 0; j < ns; ++j) {
      const auto& cols = sel.columns[j];
      if (cols.empty()) continue;
      double s = 0.0;
      for (int c : cols) s += pooled(c);
      out.sentence(j) += s / static_cast<double>(cols.size());
      ++sentence_windows[j];
    }
  }
  for (std::size_t j = 0; j < ns; ++j) {
    // stays 0 when no window sees both the entity rows and the sentence
    if (sentence_windows[j] > 1) out.sentence(j) /= sentence_windows[j];
  }
  for (int p = 0; p < seq.length(); ++p) {
    if (token_windows[p] == 0) {
      out.token(p) = std::numeric_limits<double>::quiet_NaN();
    } else if (token_windows[p] > 1) {
      out.token(p) /= token_windows[p];
    }
  }
  return out;
}

Vector attention_sentence_features(const EntityGuidedSequence& seq,
                                   std::span<const AttentionStack> window_attention,
                                   std::span<const int> head_rows,
                                   std::span<const int> tail_rows, int last_layers) {
  return attention_features(seq, window_attention, head_rows, tail_rows, last_layers).sentence;
}

void attention_sentence_features_backward(const EntityGuidedSequence& seq,
                                          std::span<const AttentionStack> window_attention,
                                          std::span<const int> head_rows,
                                          std::span<const int> tail_rows, int last_layers,
                                          const Vector& d_features,
                                          std::vector<AttentionStack>& d_attention) {
  const auto selection = select(seq, head_rows, tail_rows);
  const std::size_t ns = seq.sentence_spans.size();
  std::vector<int> sentence_windows(ns, 0);
  for (const auto& sel : selection) {
    if (sel.rows.empty()) continue;
    for (std::size_t j = 0; j < ns; ++j) {
      if (!sel.columns[j].empty()) ++sentence_windows[j];
    }
  }
  d_attention.resize(seq.windows.size());
  for (std::size_t w = 0; w < seq.windows.size(); ++w) {
    const WindowSelection& sel = selection[w];
    if (sel.rows.empty()) continue;
    const AttentionStack& stack = window_attention[w];
    const int num_layers = static_cast<int>(stack.size());
    const Eigen::Index n = stack.front().front().rows();
    // dL/d(pooled row average) per column of this window
    RowVector d_pooled = RowVector::Zero(n);
    for (std::size_t j = 0; j < ns; ++j) {
      const auto& cols = sel.columns[j];
      if (cols.empty() || d_features(j) == 0.0) continue;
      const double g = d_features(j) / (sentence_windows[j] * static_cast<double>(cols.size()));
      for (int c : cols) d_pooled(c) += g;
    }
    const double row_scale =
        1.0 / (static_cast<double>(last_layers) * static_cast<double>(sel.rows.size()));
    AttentionStack& dstack = d_attention[w];
    dstack.resize(num_layers);
    for (int l = num_layers - last_layers; l < num_layers; ++l) {
      const std::size_t heads = stack[l].size();
      dstack[l].resize(heads);
      for (auto& m : dstack[l]) {
        if (m.size() == 0) m = Matrix::Zero(n, n);
      }
      for (int r : sel.rows) {
        for (Eigen::Index c = 0; c < n; ++c) {
          if (d_pooled(c) == 0.0) continue;
          std::size_t best = 0;
          for (std::size_t h = 1; h < heads; ++h) {
            if (stack[l][h](r, c) > stack[l][best](r, c)) best = h;
          }
          dstack[l][best](r, c) += d_pooled(c) * row_scale;
        }
      }
    }
  }
}

Vector attention_guided_logits(const Vector& features, const Matrix& fused,
                               const EvidenceBank& bank) {
  require_finite(features, "attention features");
  require_finite(fused, "fused representation");
  if (features.size() != fused.rows() || fused.cols() != bank.att_weight.cols()) {
    throw ValidationError("attention-guided evidence shape mismatch");
  }
  const Vector projected = fused * bank.att_weight.transpose();
  return features.cwiseProduct(projected).array() + bank.att_bias(0, 0);
}

Vector attention_guided_evidence(const Vector& features, const Matrix& fused,
                                 const EvidenceBank& bank) {
  return sigmoid(attention_guided_logits(features, fused, bank));
}

AttentionGuidedGradients attention_guided_backward(const Vector& features, const Matrix& fused,
                                                   const EvidenceBank& bank,
                                                   const Vector& d_logits, EvidenceBank& grads) {
  const Vector projected = fused * bank.att_weight.transpose();
  const Vector scaled = d_logits.cwiseProduct(features);
  AttentionGuidedGradients g;
  g.d_features = d_logits.cwiseProduct(projected);
  g.d_fused = scaled * bank.att_weight;
  grads.att_weight.row(0).noalias() += scaled.transpose() * fused;
  grads.att_bias(0, 0) += d_logits.sum();
  return g;
}

}  // namespace docrel
