#include "docrel/model.hpp"

#include <cmath>
#include <map>

#include "docrel/errors.hpp"

namespace docrel {

namespace {

void fill_normal(Matrix& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
  }
}

std::vector<int> other_entities(int num_entities, int head) {
  std::vector<int> tails;
  for (int e = 0; e < num_entities; ++e) {
    if (e != head) tails.push_back(e);
  }
  return tails;
}

void scatter_mean(Matrix& d_embeddings, const std::vector<int>& positions, const RowVector& g) {
  const double inv = 1.0 / static_cast<double>(positions.size());
  for (int p : positions) d_embeddings.row(p) += g * inv;
}

struct EncodedGroup {
  std::vector<EncoderTrace> traces;
  WindowedEncoding encoding;
};

EncodedGroup encode_group(const ModelParameters& params, const EntityGuidedSequence& seq,
                          std::mt19937_64* rng) {
  EncodedGroup out;
  std::vector<EncoderOutput> outputs;
  for (const auto& w : seq.windows) {
    out.traces.push_back(encode_traced(std::span<const int>(w.ids), params.encoder, rng));
    outputs.push_back(out.traces.back().output);
  }
  out.encoding = merge_windows(seq, outputs);
  return out;
}

}  // namespace

void ModelConfig::validate() const {
  encoder.validate();
  if (num_relations <= 0) throw ConfigError("model needs at least one relation");
  if (relation_dim <= 0) throw ConfigError("relation_dim must be positive");
  if (attention_layers <= 0 || attention_layers > encoder.num_layers) {
    throw ConfigError("attention_layers " + std::to_string(attention_layers) +
                      " must be in [1, " + std::to_string(encoder.num_layers) + "]");
  }
  if (max_seq_len <= 4 || max_seq_len > encoder.max_positions) {
    throw ConfigError("max_seq_len must be in (4, encoder max positions]");
  }
}

ModelParameters ModelParameters::zeros(const ModelConfig& config) {
  config.validate();
  ModelParameters p;
  p.config = config;
  p.encoder = EncoderParams::zeros(config.encoder);
  p.relation = RelationHeadParams::zeros(config.encoder.model_dim, config.num_relations);
  p.relation_embeddings.vectors = Matrix::Zero(config.num_relations, config.relation_dim);
  const int banks = config.per_relation_evidence ? config.num_relations : 1;
  p.evidence.banks.assign(banks, EvidenceBank::zeros(config.encoder.model_dim, config.relation_dim));
  return p;
}

ModelParameters ModelParameters::random(const ModelConfig& config, std::uint64_t seed) {
  ModelParameters p = zeros(config);
  p.encoder = EncoderParams::random(config.encoder, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const double d = config.encoder.model_dim;
  const double m = config.relation_dim;
  for (auto& w : p.relation.weights) fill_normal(w, 1.0 / d, rng);
  fill_normal(p.relation_embeddings.vectors, 1.0, rng);
  for (auto& bank : p.evidence.banks) {
    fill_normal(bank.in_weight, 1.0 / std::sqrt(d * m), rng);
    fill_normal(bank.out_weight, 1.0 / std::sqrt(m), rng);
    fill_normal(bank.att_weight, 1.0 / std::sqrt(m), rng);
  }
  return p;
}

void ModelParameters::set_zero() {
  visit([](const std::string&, Matrix& m) { m.setZero(); });
}

void ModelParameters::accumulate(const ModelParameters& other) {
  std::vector<const Matrix*> theirs;
  other.visit([&](const std::string&, const Matrix& m) { theirs.push_back(&m); });
  std::size_t i = 0;
  visit([&](const std::string&, Matrix& m) { m += *theirs.at(i++); });
}

std::size_t ModelParameters::num_scalars() const {
  std::size_t n = 0;
  visit([&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

int PreparedDocument::num_heads() const {
  int n = 0;
  for (const auto& g : groups) n += static_cast<int>(g.heads.size());
  return n;
}

PreparedDocument prepare_document(const Document& doc, const Tokenizer& tok,
                                  const ModelConfig& config) {
  PreparedDocument out;
  out.doc = &doc;
  auto add_group = [&](EntityGuidedSequence seq, std::vector<int> heads) {
    SequenceGroup g;
    g.sequence = std::move(seq);
    g.heads = std::move(heads);
    for (int e = 0; e < doc.num_entities(); ++e) {
      g.entity_positions.push_back(entity_positions(g.sequence, doc, e));
    }
    out.groups.push_back(std::move(g));
  };
  if (config.entity_guided) {
    for (int e = 0; e < doc.num_entities(); ++e) {
      add_group(build_sequence(doc, tok, e, config.max_seq_len), {e});
    }
  } else {
    std::vector<int> heads;
    for (int e = 0; e < doc.num_entities(); ++e) heads.push_back(e);
    add_group(build_plain_sequence(doc, tok, config.max_seq_len), std::move(heads));
  }
  return out;
}

Matrix relation_labels(const Document& doc, int head, const std::vector<int>& tails,
                       int num_relations) {
  Matrix labels = Matrix::Zero(static_cast<Eigen::Index>(tails.size()), num_relations);
  for (const auto& rel : doc.gold_relations) {
    if (rel.head_idx != head) continue;
    for (std::size_t k = 0; k < tails.size(); ++k) {
      if (tails[k] == rel.tail_idx) labels(static_cast<Eigen::Index>(k), rel.relation_id) = 1.0;
    }
  }
  return labels;
}

GroupLoss group_loss(const ModelParameters& params, const PreparedDocument& prepared,
                     std::size_t group, const LossWeights& weights, int attention_layers,
                     ModelParameters* grads, std::mt19937_64* rng) {
  const Document& doc = *prepared.doc;
  const SequenceGroup& g = prepared.groups.at(group);
  const EntityGuidedSequence& seq = g.sequence;
  const int nr = params.config.num_relations;
  const int ns = doc.num_sentences();
  const int d = params.config.encoder.model_dim;

  EncodedGroup enc = encode_group(params, seq, rng);
  const Matrix& emb = enc.encoding.embeddings;
  const Matrix sentences = extract_sentence_embeddings(emb, seq.sentence_spans);

  Matrix d_emb;
  Matrix d_sentences;
  std::vector<AttentionStack> d_attention;
  if (grads != nullptr) {
    d_emb = Matrix::Zero(emb.rows(), d);
    d_sentences = Matrix::Zero(ns, d);
  }

  // Fused representations are per relation, shared by every head in the group.
  std::map<int, FusedEvidence> fused_cache;
  std::map<int, std::pair<Matrix, Vector>> fused_grads;  // d_fused, d_plain_logits
  auto fused_for = [&](int rel) -> const FusedEvidence& {
    auto it = fused_cache.find(rel);
    if (it == fused_cache.end()) {
      it = fused_cache
               .emplace(rel, fused_evidence(sentences, params.relation_embeddings.vectors.row(rel),
                                            params.evidence.bank(rel)))
               .first;
    }
    return it->second;
  };

  GroupLoss result;
  for (int head : g.heads) {
    const std::vector<int> tails = other_entities(doc.num_entities(), head);
    const std::vector<int> head_rows =
        params.config.entity_guided ? head_positions(seq, doc, head) : g.entity_positions[head];
    LossBreakdown loss;
    ++result.heads;

    if (!tails.empty()) {
      const RowVector h = mean_rows(emb, head_rows);
      Matrix t(static_cast<Eigen::Index>(tails.size()), d);
      for (std::size_t k = 0; k < tails.size(); ++k) {
        t.row(static_cast<Eigen::Index>(k)) = mean_rows(emb, g.entity_positions[tails[k]]);
      }
      const Matrix probs = relation_scores(h, t, params.relation);
      const Matrix labels = relation_labels(doc, head, tails, nr);
      loss.relation = relation_loss(probs, labels);
      if (grads != nullptr) {
        const Matrix d_logits =
            bce_logit_gradient(probs, labels, 1.0 / static_cast<double>(probs.size()));
        const RelationGradients rg = relation_backward(h, t, params.relation, d_logits, grads->relation);
        scatter_mean(d_emb, head_rows, rg.d_head);
        for (std::size_t k = 0; k < tails.size(); ++k) {
          scatter_mean(d_emb, g.entity_positions[tails[k]], rg.d_tails.row(static_cast<Eigen::Index>(k)));
        }
      }
    }

    // Evidence terms: one per gold (tail, relation) of this head.
    std::vector<EvidenceTerm> att_terms;
    std::vector<EvidenceTerm> plain_terms;
    struct TermState {
      int tail;
      int relation;
      Vector features;
    };
    std::vector<TermState> states;
    for (const auto& rel : doc.gold_relations) {
      if (rel.head_idx != head) continue;
      Vector targets = Vector::Zero(ns);
      for (int s : rel.evidence) targets(s) = 1.0;
      const FusedEvidence& fused = fused_for(rel.relation_id);
      Vector features = attention_sentence_features(seq, enc.encoding.window_attention, head_rows,
                                                    g.entity_positions[rel.tail_idx],
                                                    attention_layers);
      att_terms.push_back({attention_guided_evidence(features, fused.fused,
                                                     params.evidence.bank(rel.relation_id)),
                           targets});
      plain_terms.push_back({fused.probabilities, targets});
      states.push_back({rel.tail_idx, rel.relation_id, std::move(features)});
    }
    loss.evidence_attention = evidence_loss(att_terms);
    loss.evidence_plain = evidence_loss(plain_terms);
    loss.total = joint_loss(loss.relation, loss.evidence_attention, weights, loss.evidence_plain);
    result.evidence_terms += static_cast<int>(att_terms.size());

    if (grads != nullptr && !att_terms.empty()) {
      const double scale = 1.0 / (static_cast<double>(att_terms.size()) * ns);
      for (std::size_t i = 0; i < att_terms.size(); ++i) {
        const TermState& st = states[i];
        const FusedEvidence& fused = fused_for(st.relation);
        EvidenceBank& bank_grads = grads->evidence.bank(st.relation);
        auto [fg_it, inserted] = fused_grads.try_emplace(st.relation);
        if (inserted) {
          fg_it->second.first = Matrix::Zero(ns, params.config.relation_dim);
          fg_it->second.second = Vector::Zero(ns);
        }
        if (weights.lambda1 != 0.0) {
          const Vector d_logits = bce_logit_gradient(att_terms[i].probabilities,
                                                     att_terms[i].targets, weights.lambda1 * scale);
          const AttentionGuidedGradients ag = attention_guided_backward(
              st.features, fused.fused, params.evidence.bank(st.relation), d_logits, bank_grads);
          fg_it->second.first += ag.d_fused;
          attention_sentence_features_backward(seq, enc.encoding.window_attention, head_rows,
                                               g.entity_positions[st.tail], attention_layers,
                                               ag.d_features, d_attention);
        }
        if (weights.include_plain_evidence_loss && weights.lambda2 != 0.0) {
          fg_it->second.second += bce_logit_gradient(plain_terms[i].probabilities,
                                                     plain_terms[i].targets, weights.lambda2 * scale);
        }
      }
    }
    result.sum.relation += loss.relation;
    result.sum.evidence_attention += loss.evidence_attention;
    result.sum.evidence_plain += loss.evidence_plain;
    result.sum.total += loss.total;
  }

  if (grads == nullptr) return result;

  for (auto& [rel, dg] : fused_grads) {
    const RowVector r = params.relation_embeddings.vectors.row(rel);
    const bool has_plain = !dg.second.isZero(0.0);
    const FusedGradients fg =
        fused_evidence_backward(sentences, r, params.evidence.bank(rel), dg.first,
                                has_plain ? dg.second : Vector(), grads->evidence.bank(rel));
    d_sentences += fg.d_sentences;
    grads->relation_embeddings.vectors.row(rel) += fg.d_relation_vector;
  }
  for (int j = 0; j < ns; ++j) {
    const TokenSpan span = seq.sentence_spans[j];
    const RowVector gj = d_sentences.row(j) / static_cast<double>(span.size());
    for (int p = span.start; p < span.end; ++p) d_emb.row(p) += gj;
  }

  const std::vector<Matrix> d_windows = split_embedding_gradient(seq, d_emb, d);
  for (std::size_t w = 0; w < seq.windows.size(); ++w) {
    const AttentionStack* da = w < d_attention.size() ? &d_attention[w] : nullptr;
    encoder_backward(enc.traces[w], params.encoder, d_windows[w], da, grads->encoder);
  }
  return result;
}

GroupLoss document_loss(const ModelParameters& params, const PreparedDocument& prepared,
                        const LossWeights& weights, int attention_layers,
                        ModelParameters* grads) {
  GroupLoss total;
  for (std::size_t g = 0; g < prepared.groups.size(); ++g) {
    const GroupLoss gl = group_loss(params, prepared, g, weights, attention_layers, grads);
    total.sum.relation += gl.sum.relation;
    total.sum.evidence_attention += gl.sum.evidence_attention;
    total.sum.evidence_plain += gl.sum.evidence_plain;
    total.sum.total += gl.sum.total;
    total.heads += gl.heads;
    total.evidence_terms += gl.evidence_terms;
  }
  return total;
}

GroupInference infer_group(const ModelParameters& params, const PreparedDocument& prepared,
                           std::size_t group) {
  const Document& doc = *prepared.doc;
  const SequenceGroup& g = prepared.groups.at(group);
  const int d = params.config.encoder.model_dim;
  GroupInference out;
  out.encoding = encode_with_windows(g.sequence, params.encoder);
  const Matrix& emb = out.encoding.embeddings;
  out.sentences = extract_sentence_embeddings(emb, g.sequence.sentence_spans);
  for (int head : g.heads) {
    GroupInference::Head h;
    h.head = head;
    h.tails = other_entities(doc.num_entities(), head);
    h.rows = params.config.entity_guided ? head_positions(g.sequence, doc, head)
                                         : g.entity_positions[head];
    if (!h.tails.empty()) {
      const RowVector hv = mean_rows(emb, h.rows);
      Matrix t(static_cast<Eigen::Index>(h.tails.size()), d);
      for (std::size_t k = 0; k < h.tails.size(); ++k) {
        t.row(static_cast<Eigen::Index>(k)) = mean_rows(emb, g.entity_positions[h.tails[k]]);
      }
      h.probabilities = relation_scores(hv, t, params.relation);
    } else {
      h.probabilities = Matrix::Zero(0, params.config.num_relations);
    }
    out.heads.push_back(std::move(h));
  }
  return out;
}

Vector evidence_probabilities(const ModelParameters& params, const PreparedDocument& prepared,
                              std::size_t group, const GroupInference& inference, int head,
                              int tail, int relation_id, int attention_layers) {
  const SequenceGroup& g = prepared.groups.at(group);
  const GroupInference::Head* h = nullptr;
  for (const auto& cand : inference.heads) {
    if (cand.head == head) h = &cand;
  }
  if (h == nullptr) throw ValidationError("head entity not part of this sequence group");
  const EvidenceBank& bank = params.evidence.bank(relation_id);
  const FusedEvidence fused = fused_evidence(
      inference.sentences, params.relation_embeddings.vectors.row(relation_id), bank);
  const Vector features =
      attention_sentence_features(g.sequence, inference.encoding.window_attention, h->rows,
                                  g.entity_positions[tail], attention_layers);
  return attention_guided_evidence(features, fused.fused, bank);
}

}  // namespace docrel
