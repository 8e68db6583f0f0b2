#pragma once

// Reference transformer encoder. It exposes the post-softmax self-attention
// probabilities of every layer and head next to the token embeddings, and
// supports a manual backward pass that accepts gradients on both.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "docrel/sequencer.hpp"

namespace docrel {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Vector = Eigen::VectorXd;

struct EncoderConfig {
  int num_layers = 2;
  int num_heads = 2;
  int model_dim = 32;
  int ffn_dim = 64;
  int vocab_size = 0;
  int max_positions = kDefaultMaxSeqLen;
  double dropout = 0.1;
  double layer_norm_eps = 1e-12;

  int head_dim() const { return model_dim / num_heads; }
  void validate() const;  // throws ConfigError
  bool operator==(const EncoderConfig&) const = default;
};

// attention[layer][head] is an L x L row-stochastic matrix.
using AttentionStack = std::vector<std::vector<Matrix>>;

struct EncoderOutput {
  Matrix embeddings;  // L x d
  AttentionStack attention;

  int length() const { return static_cast<int>(embeddings.rows()); }
};

struct LayerParams {
  Matrix wq, wk, wv, wo;  // d x d
  Matrix bq, bk, bv, bo;  // 1 x d
  Matrix ln1_gain, ln1_bias;
  Matrix w1;  // d x ffn
  Matrix b1;  // 1 x ffn
  Matrix w2;  // ffn x d
  Matrix b2;
  Matrix ln2_gain, ln2_bias;

  template <typename F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "wq", wq); f(prefix + "bq", bq);
    f(prefix + "wk", wk); f(prefix + "bk", bk);
    f(prefix + "wv", wv); f(prefix + "bv", bv);
    f(prefix + "wo", wo); f(prefix + "bo", bo);
    f(prefix + "ln1_gain", ln1_gain); f(prefix + "ln1_bias", ln1_bias);
    f(prefix + "w1", w1); f(prefix + "b1", b1);
    f(prefix + "w2", w2); f(prefix + "b2", b2);
    f(prefix + "ln2_gain", ln2_gain); f(prefix + "ln2_bias", ln2_bias);
  }
};

struct EncoderParams {
  EncoderConfig config;
  Matrix token_embedding;     // vocab x d
  Matrix position_embedding;  // max_positions x d
  Matrix embed_ln_gain, embed_ln_bias;
  std::vector<LayerParams> layers;

  static EncoderParams zeros(const EncoderConfig& config);
  static EncoderParams random(const EncoderConfig& config, std::uint64_t seed);

  template <typename F>
  void visit(F&& f) {
    f("encoder.token_embedding", token_embedding);
    f("encoder.position_embedding", position_embedding);
    f("encoder.embed_ln_gain", embed_ln_gain);
    f("encoder.embed_ln_bias", embed_ln_bias);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].visit("encoder.layer" + std::to_string(i) + ".", f);
    }
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<EncoderParams*>(this)->visit(
        [&](const std::string& name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }
};

struct LayerNormTrace {
  Matrix normalized;  // x-hat
  Vector inv_std;
};

struct LayerTrace {
  Matrix input;
  Matrix q, k, v;
  std::vector<Matrix> attention_dropout;  // per head, empty when disabled
  Matrix context;
  Matrix attn_out_dropout;
  LayerNormTrace ln1;
  Matrix hidden;  // ln1 output
  Matrix ff_pre;
  Matrix ff_act;
  Matrix ff_dropout;
  LayerNormTrace ln2;
};

// Everything the backward pass needs from one forward pass.
struct EncoderTrace {
  std::vector<int> ids;
  LayerNormTrace embed_ln;
  Matrix embed_dropout;
  std::vector<LayerTrace> layers;
  EncoderOutput output;
};

// Deterministic forward pass in evaluation mode (no dropout).
EncoderOutput encode(std::span<const int> ids, const EncoderParams& params);
EncoderOutput encode(const Window& window, const EncoderParams& params);

// Forward pass that records intermediates. Dropout is applied when rng is
// non-null and config.dropout > 0; the exposed attention probabilities are
// always taken before attention dropout.
EncoderTrace encode_traced(std::span<const int> ids, const EncoderParams& params,
                           std::mt19937_64* rng = nullptr);

// Accumulates parameter gradients into grads given dL/d(embeddings) and,
// optionally, dL/d(attention) with the same layout as the attention stack
// (layers or heads may be left empty to mean zero).
void encoder_backward(const EncoderTrace& trace, const EncoderParams& params,
                      const Matrix& d_embeddings, const AttentionStack* d_attention,
                      EncoderParams& grads);

// Per-window encoder outputs merged back to un-windowed sequence positions.
// Embeddings of a position are averaged over the windows that cover it; the
// attention stacks stay per window.
struct WindowedEncoding {
  Matrix embeddings;  // seq.length() x d
  std::vector<AttentionStack> window_attention;
};

WindowedEncoding merge_windows(const EntityGuidedSequence& seq,
                               std::span<const EncoderOutput> window_outputs);
WindowedEncoding encode_with_windows(const EntityGuidedSequence& seq,
                                     const EncoderParams& params);

// Adjoint of merge_windows for the embeddings: dL/d(window embeddings).
std::vector<Matrix> split_embedding_gradient(const EntityGuidedSequence& seq,
                                             const Matrix& d_embeddings, int model_dim);

}  // namespace docrel
