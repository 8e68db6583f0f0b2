#include "docrel/encoder.hpp"

#include <cmath>

#include "docrel/errors.hpp"

namespace docrel {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, double eps,
                  LayerNormTrace& trace) {
  const Eigen::Index n = x.rows();
  const double d = static_cast<double>(x.cols());
  trace.normalized.resize(n, x.cols());
  trace.inv_std.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = x.row(i).sum() / d;
    const RowVector centered = x.row(i).array() - mean;
    const double var = centered.squaredNorm() / d;
    const double inv = 1.0 / std::sqrt(var + eps);
    trace.inv_std(i) = inv;
    trace.normalized.row(i) = centered * inv;
  }
  return (trace.normalized.array().rowwise() * gain.row(0).array()).rowwise() +
         bias.row(0).array();
}

// Returns dL/dx; accumulates gain/bias gradients.
Matrix layer_norm_backward(const LayerNormTrace& trace, const Matrix& gain, const Matrix& dy,
                           Matrix& d_gain, Matrix& d_bias) {
  const double d = static_cast<double>(dy.cols());
  d_gain.row(0) += (dy.array() * trace.normalized.array()).colwise().sum().matrix();
  d_bias.row(0) += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double mean_dxhat = dxhat.row(i).sum() / d;
    const double mean_dot = dxhat.row(i).dot(trace.normalized.row(i)) / d;
    dx.row(i) = trace.inv_std(i) *
                (dxhat.row(i).array() - mean_dxhat - trace.normalized.row(i).array() * mean_dot)
                    .matrix();
  }
  return dx;
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64* rng) {
  if (rng == nullptr || rate <= 0.0) return {};
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Matrix mask(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) mask(i, j) = keep(*rng) ? scale : 0.0;
  }
  return mask;
}

Matrix apply_mask(const Matrix& x, const Matrix& mask) {
  if (mask.size() == 0) return x;
  return x.cwiseProduct(mask);
}

void softmax_rows(Matrix& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double mx = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - mx).exp();
    s.row(i) /= s.row(i).sum();
  }
}

Matrix add_bias(const Matrix& x, const Matrix& bias) {
  return x.rowwise() + bias.row(0);
}

void fill_normal(Matrix& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (num_layers <= 0 || num_heads <= 0 || model_dim <= 0 || ffn_dim <= 0 ||
      vocab_size <= 0 || max_positions <= 0) {
    throw ConfigError("encoder dimensions must be positive");
  }
  if (model_dim % num_heads != 0) {
    throw ConfigError("model_dim " + std::to_string(model_dim) +
                      " not divisible by num_heads " + std::to_string(num_heads));
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
}

EncoderParams EncoderParams::zeros(const EncoderConfig& config) {
  config.validate();
  const int d = config.model_dim;
  const int f = config.ffn_dim;
  EncoderParams p;
  p.config = config;
  p.token_embedding = Matrix::Zero(config.vocab_size, d);
  p.position_embedding = Matrix::Zero(config.max_positions, d);
  p.embed_ln_gain = Matrix::Zero(1, d);
  p.embed_ln_bias = Matrix::Zero(1, d);
  p.layers.resize(config.num_layers);
  for (auto& layer : p.layers) {
    layer.wq = layer.wk = layer.wv = layer.wo = Matrix::Zero(d, d);
    layer.bq = layer.bk = layer.bv = layer.bo = Matrix::Zero(1, d);
    layer.ln1_gain = layer.ln1_bias = layer.ln2_gain = layer.ln2_bias = Matrix::Zero(1, d);
    layer.w1 = Matrix::Zero(d, f);
    layer.b1 = Matrix::Zero(1, f);
    layer.w2 = Matrix::Zero(f, d);
    layer.b2 = Matrix::Zero(1, d);
  }
  return p;
}

EncoderParams EncoderParams::random(const EncoderConfig& config, std::uint64_t seed) {
  EncoderParams p = zeros(config);
  std::mt19937_64 rng(seed);
  const double d = config.model_dim;
  fill_normal(p.token_embedding, 1.0, rng);
  fill_normal(p.position_embedding, 1.0, rng);
  p.embed_ln_gain.setOnes();
  for (auto& layer : p.layers) {
    for (Matrix* w : {&layer.wq, &layer.wk, &layer.wv, &layer.wo, &layer.w1}) {
      fill_normal(*w, 1.0 / std::sqrt(d), rng);
    }
    fill_normal(layer.w2, 1.0 / std::sqrt(static_cast<double>(config.ffn_dim)), rng);
    layer.ln1_gain.setOnes();
    layer.ln2_gain.setOnes();
  }
  return p;
}

EncoderTrace encode_traced(std::span<const int> ids, const EncoderParams& params,
                           std::mt19937_64* rng) {
  const EncoderConfig& cfg = params.config;
  const int n = static_cast<int>(ids.size());
  if (n == 0) throw ConfigError("cannot encode an empty sequence");
  if (n > cfg.max_positions) {
    throw ConfigError("sequence of length " + std::to_string(n) + " exceeds max positions " +
                      std::to_string(cfg.max_positions));
  }
  const int d = cfg.model_dim;
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  EncoderTrace trace;
  trace.ids.assign(ids.begin(), ids.end());

  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    if (ids[i] < 0 || ids[i] >= cfg.vocab_size) {
      throw ConfigError("token id " + std::to_string(ids[i]) + " outside vocabulary");
    }
    x.row(i) = params.token_embedding.row(ids[i]) + params.position_embedding.row(i);
  }
  Matrix h = layer_norm(x, params.embed_ln_gain, params.embed_ln_bias, cfg.layer_norm_eps,
                        trace.embed_ln);
  trace.embed_dropout = dropout_mask(n, d, cfg.dropout, rng);
  h = apply_mask(h, trace.embed_dropout);

  trace.output.attention.resize(cfg.num_layers);
  trace.layers.resize(cfg.num_layers);
  for (int l = 0; l < cfg.num_layers; ++l) {
    const LayerParams& lp = params.layers[l];
    LayerTrace& lt = trace.layers[l];
    lt.input = h;
    lt.q = add_bias(h * lp.wq, lp.bq);
    lt.k = add_bias(h * lp.wk, lp.bk);
    lt.v = add_bias(h * lp.wv, lp.bv);
    lt.context.resize(n, d);
    auto& probs = trace.output.attention[l];
    probs.resize(cfg.num_heads);
    lt.attention_dropout.resize(cfg.num_heads);
    for (int hd = 0; hd < cfg.num_heads; ++hd) {
      const auto qh = lt.q.middleCols(hd * dh, dh);
      const auto kh = lt.k.middleCols(hd * dh, dh);
      Matrix s = (qh * kh.transpose()) * scale;
      softmax_rows(s);
      probs[hd] = s;
      lt.attention_dropout[hd] = dropout_mask(n, n, cfg.dropout, rng);
      lt.context.middleCols(hd * dh, dh) =
          apply_mask(s, lt.attention_dropout[hd]) * lt.v.middleCols(hd * dh, dh);
    }
    Matrix attn_out = add_bias(lt.context * lp.wo, lp.bo);
    lt.attn_out_dropout = dropout_mask(n, d, cfg.dropout, rng);
    attn_out = apply_mask(attn_out, lt.attn_out_dropout);
    lt.hidden = layer_norm(h + attn_out, lp.ln1_gain, lp.ln1_bias, cfg.layer_norm_eps, lt.ln1);

    lt.ff_pre = add_bias(lt.hidden * lp.w1, lp.b1);
    lt.ff_act = lt.ff_pre.unaryExpr([](double v) { return gelu(v); });
    Matrix ff_out = add_bias(lt.ff_act * lp.w2, lp.b2);
    lt.ff_dropout = dropout_mask(n, d, cfg.dropout, rng);
    ff_out = apply_mask(ff_out, lt.ff_dropout);
    h = layer_norm(lt.hidden + ff_out, lp.ln2_gain, lp.ln2_bias, cfg.layer_norm_eps, lt.ln2);
  }
  trace.output.embeddings = std::move(h);
  return trace;
}

EncoderOutput encode(std::span<const int> ids, const EncoderParams& params) {
  return std::move(encode_traced(ids, params, nullptr).output);
}

EncoderOutput encode(const Window& window, const EncoderParams& params) {
  return encode(std::span<const int>(window.ids), params);
}

void encoder_backward(const EncoderTrace& trace, const EncoderParams& params,
                      const Matrix& d_embeddings, const AttentionStack* d_attention,
                      EncoderParams& grads) {
  const EncoderConfig& cfg = params.config;
  const int dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dh_out = d_embeddings;
  for (int l = cfg.num_layers - 1; l >= 0; --l) {
    const LayerParams& lp = params.layers[l];
    LayerParams& lg = grads.layers[l];
    const LayerTrace& lt = trace.layers[l];

    // Feed-forward block.
    const Matrix dz2 = layer_norm_backward(lt.ln2, lp.ln2_gain, dh_out, lg.ln2_gain, lg.ln2_bias);
    Matrix d_hidden = dz2;
    const Matrix d_ff = apply_mask(dz2, lt.ff_dropout);
    lg.w2.noalias() += lt.ff_act.transpose() * d_ff;
    lg.b2.row(0) += d_ff.colwise().sum();
    Matrix d_pre = d_ff * lp.w2.transpose();
    d_pre.array() *= lt.ff_pre.unaryExpr([](double v) { return gelu_grad(v); }).array();
    lg.w1.noalias() += lt.hidden.transpose() * d_pre;
    lg.b1.row(0) += d_pre.colwise().sum();
    d_hidden.noalias() += d_pre * lp.w1.transpose();

    // Attention block.
    const Matrix dz1 = layer_norm_backward(lt.ln1, lp.ln1_gain, d_hidden, lg.ln1_gain, lg.ln1_bias);
    Matrix d_input = dz1;
    const Matrix d_attn_out = apply_mask(dz1, lt.attn_out_dropout);
    lg.wo.noalias() += lt.context.transpose() * d_attn_out;
    lg.bo.row(0) += d_attn_out.colwise().sum();
    const Matrix d_context = d_attn_out * lp.wo.transpose();

    const Eigen::Index n = lt.input.rows();
    Matrix dq(n, cfg.model_dim), dk(n, cfg.model_dim), dv(n, cfg.model_dim);
    const auto& probs = trace.output.attention[l];
    for (int hd = 0; hd < cfg.num_heads; ++hd) {
      const Matrix& p = probs[hd];
      const auto dc = d_context.middleCols(hd * dh, dh);
      const auto vh = lt.v.middleCols(hd * dh, dh);
      const Matrix& mask = lt.attention_dropout[hd];
      const Matrix p_used = apply_mask(p, mask);
      dv.middleCols(hd * dh, dh) = p_used.transpose() * dc;
      Matrix dp = apply_mask(dc * vh.transpose(), mask);
      if (d_attention != nullptr && l < static_cast<int>(d_attention->size()) &&
          hd < static_cast<int>((*d_attention)[l].size()) && (*d_attention)[l][hd].size() != 0) {
        dp += (*d_attention)[l][hd];
      }
      const Vector row_dot = (dp.array() * p.array()).rowwise().sum();
      Matrix ds = p.array() * (dp.colwise() - row_dot).array();
      ds *= scale;
      dq.middleCols(hd * dh, dh) = ds * lt.k.middleCols(hd * dh, dh);
      dk.middleCols(hd * dh, dh) = ds.transpose() * lt.q.middleCols(hd * dh, dh);
    }
    lg.wq.noalias() += lt.input.transpose() * dq;
    lg.wk.noalias() += lt.input.transpose() * dk;
    lg.wv.noalias() += lt.input.transpose() * dv;
    lg.bq.row(0) += dq.colwise().sum();
    lg.bk.row(0) += dk.colwise().sum();
    lg.bv.row(0) += dv.colwise().sum();
    d_input.noalias() += dq * lp.wq.transpose();
    d_input.noalias() += dk * lp.wk.transpose();
    d_input.noalias() += dv * lp.wv.transpose();
    dh_out = std::move(d_input);
  }

  const Matrix d_ln = apply_mask(dh_out, trace.embed_dropout);
  const Matrix dx = layer_norm_backward(trace.embed_ln, params.embed_ln_gain, d_ln,
                                        grads.embed_ln_gain, grads.embed_ln_bias);
  for (std::size_t i = 0; i < trace.ids.size(); ++i) {
    grads.token_embedding.row(trace.ids[i]) += dx.row(i);
    grads.position_embedding.row(i) += dx.row(i);
  }
}

WindowedEncoding merge_windows(const EntityGuidedSequence& seq,
                               std::span<const EncoderOutput> window_outputs) {
  if (window_outputs.size() != seq.windows.size() || window_outputs.empty()) {
    throw ConfigError("window output count does not match the sequence windows");
  }
  const Eigen::Index d = window_outputs.front().embeddings.cols();
  WindowedEncoding merged;
  merged.embeddings = Matrix::Zero(seq.length(), d);
  std::vector<int> counts(seq.length(), 0);
  for (std::size_t w = 0; w < seq.windows.size(); ++w) {
    const Matrix& emb = window_outputs[w].embeddings;
    for (int p = 0; p < seq.length(); ++p) {
      auto wp = window_position(seq, seq.windows[w], p);
      if (!wp) continue;
      if (counts[p] == 0) {
        merged.embeddings.row(p) = emb.row(*wp);
      } else {
        merged.embeddings.row(p) += emb.row(*wp);
      }
      ++counts[p];
    }
    merged.window_attention.push_back(window_outputs[w].attention);
  }
  for (int p = 0; p < seq.length(); ++p) {
    if (counts[p] > 1) merged.embeddings.row(p) /= static_cast<double>(counts[p]);
  }
  return merged;
}

WindowedEncoding encode_with_windows(const EntityGuidedSequence& seq,
                                     const EncoderParams& params) {
  std::vector<EncoderOutput> outs;
  outs.reserve(seq.windows.size());
  for (const auto& w : seq.windows) outs.push_back(encode(w, params));
  return merge_windows(seq, outs);
}

std::vector<Matrix> split_embedding_gradient(const EntityGuidedSequence& seq,
                                             const Matrix& d_embeddings, int model_dim) {
  std::vector<int> counts(seq.length(), 0);
  for (const auto& w : seq.windows) {
    for (int p = 0; p < seq.length(); ++p) {
      if (window_position(seq, w, p)) ++counts[p];
    }
  }
  std::vector<Matrix> out;
  for (const auto& w : seq.windows) {
    Matrix g = Matrix::Zero(w.length(), model_dim);
    for (int p = 0; p < seq.length(); ++p) {
      auto wp = window_position(seq, w, p);
      if (wp) g.row(*wp) = d_embeddings.row(p) / static_cast<double>(counts[p]);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace docrel
