#include "docrel/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "docrel/errors.hpp"
#include "parallel.hpp"

namespace docrel {

namespace {

std::mt19937_64 group_rng(std::uint64_t seed, int epoch, std::size_t doc, std::size_t group) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(doc),
                    static_cast<std::uint32_t>(group)};
  return std::mt19937_64(seq);
}

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.relation) && std::isfinite(l.evidence_attention) &&
         std::isfinite(l.evidence_plain) && std::isfinite(l.total);
}

bool finite(const ModelParameters& params) {
  bool ok = true;
  params.visit([&](const std::string&, const Matrix& m) { ok = ok && m.allFinite(); });
  return ok;
}

void add(LossBreakdown& acc, const LossBreakdown& x) {
  acc.relation += x.relation;
  acc.evidence_attention += x.evidence_attention;
  acc.evidence_plain += x.evidence_plain;
  acc.total += x.total;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !(head_learning_rate > 0.0)) {
    throw ConfigError("learning rates must be > 0");
  }
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (workers <= 0) throw ConfigError("workers must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (warmup_fraction < 0.0 || warmup_fraction > 1.0) {
    throw ConfigError("warmup_fraction must be in [0, 1]");
  }
  if (!threshold.automatic && !std::isfinite(threshold.value)) {
    throw ConfigError("threshold must be finite");
  }
  loss.validate();
  model.validate();
}

TrainResult train(const std::vector<Document>& corpus, const WordTokenizer& tokenizer,
                  const LabelVocabulary& labels, TrainConfig config,
                  const std::vector<Document>* dev, const EpochCallback& on_epoch) {
  if (corpus.empty()) throw ConfigError("training corpus is empty");
  config.model.encoder.vocab_size = tokenizer.vocab_size();
  config.model.num_relations = labels.size();
  config.validate();

  std::vector<PreparedDocument> prepared;
  prepared.reserve(corpus.size());
  for (const auto& doc : corpus) prepared.push_back(prepare_document(doc, tokenizer, config.model));

  TrainResult result;
  ModelParameters params = ModelParameters::random(config.model, config.seed);
  ModelParameters grads = params.zeros_like();

  const long steps_per_epoch =
      (static_cast<long>(corpus.size()) + config.batch_size - 1) / config.batch_size;
  AdamWConfig opt_config;
  opt_config.encoder_lr = config.learning_rate;
  opt_config.head_lr = config.head_learning_rate;
  opt_config.weight_decay = config.weight_decay;
  opt_config.warmup_fraction = config.warmup_fraction;
  AdamW optimizer(params, opt_config, steps_per_epoch * config.epochs);

  std::vector<ModelParameters> scratch;  // per-group buffers for parallel mode
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(config.seed);
  const int layers = config.model.attention_layers;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    LossBreakdown epoch_sum;
    long epoch_heads = 0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      grads.set_zero();

      // (document, group) jobs of this batch in fixed order
      std::vector<std::pair<std::size_t, std::size_t>> jobs;
      for (std::size_t b = start; b < end; ++b) {
        for (std::size_t g = 0; g < prepared[order[b]].groups.size(); ++g) {
          jobs.emplace_back(order[b], g);
        }
      }
      std::vector<GroupLoss> losses(jobs.size());
      auto run = [&](std::size_t i, ModelParameters* target) {
        const auto [doc, group] = jobs[i];
        std::mt19937_64 rng = group_rng(config.seed, epoch, doc, group);
        try {
          losses[i] = group_loss(params, prepared[doc], group, config.loss, layers, target, &rng);
        } catch (const NonFiniteError& e) {
          throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch),
                                corpus[doc].title);
        }
      };
      if (config.workers > 1 && jobs.size() > 1) {
        while (scratch.size() < jobs.size()) scratch.push_back(params.zeros_like());
        detail::parallel_for(jobs.size(), config.workers, [&](std::size_t i) {
          scratch[i].set_zero();
          run(i, &scratch[i]);
        });
        for (std::size_t i = 0; i < jobs.size(); ++i) grads.accumulate(scratch[i]);
      } else {
        for (std::size_t i = 0; i < jobs.size(); ++i) run(i, &grads);
      }

      for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!finite(losses[i].sum)) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch),
                                corpus[jobs[i].first].title);
        }
        add(epoch_sum, losses[i].sum);
        epoch_heads += losses[i].heads;
      }
      optimizer.step(params, grads);
      if (!finite(params)) {
        throw DivergenceError("non-finite parameters after a step at epoch " +
                                  std::to_string(epoch),
                              corpus[order[start]].title);
      }
    }

    EpochLog entry;
    entry.epoch = epoch;
    const double n = std::max<long>(1, epoch_heads);
    entry.relation = epoch_sum.relation / n;
    entry.evidence_attention = epoch_sum.evidence_attention / n;
    entry.evidence_plain = epoch_sum.evidence_plain / n;
    entry.total = epoch_sum.total / n;
    result.log.push_back(entry);
    if (on_epoch && !on_epoch(entry, params)) break;
  }

  result.checkpoint.params = std::move(params);
  result.checkpoint.token_vocabulary = tokenizer.vocabulary();
  result.checkpoint.relation_names = labels.names();
  result.checkpoint.na_name = labels.na_name();
  if (config.threshold.automatic) {
    const std::vector<Document>& tune_docs = dev != nullptr && !dev->empty() ? *dev : corpus;
    PredictOptions opts;
    const PredictionSet preds =
        predict_corpus(tune_docs, result.checkpoint.params, tokenizer, opts, config.workers);
    result.checkpoint.threshold = emission_cutoff(tune_threshold(preds, tune_docs));
  } else {
    result.checkpoint.threshold = config.threshold.value;
  }
  return result;
}

std::string loss_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,L_RE,L_Evi_a,Loss\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << e.relation << ',' << e.evidence_attention << ',' << e.total << '\n';
  }
  return out.str();
}

std::vector<ScoredTriple> score_document(const Document& doc, const ModelParameters& params,
                                         const Tokenizer& tokenizer) {
  const PreparedDocument prepared = prepare_document(doc, tokenizer, params.config);
  std::vector<ScoredTriple> scores;
  for (std::size_t g = 0; g < prepared.groups.size(); ++g) {
    const GroupInference inf = infer_group(params, prepared, g);
    for (const auto& h : inf.heads) {
      for (std::size_t k = 0; k < h.tails.size(); ++k) {
        for (int r = 0; r < params.config.num_relations; ++r) {
          scores.push_back({h.head, h.tails[k], r,
                            h.probabilities(static_cast<Eigen::Index>(k), r)});
        }
      }
    }
  }
  return scores;
}

DocumentPrediction predict_document(const Document& doc, const ModelParameters& params,
                                    const Tokenizer& tokenizer, const PredictOptions& options) {
  const int layers =
      options.attention_layers > 0 ? options.attention_layers : params.config.attention_layers;
  const PreparedDocument prepared = prepare_document(doc, tokenizer, params.config);
  DocumentPrediction out;
  out.title = doc.title;
  for (std::size_t g = 0; g < prepared.groups.size(); ++g) {
    const GroupInference inf = infer_group(params, prepared, g);
    for (const auto& h : inf.heads) {
      for (std::size_t k = 0; k < h.tails.size(); ++k) {
        for (int r = 0; r < params.config.num_relations; ++r) {
          const double score = h.probabilities(static_cast<Eigen::Index>(k), r);
          out.scores.push_back({h.head, h.tails[k], r, score});
          if (!(score > options.threshold)) continue;
          EmittedTriple e;
          e.head = h.head;
          e.tail = h.tails[k];
          e.relation = r;
          e.score = score;
          e.evidence_probabilities =
              evidence_probabilities(params, prepared, g, inf, h.head, h.tails[k], r, layers);
          for (Eigen::Index j = 0; j < e.evidence_probabilities.size(); ++j) {
            if (e.evidence_probabilities(j) > kEvidenceThreshold) {
              e.evidence.push_back(static_cast<int>(j));
            }
          }
          out.emitted.push_back(std::move(e));
        }
      }
    }
  }
  return out;
}

PredictionSet predict_corpus(const std::vector<Document>& docs, const ModelParameters& params,
                             const Tokenizer& tokenizer, const PredictOptions& options,
                             int workers) {
  PredictionSet out(docs.size());
  detail::parallel_for(docs.size(), workers, [&](std::size_t i) {
    out[i] = predict_document(docs[i], params, tokenizer, options);
  });
  return out;
}

double tune_threshold(const PredictionSet& dev_predictions, const std::vector<Document>& dev_gold) {
  std::set<std::tuple<std::string, int, int, int>> gold;
  for (const auto& doc : dev_gold) {
    for (const auto& rel : doc.gold_relations) {
      gold.emplace(doc.title, rel.head_idx, rel.tail_idx, rel.relation_id);
    }
  }
  // (score, is_correct), highest score first
  std::vector<std::pair<double, bool>> ranked;
  for (const auto& doc : dev_predictions) {
    for (const auto& s : doc.scores) {
      ranked.emplace_back(s.score, gold.count({doc.title, s.head, s.tail, s.relation}) != 0);
    }
  }
  if (ranked.empty()) return 0.5;
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  const double num_gold = static_cast<double>(gold.size());
  double best_f1 = -1.0;
  double best_threshold = 0.5;
  long tp = 0;
  long emitted = 0;
  for (std::size_t i = 0; i < ranked.size();) {
    const double value = ranked[i].first;
    while (i < ranked.size() && ranked[i].first == value) {
      tp += ranked[i].second ? 1 : 0;
      ++emitted;
      ++i;
    }
    const double p = static_cast<double>(tp) / static_cast<double>(emitted);
    const double r = num_gold > 0 ? static_cast<double>(tp) / num_gold : 0.0;
    const double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    if (f1 > best_f1) {  // descending sweep: ties keep the higher threshold
      best_f1 = f1;
      best_threshold = value;
    }
  }
  return best_threshold;
}

double emission_cutoff(double tuned) {
  return std::nextafter(tuned, -std::numeric_limits<double>::infinity());
}

}  // namespace docrel
