#pragma once

// Training loop, document-level inference and threshold selection.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "docrel/checkpoint.hpp"
#include "docrel/corpus.hpp"
#include "docrel/model.hpp"
#include "docrel/optimizer.hpp"
#include "docrel/tokenizer.hpp"

namespace docrel {

inline constexpr double kEvidenceThreshold = 0.5;

struct ThresholdPolicy {
  bool automatic = true;  // tune on dev (or train) data at the end of training
  double value = 0.5;     // fixed cutoff when not automatic; emission is score > value
};

struct TrainConfig {
  // Optimization.
  double learning_rate = 1e-5;       // encoder
  double head_learning_rate = 1e-4;  // relation/evidence heads and relation vectors
  double weight_decay = 0.01;
  double warmup_fraction = 0.06;
  int epochs = 60;
  int batch_size = 1;  // documents per optimizer step
  std::uint64_t seed = 42;
  int workers = 1;
  LossWeights loss;
  ThresholdPolicy threshold;

  // Model shape.
  ModelConfig model;

  void validate() const;  // throws ConfigError
};

struct EpochLog {
  int epoch = 0;
  double relation = 0.0;            // mean over head sequences
  double evidence_attention = 0.0;
  double evidence_plain = 0.0;
  double total = 0.0;
};

// Called after every epoch; return false to stop early.
using EpochCallback = std::function<bool(const EpochLog&, const ModelParameters&)>;

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

// config.model.encoder.vocab_size and config.model.num_relations are filled
// from the tokenizer and label vocabulary.
TrainResult train(const std::vector<Document>& corpus, const WordTokenizer& tokenizer,
                  const LabelVocabulary& labels, TrainConfig config,
                  const std::vector<Document>* dev = nullptr,
                  const EpochCallback& on_epoch = {});

std::string loss_log_csv(const std::vector<EpochLog>& log);

struct ScoredTriple {
  int head = 0;
  int tail = 0;
  int relation = 0;
  double score = 0.0;
};

struct EmittedTriple {
  int head = 0;
  int tail = 0;
  int relation = 0;
  double score = 0.0;
  Vector evidence_probabilities;
  std::vector<int> evidence;  // sentences with probability > 0.5
};

struct DocumentPrediction {
  std::string title;
  std::vector<ScoredTriple> scores;  // every ordered pair x relation
  std::vector<EmittedTriple> emitted;
};

using PredictionSet = std::vector<DocumentPrediction>;

struct PredictOptions {
  double threshold = 0.5;  // emit when score > threshold
  int attention_layers = 0;  // 0: use the checkpoint's value
};

DocumentPrediction predict_document(const Document& doc, const ModelParameters& params,
                                    const Tokenizer& tokenizer, const PredictOptions& options);

// All relation scores of a document without thresholding.
std::vector<ScoredTriple> score_document(const Document& doc, const ModelParameters& params,
                                         const Tokenizer& tokenizer);

PredictionSet predict_corpus(const std::vector<Document>& docs, const ModelParameters& params,
                             const Tokenizer& tokenizer, const PredictOptions& options,
                             int workers = 1);

// The score value maximizing micro F1 when every score >= value is emitted;
// ties go to the higher value. Empty input gives 0.5.
double tune_threshold(const PredictionSet& dev_predictions, const std::vector<Document>& dev_gold);

// Strict cutoff equivalent to emitting scores >= tuned.
double emission_cutoff(double tuned);

}  // namespace docrel
