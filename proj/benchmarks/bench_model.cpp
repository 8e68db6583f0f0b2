#include <benchmark/benchmark.h>

#include <random>

#include "docrel/encoder.hpp"
#include "docrel/heads.hpp"
#include "docrel/model.hpp"
#include "docrel/pipeline.hpp"
#include "docrel/synth.hpp"

using namespace docrel;

namespace {

ModelConfig bench_config(int vocab, int relations, int dim) {
  ModelConfig c;
  c.encoder.num_layers = 2;
  c.encoder.num_heads = 2;
  c.encoder.model_dim = dim;
  c.encoder.ffn_dim = 2 * dim;
  c.encoder.vocab_size = vocab;
  c.encoder.max_positions = 512;
  c.num_relations = relations;
  c.relation_dim = 16;
  c.attention_layers = 2;
  return c;
}

const SynthCorpus& corpus() {
  static const SynthCorpus c = [] {
    SynthConfig sc;
    sc.num_documents = 4;
    sc.min_sentences = sc.max_sentences = 10;
    sc.min_entities = sc.max_entities = 6;
    return generate(sc);
  }();
  return c;
}

}  // namespace

static void BM_EncoderForward(benchmark::State& state) {
  const int len = static_cast<int>(state.range(0));
  const int dim = static_cast<int>(state.range(1));
  const EncoderParams p = EncoderParams::random(bench_config(100, 8, dim).encoder, 1);
  std::mt19937_64 rng(2);
  std::vector<int> ids(len);
  for (int& id : ids) id = static_cast<int>(rng() % 100);
  for (auto _ : state) benchmark::DoNotOptimize(encode(ids, p));
  state.SetItemsProcessed(state.iterations() * len);
}
BENCHMARK(BM_EncoderForward)->Args({64, 32})->Args({128, 32})->Args({256, 32})->Args({128, 64});

static void BM_AttentionFeatures(benchmark::State& state) {
  const Document& doc = corpus().documents[0];
  const WordTokenizer tok = WordTokenizer::from_corpus(corpus().documents);
  const ModelConfig c = bench_config(tok.vocab_size(), 8, 32);
  const ModelParameters p = ModelParameters::random(c, 3);
  const PreparedDocument prep = prepare_document(doc, tok, c);
  const SequenceGroup& g = prep.groups[0];
  const WindowedEncoding enc = encode_with_windows(g.sequence, p.encoder);
  const std::vector<int> head_rows = g.entity_positions[g.heads[0]];
  const std::vector<int>& tail_rows = g.entity_positions[(g.heads[0] + 1) % doc.num_entities()];
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        attention_sentence_features(g.sequence, enc.window_attention, head_rows, tail_rows, 2));
  }
}
BENCHMARK(BM_AttentionFeatures);

static void BM_FusedEvidence(benchmark::State& state) {
  const int d = 32;
  const int m = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto fill = [&](Matrix& x) { x = x.unaryExpr([&](double) { return n(rng); }); };
  Matrix sentences(20, d);
  fill(sentences);
  const RowVector r = RowVector::NullaryExpr(m, [&] { return n(rng); });
  EvidenceBank bank = EvidenceBank::zeros(d, m);
  fill(bank.in_weight);
  fill(bank.out_weight);
  for (auto _ : state) benchmark::DoNotOptimize(fused_evidence(sentences, r, bank));
}
BENCHMARK(BM_FusedEvidence)->Arg(16)->Arg(32);

static void BM_DocumentLossAndGradient(benchmark::State& state) {
  const bool guided = state.range(0) != 0;
  const Document& doc = corpus().documents[1];
  const WordTokenizer tok = WordTokenizer::from_corpus(corpus().documents);
  ModelConfig c = bench_config(tok.vocab_size(), 8, 32);
  c.entity_guided = guided;
  const ModelParameters p = ModelParameters::random(c, 5);
  ModelParameters grads = p.zeros_like();
  const PreparedDocument prep = prepare_document(doc, tok, c);
  LossWeights w;
  w.lambda1 = 1.0;
  for (auto _ : state) {
    grads.set_zero();
    benchmark::DoNotOptimize(document_loss(p, prep, w, 2, &grads));
  }
}
BENCHMARK(BM_DocumentLossAndGradient)->Arg(1)->Arg(0);

static void BM_PredictDocument(benchmark::State& state) {
  const Document& doc = corpus().documents[2];
  const WordTokenizer tok = WordTokenizer::from_corpus(corpus().documents);
  const ModelParameters p = ModelParameters::random(bench_config(tok.vocab_size(), 8, 32), 6);
  PredictOptions opts;
  opts.threshold = 0.0;  // emit everything so evidence is scored too
  for (auto _ : state) benchmark::DoNotOptimize(predict_document(doc, p, tok, opts));
}
BENCHMARK(BM_PredictDocument);
BENCHMARK_MAIN();
