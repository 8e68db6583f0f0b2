#include "pooling_fixture.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace docrel::testing {

namespace {

int draw(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::vector<int> random_positions(std::mt19937_64& rng, int lo, int hi, int count) {
  std::set<int> picked;
  while (static_cast<int>(picked.size()) < count) picked.insert(draw(rng, lo, hi));
  return {picked.begin(), picked.end()};
}

}  // namespace

PoolingFixture random_pooling_fixture(std::mt19937_64& rng, int max_len) {
  PoolingFixture f;
  const int head_len = draw(rng, 0, 3);
  const int prefix = head_len + 2;
  const bool two = draw(rng, 0, 1) == 1;
  int window_len = max_len;
  int doc_len = 0;
  if (two) {
    window_len = draw(rng, prefix + 3, max_len);
    const int budget = window_len - (head_len + 3);
    doc_len = draw(rng, budget + 1, 2 * budget);
  } else {
    doc_len = draw(rng, 2, max_len - prefix - 1);
  }

  EntityGuidedSequence& seq = f.seq;
  seq.ids.assign(prefix + doc_len + 1, 0);
  seq.head_span = {1, 1 + head_len};
  for (int i = 0; i < doc_len; ++i) seq.doc_pos_map.push_back({prefix + i, prefix + i + 1});
  const int num_sentences = draw(rng, 1, std::min(4, doc_len));
  std::vector<int> cuts = random_positions(rng, 1, doc_len - 1, num_sentences - 1);
  cuts.insert(cuts.begin(), 0);
  cuts.push_back(doc_len);
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    seq.sentence_spans.push_back({prefix + cuts[j], prefix + cuts[j + 1]});
  }
  seq.windows = split_windows(seq, window_len);

  if (head_len > 0) {
    for (int p = 1; p <= head_len; ++p) f.head_rows.push_back(p);
  } else {
    f.head_rows = random_positions(rng, prefix, prefix + doc_len - 1, draw(rng, 1, std::min(3, doc_len)));
  }
  f.tail_rows =
      random_positions(rng, prefix, prefix + doc_len - 1, draw(rng, 1, std::min(3, doc_len)));

  const int layers = draw(rng, 1, 3);
  const int heads = draw(rng, 1, 4);
  f.last_layers = draw(rng, 1, layers);
  std::normal_distribution<double> normal(0.0, 1.5);
  for (const Window& w : seq.windows) {
    const int n = w.length();
    AttentionStack stack(layers);
    for (auto& layer : stack) {
      for (int h = 0; h < heads; ++h) {
        Matrix a(n, n);
        for (int r = 0; r < n; ++r) {
          double z = 0.0;
          for (int c = 0; c < n; ++c) {
            a(r, c) = std::exp(normal(rng));
            z += a(r, c);
          }
          a.row(r) /= z;
        }
        layer.push_back(a);
      }
    }
    f.attention.push_back(std::move(stack));
  }
  return f;
}

}  // namespace docrel::testing
