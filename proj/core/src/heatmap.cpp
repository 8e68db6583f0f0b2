#include "docrel/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "docrel/errors.hpp"

namespace docrel {

HeatmapRecord compute_heatmap(const Document& doc, const ModelParameters& params,
                              const Tokenizer& tokenizer, int head, int tail,
                              int attention_layers) {
  if (head < 0 || head >= doc.num_entities() || tail < 0 || tail >= doc.num_entities() ||
      head == tail) {
    throw ValidationError("invalid head/tail pair (" + std::to_string(head) + ", " +
                          std::to_string(tail) + ") for document " + doc.title);
  }
  const int layers = attention_layers > 0 ? attention_layers : params.config.attention_layers;
  const PreparedDocument prepared = prepare_document(doc, tokenizer, params.config);
  std::size_t group = 0;
  for (std::size_t g = 0; g < prepared.groups.size(); ++g) {
    const auto& heads = prepared.groups[g].heads;
    if (std::find(heads.begin(), heads.end(), head) != heads.end()) group = g;
  }
  const SequenceGroup& g = prepared.groups[group];
  const WindowedEncoding enc = encode_with_windows(g.sequence, params.encoder);
  const std::vector<int> rows = params.config.entity_guided
                                    ? head_positions(g.sequence, doc, head)
                                    : g.entity_positions[head];
  const AttentionFeatures feats = attention_features(g.sequence, enc.window_attention, rows,
                                                     g.entity_positions[tail], layers);

  HeatmapRecord out;
  out.title = doc.title;
  out.head = head;
  out.tail = tail;
  const int prefix = g.sequence.prefix_length();
  for (int p = prefix; p < prefix + g.sequence.doc_length(); ++p) {
    out.tokens.push_back(tokenizer.token(g.sequence.ids[p]));
    out.token_values.push_back(feats.token(p));
  }
  out.sentence_values.assign(feats.sentence.data(), feats.sentence.data() + feats.sentence.size());
  return out;
}

std::string heatmap_csv(const HeatmapRecord& record) {
  std::ostringstream out;
  out.precision(17);
  out << "token_index,token,feature_value\n";
  for (std::size_t i = 0; i < record.tokens.size(); ++i) {
    std::string tok = record.tokens[i];
    if (tok.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : tok) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      tok = quoted + "\"";
    }
    out << i << ',' << tok << ',' << record.token_values[i] << '\n';
  }
  return out.str();
}

std::string heatmap_sentence_csv(const HeatmapRecord& record) {
  std::ostringstream out;
  out.precision(17);
  out << "sent_id,feature_value\n";
  for (std::size_t j = 0; j < record.sentence_values.size(); ++j) {
    out << j << ',' << record.sentence_values[j] << '\n';
  }
  return out.str();
}

std::string heatmap_pgm(const HeatmapRecord& record, int cell_width, int height) {
  if (cell_width <= 0 || height <= 0) throw ConfigError("heatmap image size must be positive");
  double peak = 0.0;
  for (double v : record.token_values) {
    if (std::isfinite(v)) peak = std::max(peak, v);
  }
  const int width = std::max<int>(1, static_cast<int>(record.token_values.size()) * cell_width);
  std::string row(static_cast<std::size_t>(width), '\0');
  for (std::size_t i = 0; i < record.token_values.size(); ++i) {
    const double v = record.token_values[i];
    const double level = std::isfinite(v) && peak > 0.0 ? v / peak : 0.0;
    // dark = high attention
    const auto px = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * (1.0 - level))));
    std::fill_n(row.begin() + static_cast<std::ptrdiff_t>(i) * cell_width, cell_width, px);
  }
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (int y = 0; y < height; ++y) out += row;
  return out;
}

}  // namespace docrel
