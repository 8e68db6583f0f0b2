#include "docrel/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "docrel/errors.hpp"

namespace docrel {

std::vector<int> Tokenizer::encode_text(std::string_view text) const {
  std::vector<int> ids;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      auto piece = encode_word(text.substr(i, j - i));
      ids.insert(ids.end(), piece.begin(), piece.end());
    }
    i = j;
  }
  return ids;
}

WordTokenizer::WordTokenizer(std::vector<std::string> vocabulary)
    : vocabulary_(std::move(vocabulary)) {
  for (int i = 0; i < vocab_size(); ++i) {
    if (!ids_.emplace(vocabulary_[i], i).second) {
      throw ConfigError("duplicate vocabulary entry '" + vocabulary_[i] + "'");
    }
  }
  auto require = [&](std::string_view tok) {
    auto it = ids_.find(std::string(tok));
    if (it == ids_.end()) throw ConfigError("vocabulary lacks " + std::string(tok));
    return it->second;
  };
  unk_ = require(kUnk);
  cls_ = require(kCls);
  sep_ = require(kSep);
}

WordTokenizer WordTokenizer::from_corpus(const std::vector<Document>& docs) {
  std::set<std::string> words;
  for (const auto& doc : docs) {
    for (const auto& sent : doc.sentences) words.insert(sent.begin(), sent.end());
  }
  std::vector<std::string> vocab{std::string(kPad), std::string(kUnk),
                                 std::string(kCls), std::string(kSep)};
  for (const auto& w : words) {
    if (std::find(vocab.begin(), vocab.end(), w) == vocab.end()) vocab.push_back(w);
  }
  return WordTokenizer(std::move(vocab));
}

WordTokenizer WordTokenizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open vocabulary " + path.string());
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    vocab.push_back(line);
  }
  return WordTokenizer(std::move(vocab));
}

void WordTokenizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  for (const auto& tok : vocabulary_) out << tok << '\n';
}

std::vector<int> WordTokenizer::encode_word(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return {it == ids_.end() ? unk_ : it->second};
}

}  // namespace docrel
