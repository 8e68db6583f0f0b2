#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "docrel/corpus.hpp"

namespace docrel {

// Contract any tokenizer must satisfy to feed the sequencer: deterministic
// word -> id-sequence mapping plus the CLS/SEP markers. A word may map to
// several sub-tokens; the sequencer tracks the resulting offsets.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::vector<int> encode_word(std::string_view word) const = 0;
  virtual int cls_id() const = 0;
  virtual int sep_id() const = 0;
  virtual int vocab_size() const = 0;
  virtual const std::string& token(int id) const = 0;

  // Whitespace-split surface text, each piece encoded with encode_word.
  std::vector<int> encode_text(std::string_view text) const;
};

// Word-level tokenizer over a fixed vocabulary. Unknown words map to [UNK].
class WordTokenizer final : public Tokenizer {
 public:
  static constexpr std::string_view kPad = "[PAD]";
  static constexpr std::string_view kUnk = "[UNK]";
  static constexpr std::string_view kCls = "[CLS]";
  static constexpr std::string_view kSep = "[SEP]";

  // Vocabulary must contain [UNK], [CLS] and [SEP]; ids are list positions.
  explicit WordTokenizer(std::vector<std::string> vocabulary);

  // Reserved markers first, then every distinct corpus word in sorted order.
  static WordTokenizer from_corpus(const std::vector<Document>& docs);
  // One token per line; id = zero-based line number.
  static WordTokenizer load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::vector<int> encode_word(std::string_view word) const override;
  int cls_id() const override { return cls_; }
  int sep_id() const override { return sep_; }
  int unk_id() const { return unk_; }
  int vocab_size() const override { return static_cast<int>(vocabulary_.size()); }
  const std::string& token(int id) const override { return vocabulary_.at(id); }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

 private:
  std::vector<std::string> vocabulary_;
  std::unordered_map<std::string, int> ids_;
  int unk_ = 0;
  int cls_ = 0;
  int sep_ = 0;
};

}  // namespace docrel
