#pragma once

// Annotated documents in the DocRED release layout, the relation label
// vocabulary, and the train-fact index used by the Ign F1 metric.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace docrel {

struct TokenSpan {
  int start = 0;  // inclusive
  int end = 0;    // exclusive
  int size() const { return end - start; }
  bool operator==(const TokenSpan&) const = default;
};

struct Mention {
  int sent_id = 0;
  TokenSpan span;
  std::string surface;
  std::string entity_type;
  bool operator==(const Mention&) const = default;
};

struct Entity {
  std::vector<Mention> mentions;
  bool operator==(const Entity&) const = default;
};

struct RelationInstance {
  int head_idx = 0;
  int tail_idx = 0;
  int relation_id = 0;
  std::set<int> evidence;
  bool operator==(const RelationInstance&) const = default;
};

struct Document {
  std::string title;
  std::vector<std::vector<std::string>> sentences;
  std::vector<Entity> entities;
  std::vector<RelationInstance> gold_relations;

  int num_sentences() const { return static_cast<int>(sentences.size()); }
  int num_entities() const { return static_cast<int>(entities.size()); }
  int num_tokens() const;
  // Index of the first word of each sentence in the flattened document.
  std::vector<int> sentence_offsets() const;

  bool operator==(const Document&) const = default;
};

// Throws ValidationError naming the document title when any invariant fails.
void validate(const Document& doc, int num_relations);

// Relation name <-> id table for the trainable (non-NA) relations. NA is a
// sentinel that never occupies a slot in [0, size()).
class LabelVocabulary {
 public:
  static constexpr int kNa = -1;

  LabelVocabulary() = default;
  explicit LabelVocabulary(std::vector<std::string> names);

  // Two-column file: `<name> <id>` per line. A row named NA/Na is recorded as
  // the sentinel; the remaining rows are assigned dense ids in order of their
  // numeric id column.
  static LabelVocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(names_.size()); }
  // kNa for the NA name; std::nullopt for unknown names.
  std::optional<int> find(const std::string& name) const;
  int id(const std::string& name) const;  // throws ValidationError
  const std::string& name(int id) const;
  const std::vector<std::string>& names() const { return names_; }
  const std::string& na_name() const { return na_name_; }

  bool operator==(const LabelVocabulary&) const = default;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
  std::string na_name_ = "Na";
};

std::vector<Document> load_corpus(const std::filesystem::path& path,
                                  const LabelVocabulary& vocab);
std::vector<Document> parse_corpus(const std::string& json_text,
                                   const LabelVocabulary& vocab);
std::string serialize_corpus(const std::vector<Document>& docs,
                             const LabelVocabulary& vocab);
void save_corpus(const std::vector<Document>& docs,
                 const LabelVocabulary& vocab,
                 const std::filesystem::path& path);

// A relational fact normalized to the surface names of its entities, so the
// same fact is recognized across documents.
struct NormalizedFact {
  std::set<std::string> head_names;
  std::set<std::string> tail_names;
  int relation_id = 0;
  auto operator<=>(const NormalizedFact&) const = default;
};

NormalizedFact normalize_fact(const Document& doc, int head_idx, int tail_idx,
                              int relation_id);

class TrainFactIndex {
 public:
  void insert(NormalizedFact fact) { facts_.insert(std::move(fact)); }
  bool contains(const NormalizedFact& fact) const {
    return facts_.count(fact) != 0;
  }
  std::size_t size() const { return facts_.size(); }
  bool empty() const { return facts_.empty(); }

 private:
  std::set<NormalizedFact> facts_;
};

TrainFactIndex build_train_fact_index(const std::vector<Document>& train_docs);

}  // namespace docrel
