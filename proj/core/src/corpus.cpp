#include "docrel/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "docrel/errors.hpp"

namespace docrel {

using nlohmann::json;

namespace {

bool is_na_name(const std::string& name) {
  return name == "NA" || name == "Na" || name == "na";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void field_error(const std::string& title, const std::string& field,
                              const std::string& detail) {
  throw ParseError("document '" + title + "': field '" + field + "': " + detail);
}

template <typename T>
T get_field(const json& record, const char* key, const std::string& title,
            const std::string& path) {
  auto it = record.find(key);
  if (it == record.end()) field_error(title, path + key, "missing");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    field_error(title, path + key, e.what());
  }
}

Document parse_document(const json& record, const LabelVocabulary& vocab,
                        std::size_t index) {
  Document doc;
  if (!record.is_object()) {
    throw ParseError("record " + std::to_string(index) + " is not an object");
  }
  doc.title = get_field<std::string>(record, "title", "#" + std::to_string(index), "");
  const std::string& title = doc.title;
  doc.sentences =
      get_field<std::vector<std::vector<std::string>>>(record, "sents", title, "");

  auto vs = record.find("vertexSet");
  if (vs == record.end() || !vs->is_array()) field_error(title, "vertexSet", "missing or not an array");
  for (std::size_t e = 0; e < vs->size(); ++e) {
    const json& jent = (*vs)[e];
    const std::string path = "vertexSet[" + std::to_string(e) + "].";
    if (!jent.is_array()) field_error(title, path, "entity is not an array");
    Entity entity;
    for (std::size_t m = 0; m < jent.size(); ++m) {
      const json& jm = jent[m];
      const std::string mpath = path + std::to_string(m) + ".";
      Mention mention;
      mention.surface = get_field<std::string>(jm, "name", title, mpath);
      mention.sent_id = get_field<int>(jm, "sent_id", title, mpath);
      auto pos = get_field<std::vector<int>>(jm, "pos", title, mpath);
      if (pos.size() != 2) field_error(title, mpath + "pos", "expected [start, end]");
      mention.span = {pos[0], pos[1]};
      mention.entity_type = jm.contains("type") ? get_field<std::string>(jm, "type", title, mpath) : "";
      entity.mentions.push_back(std::move(mention));
    }
    std::stable_sort(entity.mentions.begin(), entity.mentions.end(),
                     [](const Mention& a, const Mention& b) {
                       return std::tie(a.sent_id, a.span.start) <
                              std::tie(b.sent_id, b.span.start);
                     });
    doc.entities.push_back(std::move(entity));
  }

  if (auto labels = record.find("labels"); labels != record.end()) {
    if (!labels->is_array()) field_error(title, "labels", "not an array");
    for (std::size_t i = 0; i < labels->size(); ++i) {
      const json& jl = (*labels)[i];
      const std::string path = "labels[" + std::to_string(i) + "].";
      RelationInstance rel;
      const auto name = get_field<std::string>(jl, "r", title, path);
      auto id = vocab.find(name);
      if (!id) field_error(title, path + "r", "unknown relation '" + name + "'");
      if (*id == LabelVocabulary::kNa) continue;  // NA is implicit
      rel.relation_id = *id;
      rel.head_idx = get_field<int>(jl, "h", title, path);
      rel.tail_idx = get_field<int>(jl, "t", title, path);
      if (jl.contains("evidence")) {
        auto ev = get_field<std::vector<int>>(jl, "evidence", title, path);
        rel.evidence.insert(ev.begin(), ev.end());
      }
      doc.gold_relations.push_back(std::move(rel));
    }
  }
  validate(doc, vocab.size());
  return doc;
}

}  // namespace

int Document::num_tokens() const {
  int n = 0;
  for (const auto& s : sentences) n += static_cast<int>(s.size());
  return n;
}

std::vector<int> Document::sentence_offsets() const {
  std::vector<int> offsets;
  offsets.reserve(sentences.size());
  int n = 0;
  for (const auto& s : sentences) {
    offsets.push_back(n);
    n += static_cast<int>(s.size());
  }
  return offsets;
}

void validate(const Document& doc, int num_relations) {
  auto fail = [&](const std::string& msg) {
    throw ValidationError("document '" + doc.title + "': " + msg);
  };
  if (doc.sentences.empty()) fail("no sentences");
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    if (doc.sentences[s].empty()) fail("sentence " + std::to_string(s) + " is empty");
  }
  const int ns = doc.num_sentences();
  const int ne = doc.num_entities();
  for (int e = 0; e < ne; ++e) {
    const auto& mentions = doc.entities[e].mentions;
    if (mentions.empty()) fail("entity " + std::to_string(e) + " has no mentions");
    for (std::size_t m = 0; m < mentions.size(); ++m) {
      const Mention& mn = mentions[m];
      const std::string where =
          "entity " + std::to_string(e) + " mention " + std::to_string(m);
      if (mn.sent_id < 0 || mn.sent_id >= ns) fail(where + ": sent_id out of range");
      const int len = static_cast<int>(doc.sentences[mn.sent_id].size());
      if (mn.span.start < 0 || mn.span.start >= mn.span.end || mn.span.end > len) {
        fail(where + ": span [" + std::to_string(mn.span.start) + "," +
             std::to_string(mn.span.end) + ") invalid for sentence of length " +
             std::to_string(len));
      }
      if (mn.surface.empty()) fail(where + ": empty surface");
      if (m > 0) {
        const Mention& prev = mentions[m - 1];
        if (std::tie(prev.sent_id, prev.span.start) > std::tie(mn.sent_id, mn.span.start)) {
          fail(where + ": mentions not in document order");
        }
      }
    }
  }
  std::set<std::tuple<int, int, int>> seen;
  for (const auto& rel : doc.gold_relations) {
    if (rel.head_idx < 0 || rel.head_idx >= ne || rel.tail_idx < 0 || rel.tail_idx >= ne) {
      fail("relation entity index out of range");
    }
    if (rel.head_idx == rel.tail_idx) fail("relation with head == tail");
    if (rel.relation_id < 0 || rel.relation_id >= num_relations) {
      fail("relation id " + std::to_string(rel.relation_id) + " out of range");
    }
    for (int s : rel.evidence) {
      if (s < 0 || s >= ns) fail("evidence sentence " + std::to_string(s) + " out of range");
    }
    if (!seen.emplace(rel.head_idx, rel.tail_idx, rel.relation_id).second) {
      fail("duplicate relation triple (" + std::to_string(rel.head_idx) + ", " +
           std::to_string(rel.tail_idx) + ", " + std::to_string(rel.relation_id) + ")");
    }
  }
}

LabelVocabulary::LabelVocabulary(std::vector<std::string> names)
    : names_(std::move(names)) {
  for (int i = 0; i < size(); ++i) {
    if (is_na_name(names_[i])) throw ValidationError("NA cannot be a trainable relation");
    if (!ids_.emplace(names_[i], i).second) {
      throw ValidationError("duplicate relation name '" + names_[i] + "'");
    }
  }
}

LabelVocabulary LabelVocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open relation table " + path.string());
  std::map<long, std::string> by_id;
  std::string na = "Na";
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name;
    long id = 0;
    if (!(ls >> name >> id)) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected '<name> <id>'");
    }
    if (is_na_name(name)) {
      na = name;
      continue;
    }
    if (!by_id.emplace(id, name).second) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": duplicate id");
    }
  }
  std::vector<std::string> names;
  for (auto& [id, name] : by_id) names.push_back(name);
  LabelVocabulary vocab(std::move(names));
  vocab.na_name_ = na;
  return vocab;
}

void LabelVocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << na_name_ << '\t' << 0 << '\n';
  for (int i = 0; i < size(); ++i) out << names_[i] << '\t' << (i + 1) << '\n';
}

std::optional<int> LabelVocabulary::find(const std::string& name) const {
  if (name == na_name_ || is_na_name(name)) return kNa;
  auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int LabelVocabulary::id(const std::string& name) const {
  auto found = find(name);
  if (!found || *found == kNa) throw ValidationError("unknown relation '" + name + "'");
  return *found;
}

const std::string& LabelVocabulary::name(int id) const {
  if (id < 0 || id >= size()) throw ValidationError("relation id out of range");
  return names_[id];
}

std::vector<Document> parse_corpus(const std::string& json_text,
                                   const LabelVocabulary& vocab) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("corpus is not valid JSON: ") + e.what());
  }
  if (!root.is_array()) throw ParseError("corpus root must be an array of documents");
  std::vector<Document> docs;
  docs.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    docs.push_back(parse_document(root[i], vocab, i));
  }
  return docs;
}

std::vector<Document> load_corpus(const std::filesystem::path& path,
                                  const LabelVocabulary& vocab) {
  return parse_corpus(read_file(path), vocab);
}

std::string serialize_corpus(const std::vector<Document>& docs,
                             const LabelVocabulary& vocab) {
  json root = json::array();
  for (const auto& doc : docs) {
    json rec;
    rec["title"] = doc.title;
    rec["sents"] = doc.sentences;
    json vertex_set = json::array();
    for (const auto& entity : doc.entities) {
      json jent = json::array();
      for (const auto& m : entity.mentions) {
        jent.push_back({{"name", m.surface},
                        {"sent_id", m.sent_id},
                        {"pos", {m.span.start, m.span.end}},
                        {"type", m.entity_type}});
      }
      vertex_set.push_back(std::move(jent));
    }
    rec["vertexSet"] = std::move(vertex_set);
    json labels = json::array();
    for (const auto& rel : doc.gold_relations) {
      labels.push_back({{"r", vocab.name(rel.relation_id)},
                        {"h", rel.head_idx},
                        {"t", rel.tail_idx},
                        {"evidence", std::vector<int>(rel.evidence.begin(), rel.evidence.end())}});
    }
    rec["labels"] = std::move(labels);
    root.push_back(std::move(rec));
  }
  return root.dump();
}

void save_corpus(const std::vector<Document>& docs, const LabelVocabulary& vocab,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << serialize_corpus(docs, vocab) << '\n';
}

NormalizedFact normalize_fact(const Document& doc, int head_idx, int tail_idx,
                              int relation_id) {
  NormalizedFact fact;
  fact.relation_id = relation_id;
  for (const auto& m : doc.entities.at(head_idx).mentions) fact.head_names.insert(m.surface);
  for (const auto& m : doc.entities.at(tail_idx).mentions) fact.tail_names.insert(m.surface);
  return fact;
}

TrainFactIndex build_train_fact_index(const std::vector<Document>& train_docs) {
  TrainFactIndex index;
  for (const auto& doc : train_docs) {
    for (const auto& rel : doc.gold_relations) {
      index.insert(normalize_fact(doc, rel.head_idx, rel.tail_idx, rel.relation_id));
    }
  }
  return index;
}

}  // namespace docrel
