#include "docrel/synth.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "docrel/errors.hpp"

namespace docrel {

namespace {

constexpr int kMaxRelations = 10;
constexpr int kMinFiller = 8;
constexpr int kMaxPlantedPerDoc = 3;

int uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

struct Pools {
  std::vector<std::string> triggers;
  std::vector<std::string> names;
  std::vector<std::string> filler;
};

Pools make_pools(const SynthConfig& c) {
  Pools p;
  for (int r = 0; r < c.num_relations; ++r) p.triggers.push_back("t" + std::to_string(r));
  const int rest = c.vocabulary_size - c.num_relations;
  const int names = rest / 3;
  for (int i = 0; i < names; ++i) p.names.push_back("N" + std::to_string(i));
  for (int i = 0; i < rest - names; ++i) p.filler.push_back("w" + std::to_string(i));
  return p;
}

// A sentence under construction: words plus the entities mentioned, by word
// offset.
struct Draft {
  std::vector<std::string> words;
  std::vector<std::pair<int, int>> mentions;  // (entity, start word)
};

struct Planted {
  int head;
  int tail;
  int relation;
  int evidence_count;
};

void append_filler(Draft& d, const Pools& pools, std::mt19937_64& rng, int count) {
  for (int i = 0; i < count; ++i) {
    d.words.push_back(pools.filler[uniform(rng, 0, static_cast<int>(pools.filler.size()) - 1)]);
  }
}

void append_entity(Draft& d, int entity, const std::vector<std::vector<std::string>>& names) {
  d.mentions.emplace_back(entity, static_cast<int>(d.words.size()));
  d.words.insert(d.words.end(), names[entity].begin(), names[entity].end());
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_documents <= 0) throw ConfigError("num_documents must be positive");
  if (min_entities < 2 || max_entities < min_entities) {
    throw ConfigError("entity range must satisfy 2 <= min <= max");
  }
  if (min_sentences < 1 || max_sentences < min_sentences) {
    throw ConfigError("sentence range must satisfy 1 <= min <= max");
  }
  if (num_relations < 1 || num_relations > kMaxRelations) {
    throw ConfigError("num_relations must be in [1, 10]");
  }
  if (min_evidence < 1 || max_evidence < min_evidence) {
    throw ConfigError("evidence range must satisfy 1 <= min <= max");
  }
  if (max_sentences < max_evidence + 1) {
    throw ConfigError("max_sentences too small for the evidence range");
  }
  const int rest = vocabulary_size - num_relations;
  if (rest / 3 < 2 * max_entities || rest - rest / 3 < kMinFiller) {
    throw ConfigError("vocabulary_size " + std::to_string(vocabulary_size) +
                      " too small to keep trigger, name and filler tokens disjoint");
  }
}

SynthCorpus generate(const SynthConfig& config) {
  config.validate();
  const Pools pools = make_pools(config);
  SynthCorpus out;
  std::vector<std::string> rel_names;
  for (int r = 0; r < config.num_relations; ++r) rel_names.push_back("R" + std::to_string(r));
  out.labels = LabelVocabulary(rel_names);
  out.triggers = pools.triggers;

  std::mt19937_64 rng(config.seed);
  for (int doc_index = 0; doc_index < config.num_documents; ++doc_index) {
    for (;;) {  // resample until the document fits the sentence budget
      const int ne = uniform(rng, config.min_entities, config.max_entities);
      std::vector<int> name_ids(pools.names.size());
      std::iota(name_ids.begin(), name_ids.end(), 0);
      std::shuffle(name_ids.begin(), name_ids.end(), rng);
      std::vector<std::vector<std::string>> names(ne);
      for (int e = 0; e < ne; ++e) {
        names[e] = {pools.names[name_ids[2 * e]], pools.names[name_ids[2 * e + 1]]};
      }

      const int max_planted = config.repeat_relations
                                  ? std::min(ne - 1, kMaxPlantedPerDoc)
                                  : std::min({config.num_relations, ne - 1, kMaxPlantedPerDoc});
      const int num_planted = uniform(rng, 1, max_planted);
      std::vector<int> rel_ids(config.num_relations);
      std::iota(rel_ids.begin(), rel_ids.end(), 0);
      std::shuffle(rel_ids.begin(), rel_ids.end(), rng);
      std::vector<std::pair<int, int>> pairs;
      for (int a = 0; a < ne; ++a) {
        for (int b = a + 1; b < ne; ++b) pairs.emplace_back(a, b);
      }
      std::shuffle(pairs.begin(), pairs.end(), rng);
      std::vector<Planted> planted;
      std::set<std::pair<int, int>> related;
      for (int i = 0; i < num_planted; ++i) {
        auto [a, b] = pairs[i];
        if (uniform(rng, 0, 1) == 1) std::swap(a, b);
        const int rel = config.repeat_relations ? uniform(rng, 0, config.num_relations - 1) : rel_ids[i];
        planted.push_back({a, b, rel, uniform(rng, config.min_evidence, config.max_evidence)});
        related.emplace(std::min(a, b), std::max(a, b));
      }

      std::vector<Draft> drafts;
      std::vector<int> owner;  // planted index per draft, -1 for filler
      std::vector<int> mention_count(ne, 0);
      for (std::size_t i = 0; i < planted.size(); ++i) {
        const Planted& p = planted[i];
        for (int k = 0; k < p.evidence_count; ++k) {
          Draft d;
          append_filler(d, pools, rng, uniform(rng, 0, 2));
          append_entity(d, p.head, names);
          append_filler(d, pools, rng, uniform(rng, 0, 1));
          d.words.push_back(pools.triggers[p.relation]);
          append_filler(d, pools, rng, uniform(rng, 0, 1));
          append_entity(d, p.tail, names);
          append_filler(d, pools, rng, uniform(rng, 1, 3));
          drafts.push_back(std::move(d));
          owner.push_back(static_cast<int>(i));
          ++mention_count[p.head];
          ++mention_count[p.tail];
        }
      }
      // Every entity gets at least two mentions; filler sentences may pair
      // two entities that share no planted relation.
      std::vector<int> slots;
      for (int e = 0; e < ne; ++e) {
        for (int k = mention_count[e]; k < 2; ++k) slots.push_back(e);
      }
      std::shuffle(slots.begin(), slots.end(), rng);
      std::vector<std::vector<int>> filler_entities;
      while (!slots.empty()) {
        const int a = slots.back();
        slots.pop_back();
        std::vector<int> group{a};
        for (std::size_t j = 0; j < slots.size(); ++j) {
          const int b = slots[j];
          if (b != a && !related.count({std::min(a, b), std::max(a, b)})) {
            group.push_back(b);
            slots.erase(slots.begin() + static_cast<std::ptrdiff_t>(j));
            break;
          }
        }
        filler_entities.push_back(std::move(group));
      }
      const int needed = static_cast<int>(drafts.size() + filler_entities.size());
      if (needed > config.max_sentences) continue;
      const int target = std::max(needed, uniform(rng, config.min_sentences, config.max_sentences));

      for (const auto& group : filler_entities) {
        Draft d;
        append_filler(d, pools, rng, uniform(rng, 1, 3));
        append_entity(d, group[0], names);
        if (group.size() > 1) {
          append_filler(d, pools, rng, uniform(rng, 1, 2));
          append_entity(d, group[1], names);
        }
        append_filler(d, pools, rng, uniform(rng, 1, 3));
        drafts.push_back(std::move(d));
        owner.push_back(-1);
      }
      while (static_cast<int>(drafts.size()) < target) {
        Draft d;
        append_filler(d, pools, rng, uniform(rng, 4, 8));
        drafts.push_back(std::move(d));
        owner.push_back(-1);
      }

      std::vector<int> order(drafts.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);

      Document doc;
      doc.title = "synth-" + std::to_string(config.seed) + "-" + std::to_string(doc_index);
      doc.entities.resize(ne);
      std::vector<std::set<int>> evidence(planted.size());
      for (std::size_t s = 0; s < order.size(); ++s) {
        const Draft& d = drafts[order[s]];
        doc.sentences.push_back(d.words);
        for (const auto& [entity, start] : d.mentions) {
          Mention m;
          m.sent_id = static_cast<int>(s);
          m.span = {start, start + static_cast<int>(names[entity].size())};
          m.surface = join(names[entity]);
          m.entity_type = "ENT";
          doc.entities[entity].mentions.push_back(std::move(m));
        }
        if (owner[order[s]] >= 0) evidence[owner[order[s]]].insert(static_cast<int>(s));
      }
      for (auto& entity : doc.entities) {
        std::sort(entity.mentions.begin(), entity.mentions.end(),
                  [](const Mention& a, const Mention& b) {
                    return std::tie(a.sent_id, a.span.start) < std::tie(b.sent_id, b.span.start);
                  });
      }
      for (std::size_t i = 0; i < planted.size(); ++i) {
        doc.gold_relations.push_back(
            {planted[i].head, planted[i].tail, planted[i].relation, evidence[i]});
      }
      std::sort(doc.gold_relations.begin(), doc.gold_relations.end(),
                [](const RelationInstance& a, const RelationInstance& b) {
                  return std::tie(a.head_idx, a.tail_idx, a.relation_id) <
                         std::tie(b.head_idx, b.tail_idx, b.relation_id);
                });
      validate(doc, config.num_relations);
      out.documents.push_back(std::move(doc));
      break;
    }
  }
  return out;
}

std::vector<RelationInstance> trigger_classifier(const Document& doc,
                                                 const std::vector<std::string>& triggers) {
  std::map<std::tuple<int, int, int>, std::set<int>> found;
  for (int s = 0; s < doc.num_sentences(); ++s) {
    const auto& words = doc.sentences[s];
    std::vector<std::pair<int, int>> mentions;  // (start, entity)
    for (int e = 0; e < doc.num_entities(); ++e) {
      for (const auto& m : doc.entities[e].mentions) {
        if (m.sent_id == s) mentions.emplace_back(m.span.start, e);
      }
    }
    for (int w = 0; w < static_cast<int>(words.size()); ++w) {
      for (int r = 0; r < static_cast<int>(triggers.size()); ++r) {
        if (words[w] != triggers[r]) continue;
        for (const auto& [hs, h] : mentions) {
          for (const auto& [ts, t] : mentions) {
            if (h != t && hs < w && w < ts) found[{h, t, r}].insert(s);
          }
        }
      }
    }
  }
  std::vector<RelationInstance> out;
  for (const auto& [key, sents] : found) {
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), sents});
  }
  return out;
}

}  // namespace docrel
