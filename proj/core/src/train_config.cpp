#include "docrel/train_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "docrel/errors.hpp"

namespace docrel {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

template <typename T = int>
T to_int(const std::string& key, const std::string& v) {
  T out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (out.count(key)) throw ConfigError("config key '" + key + "' given twice");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

ThresholdPolicy parse_threshold(const std::string& text) {
  ThresholdPolicy p;
  if (text == "auto") return p;
  p.automatic = false;
  p.value = to_double("threshold", text);
  return p;
}

void apply_train_config(KeyValues& kv, TrainConfig& c) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"learning_rate", [&](auto& k, auto& v) { c.learning_rate = to_double(k, v); }},
      {"head_learning_rate", [&](auto& k, auto& v) { c.head_learning_rate = to_double(k, v); }},
      {"weight_decay", [&](auto& k, auto& v) { c.weight_decay = to_double(k, v); }},
      {"warmup_fraction", [&](auto& k, auto& v) { c.warmup_fraction = to_double(k, v); }},
      {"epochs", [&](auto& k, auto& v) { c.epochs = to_int(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { c.batch_size = to_int(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = to_int<std::uint64_t>(k, v); }},
      {"workers", [&](auto& k, auto& v) { c.workers = to_int(k, v); }},
      {"lambda1", [&](auto& k, auto& v) { c.loss.lambda1 = to_double(k, v); }},
      {"lambda2", [&](auto& k, auto& v) { c.loss.lambda2 = to_double(k, v); }},
      {"plain_evidence_loss",
       [&](auto& k, auto& v) { c.loss.include_plain_evidence_loss = to_bool(k, v); }},
      {"threshold", [&](auto&, auto& v) { c.threshold = parse_threshold(v); }},
      {"num_layers",
       [&](auto& k, auto& v) { c.model.encoder.num_layers = to_int(k, v); }},
      {"num_heads",
       [&](auto& k, auto& v) { c.model.encoder.num_heads = to_int(k, v); }},
      {"model_dim",
       [&](auto& k, auto& v) { c.model.encoder.model_dim = to_int(k, v); }},
      {"ffn_dim",
       [&](auto& k, auto& v) { c.model.encoder.ffn_dim = to_int(k, v); }},
      {"dropout", [&](auto& k, auto& v) { c.model.encoder.dropout = to_double(k, v); }},
      {"relation_dim",
       [&](auto& k, auto& v) { c.model.relation_dim = to_int(k, v); }},
      {"per_relation_evidence",
       [&](auto& k, auto& v) { c.model.per_relation_evidence = to_bool(k, v); }},
      {"entity_guided", [&](auto& k, auto& v) { c.model.entity_guided = to_bool(k, v); }},
      {"attention_layers",
       [&](auto& k, auto& v) { c.model.attention_layers = to_int(k, v); }},
      {"max_seq_len", [&](auto& k, auto& v) {
         c.model.max_seq_len = to_int(k, v);
         c.model.encoder.max_positions = c.model.max_seq_len;
       }},
  };
  for (auto it = kv.begin(); it != kv.end();) {
    const auto s = setters.find(it->first);
    if (s == setters.end()) {
      ++it;
      continue;
    }
    s->second(it->first, it->second);
    it = kv.erase(it);
  }
}

std::string serialize_train_config(const TrainConfig& c) {
  std::ostringstream out;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "learning_rate = " << fmt(c.learning_rate) << '\n'
      << "head_learning_rate = " << fmt(c.head_learning_rate) << '\n'
      << "weight_decay = " << fmt(c.weight_decay) << '\n'
      << "warmup_fraction = " << fmt(c.warmup_fraction) << '\n'
      << "epochs = " << c.epochs << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "seed = " << c.seed << '\n'
      << "workers = " << c.workers << '\n'
      << "lambda1 = " << fmt(c.loss.lambda1) << '\n'
      << "lambda2 = " << fmt(c.loss.lambda2) << '\n'
      << "plain_evidence_loss = " << b(c.loss.include_plain_evidence_loss) << '\n'
      << "threshold = " << (c.threshold.automatic ? std::string("auto") : fmt(c.threshold.value))
      << '\n'
      << "num_layers = " << c.model.encoder.num_layers << '\n'
      << "num_heads = " << c.model.encoder.num_heads << '\n'
      << "model_dim = " << c.model.encoder.model_dim << '\n'
      << "ffn_dim = " << c.model.encoder.ffn_dim << '\n'
      << "dropout = " << fmt(c.model.encoder.dropout) << '\n'
      << "relation_dim = " << c.model.relation_dim << '\n'
      << "per_relation_evidence = " << b(c.model.per_relation_evidence) << '\n'
      << "entity_guided = " << b(c.model.entity_guided) << '\n'
      << "attention_layers = " << c.model.attention_layers << '\n'
      << "max_seq_len = " << c.model.max_seq_len << '\n';
  return out.str();
}

}  // namespace docrel
