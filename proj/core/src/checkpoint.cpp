#include "docrel/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "docrel/errors.hpp"

namespace docrel {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'D', 'O', 'C', 'R', 'E', 'L', 'C', 'K'};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ParseError("checkpoint truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

json config_to_json(const ModelConfig& c) {
  const EncoderConfig& e = c.encoder;
  return {{"encoder",
           {{"num_layers", e.num_layers},
            {"num_heads", e.num_heads},
            {"model_dim", e.model_dim},
            {"ffn_dim", e.ffn_dim},
            {"vocab_size", e.vocab_size},
            {"max_positions", e.max_positions},
            {"dropout", e.dropout},
            {"layer_norm_eps", e.layer_norm_eps}}},
          {"num_relations", c.num_relations},
          {"relation_dim", c.relation_dim},
          {"per_relation_evidence", c.per_relation_evidence},
          {"entity_guided", c.entity_guided},
          {"attention_layers", c.attention_layers},
          {"max_seq_len", c.max_seq_len}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  const json& e = j.at("encoder");
  c.encoder.num_layers = e.at("num_layers").get<int>();
  c.encoder.num_heads = e.at("num_heads").get<int>();
  c.encoder.model_dim = e.at("model_dim").get<int>();
  c.encoder.ffn_dim = e.at("ffn_dim").get<int>();
  c.encoder.vocab_size = e.at("vocab_size").get<int>();
  c.encoder.max_positions = e.at("max_positions").get<int>();
  c.encoder.dropout = e.at("dropout").get<double>();
  c.encoder.layer_norm_eps = e.at("layer_norm_eps").get<double>();
  c.num_relations = j.at("num_relations").get<int>();
  c.relation_dim = j.at("relation_dim").get<int>();
  c.per_relation_evidence = j.at("per_relation_evidence").get<bool>();
  c.entity_guided = j.at("entity_guided").get<bool>();
  c.attention_layers = j.at("attention_layers").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  return c;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json header = {{"config", config_to_json(ckpt.params.config)},
                 {"token_vocabulary", ckpt.token_vocabulary},
                 {"relation_names", ckpt.relation_names},
                 {"na_name", ckpt.na_name}};
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, header_text.size());
  out += header_text;
  put<double>(out, ckpt.threshold);

  std::uint64_t count = 0;
  ckpt.params.visit([&](const std::string&, const Matrix&) { ++count; });
  put<std::uint64_t>(out, count);
  ckpt.params.visit([&](const std::string& name, const Matrix& m) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(out, m(i, j));
    }
  });
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.get_string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw ParseError("not a checkpoint file (bad magic)");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = in.get<std::uint64_t>();
  json header;
  try {
    header = json::parse(in.get_string(header_len));
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }
  Checkpoint ckpt;
  try {
    ckpt.params = ModelParameters::zeros(config_from_json(header.at("config")));
    ckpt.token_vocabulary = header.at("token_vocabulary").get<std::vector<std::string>>();
    ckpt.relation_names = header.at("relation_names").get<std::vector<std::string>>();
    ckpt.na_name = header.at("na_name").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }
  ckpt.threshold = in.get<double>();

  std::map<std::string, Matrix*> slots;
  ckpt.params.visit([&](const std::string& name, Matrix& m) { slots[name] = &m; });
  const auto count = in.get<std::uint64_t>();
  if (count != slots.size()) throw ParseError("checkpoint parameter count mismatch");
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name_len = in.get<std::uint32_t>();
    const std::string name = in.get_string(name_len);
    const auto rows = in.get<std::uint64_t>();
    const auto cols = in.get<std::uint64_t>();
    auto it = slots.find(name);
    if (it == slots.end()) throw ParseError("unexpected checkpoint parameter '" + name + "'");
    Matrix& m = *it->second;
    if (static_cast<std::uint64_t>(m.rows()) != rows || static_cast<std::uint64_t>(m.cols()) != cols) {
      throw ParseError("shape mismatch for checkpoint parameter '" + name + "'");
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = in.get<double>();
    }
  }
  if (!in.done()) throw ParseError("trailing bytes after checkpoint payload");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write checkpoint " + path.string());
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ParseError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace docrel
