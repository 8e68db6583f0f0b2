#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "docrel/checkpoint.hpp"
#include "docrel/corpus.hpp"
#include "docrel/errors.hpp"
#include "docrel/heatmap.hpp"
#include "docrel/leaderboard.hpp"
#include "docrel/metrics.hpp"
#include "docrel/pipeline.hpp"
#include "docrel/synth.hpp"
#include "docrel/train_config.hpp"
#include "io.hpp"

namespace docrel::cli {

namespace fs = std::filesystem;

namespace {

// Flag value if given, else config-file value, else fallback.
class Settings {
 public:
  void load(const std::string& config_path) {
    if (!config_path.empty()) kv_ = load_key_values(config_path);
  }
  KeyValues& kv() { return kv_; }

  std::string path(const CLI::Option* opt, const std::string& flag_value, const std::string& key,
                    bool required = false, const std::string& fallback = {}) {
    std::string value = fallback;
    auto it = kv_.find(key);
    if (it != kv_.end()) {
      value = it->second;
      kv_.erase(it);
    }
    if (opt->count() > 0) value = flag_value;
    if (required && value.empty()) {
      throw ConfigError("missing required setting " + opt->get_name() + " (config key '" + key +
                        "')");
    }
    return value;
  }

  void finish() const {
    if (!kv_.empty()) throw ConfigError("unknown config key '" + kv_.begin()->first + "'");
  }

 private:
  KeyValues kv_;
};

struct CommonFlags {
  std::string config;
  std::string data;
  std::string checkpoint;
  std::string out;
  std::string relations;
  std::string threshold;
  int layers_l = 0;
  int workers = 1;
};

CLI::Option* add_workers(CLI::App* cmd, CommonFlags& f) {
  return cmd->add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
}

int train_command(CLI::App* cmd, CommonFlags& f, CLI::Option* data, CLI::Option* ckpt,
                  CLI::Option* rel, const std::string& dev_flag, CLI::Option* dev,
                  const std::string& log_flag, CLI::Option* log, const std::string& vocab_flag,
                  CLI::Option* vocab, std::ostream& out, std::ostream& err, bool verbose) {
  Settings s;
  s.load(f.config);
  const bool file_sets_layers = s.kv().count("attention_layers") > 0;
  TrainConfig config;
  apply_train_config(s.kv(), config);

  const auto flag = [&](const char* name) { return cmd->get_option(name)->count() > 0; };
  if (flag("--max-seq-len")) {
    config.model.max_seq_len = static_cast<int>(cmd->get_option("--max-seq-len")->as<int>());
    config.model.encoder.max_positions = config.model.max_seq_len;
  }
  if (flag("--lambda1")) config.loss.lambda1 = cmd->get_option("--lambda1")->as<double>();
  if (flag("--lr")) config.learning_rate = cmd->get_option("--lr")->as<double>();
  if (flag("--head-lr")) config.head_learning_rate = cmd->get_option("--head-lr")->as<double>();
  if (flag("--epochs")) config.epochs = cmd->get_option("--epochs")->as<int>();
  if (flag("--seed")) config.seed = cmd->get_option("--seed")->as<std::uint64_t>();
  if (flag("--threshold")) config.threshold = parse_threshold(f.threshold);
  if (flag("--workers")) config.workers = f.workers;
  if (flag("--layers-l")) {
    config.model.attention_layers = f.layers_l;
  } else if (!file_sets_layers) {
    config.model.attention_layers =
        std::min(kDefaultAttentionLayers, config.model.encoder.num_layers);
  }

  const std::string data_path = s.path(data, f.data, "data", true);
  const std::string ckpt_path = s.path(ckpt, f.checkpoint, "checkpoint", true);
  const std::string rel_path = s.path(rel, f.relations, "relations", true);
  const std::string dev_path = s.path(dev, dev_flag, "dev");
  const std::string log_path = s.path(log, log_flag, "log");
  const std::string vocab_path = s.path(vocab, vocab_flag, "vocab");
  s.finish();

  const LabelVocabulary labels = LabelVocabulary::load(rel_path);
  const std::vector<Document> docs = load_corpus(data_path, labels);
  std::optional<std::vector<Document>> dev_docs;
  if (!dev_path.empty()) dev_docs = load_corpus(dev_path, labels);
  const WordTokenizer tokenizer =
      vocab_path.empty() ? WordTokenizer::from_corpus(docs) : WordTokenizer::load(vocab_path);

  EpochCallback progress;
  if (verbose) {
    progress = [&err](const EpochLog& e, const ModelParameters&) {
      err << "epoch " << e.epoch << " L_RE=" << e.relation << " L_Evi_a=" << e.evidence_attention
          << " Loss=" << e.total << '\n';
      return true;
    };
  }
  const TrainResult result =
      train(docs, tokenizer, labels, config, dev_docs ? &*dev_docs : nullptr, progress);

  std::vector<std::pair<fs::path, std::string>> files{
      {ckpt_path, serialize_checkpoint(result.checkpoint)}};
  if (!log_path.empty()) files.emplace_back(log_path, loss_log_csv(result.log));
  write_files_atomically(files);
  out << "trained " << result.log.size() << " epochs on " << docs.size()
      << " documents; threshold " << result.checkpoint.threshold << '\n';
  return kOk;
}

struct LoadedModel {
  Checkpoint ckpt;
  LabelVocabulary labels;
  WordTokenizer tokenizer;
};

LoadedModel load_model(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  LabelVocabulary labels(ckpt.relation_names);
  WordTokenizer tok(ckpt.token_vocabulary);
  return {std::move(ckpt), std::move(labels), std::move(tok)};
}

int resolve_layers(const CLI::App* cmd, const CommonFlags& f, const ModelParameters& params) {
  if (cmd->get_option("--layers-l")->count() == 0) return 0;
  if (f.layers_l < 1 || f.layers_l > params.config.encoder.num_layers) {
    throw ConfigError("--layers-l must be in [1, " +
                      std::to_string(params.config.encoder.num_layers) + "]");
  }
  return f.layers_l;
}

int predict_command(CLI::App* cmd, CommonFlags& f, CLI::Option* data, CLI::Option* ckpt,
                    CLI::Option* outp, std::ostream& out) {
  Settings s;
  s.load(f.config);
  const std::string data_path = s.path(data, f.data, "data", true);
  const std::string ckpt_path = s.path(ckpt, f.checkpoint, "checkpoint", true);
  const std::string out_path = s.path(outp, f.out, "out", true);
  const std::string threshold =
      s.path(cmd->get_option("--threshold"), f.threshold, "threshold", false, "auto");
  const CLI::Option* workers_opt = cmd->get_option("--workers");
  int workers = f.workers;
  if (workers_opt->count() == 0 && s.kv().count("workers")) {
    TrainConfig tmp;
    apply_train_config(s.kv(), tmp);
    workers = tmp.workers;
  }
  s.finish();

  const LoadedModel model = load_model(ckpt_path);
  const std::vector<Document> docs = load_corpus(data_path, model.labels);
  PredictOptions opts;
  const ThresholdPolicy policy = parse_threshold(threshold);
  opts.threshold = policy.automatic ? model.ckpt.threshold : policy.value;
  opts.attention_layers = resolve_layers(cmd, f, model.ckpt.params);
  const PredictionSet preds = predict_corpus(docs, model.ckpt.params, model.tokenizer, opts,
                                             std::max(1, workers));
  const std::vector<LeaderboardRecord> records = to_leaderboard(preds, model.labels);
  validate_leaderboard(records, docs, model.labels);
  write_file_atomically(out_path, serialize_leaderboard(records));
  out << "wrote " << records.size() << " predictions to " << out_path << '\n';
  return kOk;
}

int eval_command(CommonFlags& f, CLI::Option* data, CLI::Option* rel, CLI::Option* outp,
                 const std::string& preds_flag, CLI::Option* preds_opt,
                 const std::string& train_flag, CLI::Option* train_opt, std::ostream& out) {
  Settings s;
  s.load(f.config);
  const std::string data_path = s.path(data, f.data, "data", true);
  const std::string rel_path = s.path(rel, f.relations, "relations", true);
  const std::string preds_path = s.path(preds_opt, preds_flag, "predictions", true);
  const std::string train_path = s.path(train_opt, train_flag, "train");
  const std::string out_path = s.path(outp, f.out, "out");
  s.finish();

  const LabelVocabulary labels = LabelVocabulary::load(rel_path);
  const std::vector<Document> gold = load_corpus(data_path, labels);
  TrainFactIndex facts;
  if (!train_path.empty()) facts = build_train_fact_index(load_corpus(train_path, labels));
  const std::vector<LeaderboardRecord> records = load_leaderboard(preds_path);
  validate_leaderboard(records, gold, labels);
  const std::string report = report_json(evaluate(records, gold, labels, facts));
  if (out_path.empty()) {
    out << report << '\n';
  } else {
    write_file_atomically(out_path, report + "\n");
  }
  return kOk;
}

int synth_command(CLI::App* cmd, CommonFlags& f, CLI::Option* outp, CLI::Option* rel,
                  SynthConfig config, std::ostream& out) {
  Settings s;
  s.load(f.config);
  const std::string out_path = s.path(outp, f.out, "out", true);
  const std::string rel_path = s.path(rel, f.relations, "relations", true);
  const std::pair<const char*, int SynthConfig::*> ints[] = {
      {"num_documents", &SynthConfig::num_documents}, {"min_entities", &SynthConfig::min_entities},
      {"max_entities", &SynthConfig::max_entities},   {"min_sentences", &SynthConfig::min_sentences},
      {"max_sentences", &SynthConfig::max_sentences}, {"num_relations", &SynthConfig::num_relations},
      {"min_evidence", &SynthConfig::min_evidence},   {"max_evidence", &SynthConfig::max_evidence},
      {"vocabulary_size", &SynthConfig::vocabulary_size}};
  const std::pair<const char*, const char*> flags[] = {
      {"num_documents", "--docs"},         {"min_entities", "--min-entities"},
      {"max_entities", "--max-entities"},   {"min_sentences", "--min-sentences"},
      {"max_sentences", "--max-sentences"}, {"num_relations", "--num-relations"},
      {"min_evidence", "--min-evidence"},   {"max_evidence", "--max-evidence"},
      {"vocabulary_size", "--vocab-size"}};
  for (std::size_t i = 0; i < std::size(ints); ++i) {
    auto it = s.kv().find(ints[i].first);
    if (it == s.kv().end()) continue;
    if (cmd->get_option(flags[i].second)->count() == 0) {
      try {
        config.*(ints[i].second) = std::stoi(it->second);
      } catch (const std::exception&) {
        throw ConfigError("config key '" + it->first + "': expected an integer");
      }
    }
    s.kv().erase(it);
  }
  if (auto it = s.kv().find("seed"); it != s.kv().end()) {
    if (cmd->get_option("--seed")->count() == 0) {
      try {
        config.seed = std::stoull(it->second);
      } catch (const std::exception&) {
        throw ConfigError("config key 'seed': expected an integer");
      }
    }
    s.kv().erase(it);
  }
  s.finish();

  const SynthCorpus corpus = generate(config);
  std::ostringstream rel_table;
  rel_table << corpus.labels.na_name() << '\t' << 0 << '\n';
  for (int r = 0; r < corpus.labels.size(); ++r) {
    rel_table << corpus.labels.name(r) << '\t' << r + 1 << '\n';
  }
  write_files_atomically({{out_path, serialize_corpus(corpus.documents, corpus.labels)},
                          {rel_path, rel_table.str()}});
  out << "wrote " << corpus.documents.size() << " documents to " << out_path << '\n';
  return kOk;
}

std::string safe_name(const std::string& title) {
  std::string s;
  for (char c : title) {
    s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  }
  return s.empty() ? "doc" : s;
}

int heatmap_command(CLI::App* cmd, CommonFlags& f, CLI::Option* data, CLI::Option* ckpt,
                    CLI::Option* outp, const std::string& title,
                    const std::vector<std::string>& pairs, bool image, std::ostream& out) {
  Settings s;
  s.load(f.config);
  const std::string data_path = s.path(data, f.data, "data", true);
  const std::string ckpt_path = s.path(ckpt, f.checkpoint, "checkpoint", true);
  const std::string out_dir = s.path(outp, f.out, "out", true);
  s.finish();

  const LoadedModel model = load_model(ckpt_path);
  const std::vector<Document> docs = load_corpus(data_path, model.labels);
  if (docs.empty()) throw ValidationError("corpus " + data_path + " is empty");
  const Document* doc = &docs.front();
  if (!title.empty()) {
    auto it = std::find_if(docs.begin(), docs.end(),
                           [&](const Document& d) { return d.title == title; });
    if (it == docs.end()) throw ValidationError("no document titled '" + title + "'");
    doc = &*it;
  }
  std::vector<std::pair<int, int>> wanted;
  for (const auto& p : pairs) {
    const auto comma = p.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument(p);
      wanted.emplace_back(std::stoi(p.substr(0, comma)), std::stoi(p.substr(comma + 1)));
    } catch (const std::exception&) {
      throw ConfigError("--pair expects HEAD,TAIL, got '" + p + "'");
    }
  }
  if (wanted.empty()) {
    for (const auto& rel : doc->gold_relations) {
      std::pair<int, int> ht{rel.head_idx, rel.tail_idx};
      if (std::find(wanted.begin(), wanted.end(), ht) == wanted.end()) wanted.push_back(ht);
    }
  }
  if (wanted.empty()) throw ConfigError("no pairs requested and the document has no gold pairs");

  const int layers = resolve_layers(cmd, f, model.ckpt.params);
  std::vector<std::pair<fs::path, std::string>> files;
  for (const auto& [h, t] : wanted) {
    const HeatmapRecord rec =
        compute_heatmap(*doc, model.ckpt.params, model.tokenizer, h, t, layers);
    const std::string stem =
        safe_name(doc->title) + "_" + std::to_string(h) + "_" + std::to_string(t);
    files.emplace_back(fs::path(out_dir) / (stem + ".csv"), heatmap_csv(rec));
    files.emplace_back(fs::path(out_dir) / (stem + "_sentences.csv"), heatmap_sentence_csv(rec));
    if (image) files.emplace_back(fs::path(out_dir) / (stem + ".pgm"), heatmap_pgm(rec));
  }
  write_files_atomically(files);
  out << "wrote " << wanted.size() << " heatmaps to " << out_dir << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Document-level relation extraction with evidence prediction"};
  app.name("docrel");
  app.require_subcommand(1);

  CommonFlags f;
  std::string dev_flag, log_flag, vocab_flag, preds_flag, train_flag, title;
  std::vector<std::string> pairs;
  bool verbose = false;
  bool image = false;
  int max_seq_len = 0, epochs = 0;
  double lambda1 = 0.0, lr = 0.0, head_lr = 0.0;
  std::uint64_t seed = 0;
  SynthConfig synth_config;

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  auto* t_data = train_cmd->add_option("--data", f.data, "Training corpus (JSON)");
  auto* t_ckpt = train_cmd->add_option("--checkpoint", f.checkpoint, "Output checkpoint");
  auto* t_rel = train_cmd->add_option("--relations", f.relations, "Relation table");
  auto* t_dev = train_cmd->add_option("--dev", dev_flag, "Dev corpus for threshold tuning");
  auto* t_log = train_cmd->add_option("--log", log_flag, "Loss log CSV");
  auto* t_vocab = train_cmd->add_option("--vocab", vocab_flag, "Token vocabulary file");
  train_cmd->add_option("--config", f.config, "key=value config file");
  train_cmd->add_option("--max-seq-len", max_seq_len, "Maximum sequence length");
  train_cmd->add_option("--layers-l", f.layers_l, "Attention layers pooled for evidence");
  train_cmd->add_option("--lambda1", lambda1, "Weight of the attention-guided evidence loss");
  train_cmd->add_option("--lr", lr, "Encoder learning rate");
  train_cmd->add_option("--head-lr", head_lr, "Head learning rate");
  train_cmd->add_option("--epochs", epochs, "Training epochs");
  train_cmd->add_option("--seed", seed, "Random seed");
  train_cmd->add_option("--threshold", f.threshold, "auto or a fixed relation threshold");
  add_workers(train_cmd, f);
  train_cmd->add_flag("-v,--verbose", verbose, "Print per-epoch losses");

  auto* predict_cmd = app.add_subcommand("predict", "Write a leaderboard prediction file");
  auto* p_data = predict_cmd->add_option("--data", f.data, "Corpus to predict");
  auto* p_ckpt = predict_cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint");
  auto* p_out = predict_cmd->add_option("--out", f.out, "Output prediction file");
  predict_cmd->add_option("--config", f.config, "key=value config file");
  predict_cmd->add_option("--threshold", f.threshold, "auto (checkpoint value) or a float");
  predict_cmd->add_option("--layers-l", f.layers_l, "Attention layers pooled for evidence");
  add_workers(predict_cmd, f);

  auto* eval_cmd = app.add_subcommand("eval", "Score a prediction file against gold");
  auto* e_data = eval_cmd->add_option("--data", f.data, "Gold corpus");
  auto* e_rel = eval_cmd->add_option("--relations", f.relations, "Relation table");
  auto* e_preds = eval_cmd->add_option("--predictions", preds_flag, "Prediction file");
  auto* e_train = eval_cmd->add_option("--train", train_flag, "Training corpus for Ign F1");
  auto* e_out = eval_cmd->add_option("--out", f.out, "Report path (default: stdout)");
  eval_cmd->add_option("--config", f.config, "key=value config file");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  auto* s_out = synth_cmd->add_option("--out", f.out, "Output corpus (JSON)");
  auto* s_rel = synth_cmd->add_option("--relations", f.relations, "Output relation table");
  synth_cmd->add_option("--config", f.config, "key=value config file");
  synth_cmd->add_option("--docs", synth_config.num_documents, "Number of documents");
  synth_cmd->add_option("--seed", synth_config.seed, "Random seed");
  synth_cmd->add_option("--num-relations", synth_config.num_relations, "Relation types (<= 10)");
  synth_cmd->add_option("--vocab-size", synth_config.vocabulary_size, "Vocabulary size");
  synth_cmd->add_option("--min-entities", synth_config.min_entities);
  synth_cmd->add_option("--max-entities", synth_config.max_entities);
  synth_cmd->add_option("--min-sentences", synth_config.min_sentences);
  synth_cmd->add_option("--max-sentences", synth_config.max_sentences);
  synth_cmd->add_option("--min-evidence", synth_config.min_evidence);
  synth_cmd->add_option("--max-evidence", synth_config.max_evidence);

  auto* heat_cmd = app.add_subcommand("heatmap", "Export attention heatmaps for entity pairs");
  auto* h_data = heat_cmd->add_option("--data", f.data, "Corpus");
  auto* h_ckpt = heat_cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint");
  auto* h_out = heat_cmd->add_option("--out", f.out, "Output directory");
  heat_cmd->add_option("--config", f.config, "key=value config file");
  heat_cmd->add_option("--title", title, "Document title (default: first document)");
  heat_cmd->add_option("--pair", pairs, "HEAD,TAIL entity indices (repeatable)");
  heat_cmd->add_option("--layers-l", f.layers_l, "Attention layers pooled");
  heat_cmd->add_flag("--image", image, "Also write a PGM image per pair");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "docrel: " << e.what() << '\n';
    if (auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front()) {
      err << "run '" << sub->get_name() << " --help' for usage\n";
    }
    return kUsage;
  }

  try {
    if (train_cmd->parsed()) {
      return train_command(train_cmd, f, t_data, t_ckpt, t_rel, dev_flag, t_dev, log_flag, t_log,
                           vocab_flag, t_vocab, out, err, verbose);
    }
    if (predict_cmd->parsed()) return predict_command(predict_cmd, f, p_data, p_ckpt, p_out, out);
    if (eval_cmd->parsed()) {
      return eval_command(f, e_data, e_rel, e_out, preds_flag, e_preds, train_flag, e_train, out);
    }
    if (synth_cmd->parsed()) return synth_command(synth_cmd, f, s_out, s_rel, synth_config, out);
    if (heat_cmd->parsed()) {
      return heatmap_command(heat_cmd, f, h_data, h_ckpt, h_out, title, pairs, image, out);
    }
  } catch (const ConfigError& e) {
    err << "docrel: " << e.what() << '\n';
    return kUsage;
  } catch (const DivergenceError& e) {
    err << "docrel: training diverged on document '" << e.document() << "': " << e.what() << '\n';
    return kDivergence;
  } catch (const std::exception& e) {
    err << "docrel: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace docrel::cli
