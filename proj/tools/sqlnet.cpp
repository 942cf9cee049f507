// sqlnet <ingest|train|eval|predict|gradcheck|reshuffle> [--config FILE] [--key=value ...]

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sqlnet/checkpoint.hpp"
#include "sqlnet/config.hpp"
#include "sqlnet/dataset.hpp"
#include "sqlnet/eval.hpp"
#include "sqlnet/inference.hpp"
#include "sqlnet/model_check.hpp"
#include "sqlnet/training.hpp"
#include "sqlnet/vocabulary.hpp"

namespace fs = std::filesystem;
using namespace sqlnet;

namespace {

constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Data {
  std::vector<Example> train, dev, test;
  TableStore tables;
};

Data load_data(const RunConfig& cfg, bool need_train) {
  Data data;
  if (cfg.tables_path.empty()) throw ConfigError("tables_path", "required");
  for (const auto& path : cfg.table_paths()) load_tables_into(path, data.tables);
  if (need_train && cfg.train_path.empty()) throw ConfigError("train_path", "required");
  if (!cfg.train_path.empty()) data.train = load_examples(cfg.train_path);
  if (!cfg.dev_path.empty()) data.dev = load_examples(cfg.dev_path);
  if (!cfg.test_path.empty()) data.test = load_examples(cfg.test_path);
  return data;
}

const std::vector<Example>& split(const Data& data, const RunConfig& cfg) {
  const std::string& name = cfg.eval_split;
  const std::string& path = name == "train" ? cfg.train_path : name == "dev" ? cfg.dev_path : cfg.test_path;
  if (path.empty()) throw ConfigError(name + "_path", "required to evaluate the " + name + " split");
  return name == "train" ? data.train : name == "dev" ? data.dev : data.test;
}

fs::path resolve_run_dir(RunConfig& cfg) {
  if (cfg.run_dir.empty()) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    std::ostringstream name;
    name << "runs/" << std::put_time(&tm, "%Y%m%d-%H%M%S") << "-seed" << cfg.seed;
    cfg.run_dir = name.str();
  }
  fs::create_directories(cfg.run_dir);
  std::ofstream(fs::path(cfg.run_dir) / "config.resolved") << cfg.resolved_text();
  return cfg.run_dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_examples(const fs::path& path, const std::vector<Example>& examples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& ex : examples) out << example_record(ex).dump() << '\n';
}

/// Every example's table must exist and cover its column indices.
std::size_t check_against_tables(const std::vector<Example>& examples, const TableStore& tables) {
  std::size_t unresolved = 0;
  for (const auto& ex : examples) {
    auto it = tables.find(ex.table_id);
    if (it == tables.end()) throw DataError("example " + ex.id + ": unknown table " + ex.table_id);
    check_example_against(ex, it->second.schema);
    for (const auto& span : ex.value_spans) unresolved += span ? 0 : 1;
  }
  return unresolved;
}

Vocabulary corpus_vocabulary(const Data& data) {
  return build_vocabulary({&data.train, &data.dev, &data.test}, data.tables);
}

SqlNetModel<double> load_model(const RunConfig& cfg) {
  const std::string path = cfg.checkpoint.empty() ? (fs::path(cfg.run_dir) / "checkpoint.bin").string() : cfg.checkpoint;
  return load_checkpoint<double>(path);
}

int run_ingest(RunConfig& cfg) {
  const Data data = load_data(cfg, false);
  const fs::path dir = resolve_run_dir(cfg);
  std::ostringstream report;
  report << "tables=" << data.tables.size() << "\n";
  const std::pair<const char*, const std::vector<Example>*> splits[] = {
      {"train", &data.train}, {"dev", &data.dev}, {"test", &data.test}};
  for (const auto& [name, examples] : splits) {
    const std::size_t unresolved = check_against_tables(*examples, data.tables);
    report << name << "_examples=" << examples->size() << "\n" << name << "_unresolved_values=" << unresolved << "\n";
    write_examples(dir / (std::string(name) + ".jsonl"), *examples);
  }
  const Vocabulary vocab = corpus_vocabulary(data);
  report << "vocabulary=" << vocab.size() << "\n";
  if (!cfg.embeddings_path.empty()) {
    const auto table = load_embeddings(cfg.embeddings_path, vocab, cfg.emb_dim);
    report << "embedding_dim=" << table.dim() << "\nembedding_coverage=" << table.found << "\n";
  }
  std::ofstream tables(dir / "tables.jsonl");
  for (const auto& [id, table] : data.tables) tables << table_record(table).dump() << '\n';
  std::ofstream vocab_out(dir / "vocab.txt");
  for (const auto& t : vocab.tokens()) vocab_out << t << '\n';
  write_text(dir / "ingest_report.txt", report.str());
  std::cout << report.str();
  return 0;
}

int run_train(RunConfig& cfg) {
  const Data data = load_data(cfg, true);
  check_against_tables(data.train, data.tables);
  const fs::path dir = resolve_run_dir(cfg);
  const Vocabulary vocab = corpus_vocabulary(data);

  SqlNetModel<double> model(cfg.model_config(), vocab);
  if (cfg.embeddings_path.empty()) {
    model.initialize(cfg.seed);
  } else {
    const auto table = load_embeddings(cfg.embeddings_path, vocab, cfg.emb_dim);
    if (table.dim() != cfg.emb_dim) {
      throw ConfigError("emb_dim", "is " + std::to_string(cfg.emb_dim) + " but " + cfg.embeddings_path + " has " +
                                       std::to_string(table.dim()) + "-dimensional vectors");
    }
    model.initialize(cfg.seed, &table);
  }
  const TrainConfig tc = cfg.train_config();
  model.embedding.requires_grad = false;

  auto info = [&](std::size_t epoch) {
    return CheckpointInfo{{"alpha", cfg.get("alpha")}, {"seed", cfg.get("seed")}, {"epoch", std::to_string(epoch)},
                          {"variant", cfg.variant}};
  };
  save_checkpoint(dir / "checkpoint.bin", model, info(0));

  std::ofstream log(dir / "loss_log.tsv");
  log << "epoch\tmean_loss\tembeddings_trainable";
  if (cfg.eval_every > 0 && !data.dev.empty()) log << "\tdev_acc_qm\tdev_acc_ex";
  log << "\n";
  train<double>(model, data.train, data.tables, tc, [&](const EpochRecord& r, SqlNetModel<double>& m) {
    log << r.epoch << '\t' << std::setprecision(17) << r.mean_loss << '\t' << (r.embeddings_trainable ? 1 : 0);
    std::cout << "epoch " << r.epoch << " loss " << std::setprecision(6) << r.mean_loss;
    if (cfg.eval_every > 0 && !data.dev.empty()) {
      if (r.epoch % cfg.eval_every == 0 || r.epoch == tc.epochs) {
        const auto report = evaluate_split(m, data.dev, data.tables);
        log << '\t' << report.acc_qm() << '\t' << report.acc_ex();
        std::cout << " dev_acc_qm " << report.acc_qm() << " dev_acc_ex " << report.acc_ex();
      } else {
        log << "\t\t";
      }
    }
    log << '\n' << std::flush;
    std::cout << '\n';
    if (r.epoch % cfg.checkpoint_every == 0 || r.epoch == tc.epochs) {
      save_checkpoint(dir / "checkpoint.bin", m, info(r.epoch));
    }
    return true;
  });
  std::cout << "run directory " << dir.string() << "\n";
  return 0;
}

int run_eval(RunConfig& cfg) {
  const Data data = load_data(cfg, false);
  const auto& examples = split(data, cfg);
  const fs::path dir = resolve_run_dir(cfg);
  auto model = load_model(cfg);
  const auto report = evaluate_split(model, examples, data.tables);
  write_text(dir / "metrics.txt", metrics_text(report));
  write_text(dir / "metrics.json", metrics_json(report).dump(2) + "\n");
  std::cout << metrics_text(report);
  for (const auto& id : report.missing_table_ids) std::cerr << "missing table " << id << "\n";
  return 0;
}

int run_predict(RunConfig& cfg) {
  const Data data = load_data(cfg, false);
  const auto& examples = split(data, cfg);
  const fs::path dir = resolve_run_dir(cfg);
  auto model = load_model(cfg);
  std::ofstream out(dir / "predictions.jsonl");
  std::size_t missing = 0;
  for (const auto& ex : examples) {
    auto it = data.tables.find(ex.table_id);
    if (it == data.tables.end()) {
      ++missing;
      continue;
    }
    const auto p = infer_query(model, ex.question, encode_input(model.vocab(), ex.question, it->second.schema));
    nlohmann::json probs;
    probs["sel"] = p.select_distribution[p.sketch.select_column];
    probs["agg"] = p.agg_distribution[static_cast<std::size_t>(p.sketch.agg)];
    probs["num"] = p.num_distribution[p.sketch.conditions.size()];
    probs["where"] = nlohmann::json::array();
    probs["op"] = nlohmann::json::array();
    for (std::size_t k = 0; k < p.conditions.size(); ++k) {
      probs["where"].push_back(p.conditions[k].where_probability);
      probs["op"].push_back(p.conditions[k].op_distribution[static_cast<std::size_t>(p.sketch.conditions[k].op)]);
    }
    out << nlohmann::json{{"example_id", ex.id}, {"sql", sql_record(p.sketch)}, {"probs", probs}}.dump() << '\n';
  }
  std::cout << "wrote " << examples.size() - missing << " predictions to " << (dir / "predictions.jsonl").string()
            << "\n";
  if (missing > 0) std::cerr << missing << " examples skipped for missing tables\n";
  return 0;
}

int run_gradcheck(RunConfig& cfg) {
  const fs::path dir = resolve_run_dir(cfg);
  std::ostringstream text;
  bool ok = true;
  for (auto formula : {WhereFormula::kSequenceToSet, WhereFormula::kColumnAttention,
                       WhereFormula::kColumnAttentionAffine}) {
    const auto r = check_model_gradients<double>(cfg.seed, formula);
    const bool passed = r.passed(cfg.gradcheck_tolerance);
    ok = ok && passed;
    text << "where_formula=" << where_formula_name(formula) << " entries=" << r.entries_checked
         << " max_relative_error=" << r.max_relative_error << " worst=" << r.worst_parameter << "[" << r.worst_index
         << "] " << (passed ? "PASS" : "FAIL") << "\n";
  }
  write_text(dir / "gradcheck.txt", text.str());
  std::cout << text.str();
  return ok ? 0 : 1;
}

int run_reshuffle(RunConfig& cfg) {
  const auto ratios = cfg.parsed_ratios();
  Data data = load_data(cfg, false);
  std::vector<Example> all;
  for (auto* part : {&data.train, &data.dev, &data.test}) all.insert(all.end(), part->begin(), part->end());
  if (all.empty()) throw ConfigError("train_path", "no examples to reshuffle");
  const fs::path dir = resolve_run_dir(cfg);
  const auto out = reshuffle_split(all, ratios, cfg.seed);
  write_examples(dir / "train.jsonl", out.train);
  write_examples(dir / "dev.jsonl", out.dev);
  write_examples(dir / "test.jsonl", out.test);
  std::cout << "train=" << out.train.size() << " dev=" << out.dev.size() << " test=" << out.test.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SQL sketch synthesis from natural language questions"};
  app.allow_extras();
  std::string command, config_path;
  app.add_option("command", command, "ingest, train, eval, predict, gradcheck or reshuffle")->required();
  app.add_option("--config", config_path, "key=value configuration file");
  app.footer("Any configuration key may be overridden with --key=value.");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    const auto extras = app.remaining();
    for (std::size_t i = 0; i < extras.size(); ++i) {
      const std::string& arg = extras[i];
      if (arg.rfind("--", 0) != 0) throw UsageError("unexpected argument '" + arg + "'");
      const auto eq = arg.find('=');
      if (eq != std::string::npos) {
        cfg.set(arg.substr(2, eq - 2), arg.substr(eq + 1));
      } else {
        if (i + 1 >= extras.size()) throw ConfigError(arg.substr(2), "missing value");
        cfg.set(arg.substr(2), extras[++i]);
      }
    }
    cfg.validate();

    if (command == "ingest") return run_ingest(cfg);
    if (command == "train") return run_train(cfg);
    if (command == "eval") return run_eval(cfg);
    if (command == "predict") return run_predict(cfg);
    if (command == "gradcheck") return run_gradcheck(cfg);
    if (command == "reshuffle") return run_reshuffle(cfg);
    throw UsageError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    std::cerr << "sqlnet: configuration error in field " << e.what() << "\n";
    return kUsageError;
  } catch (const UsageError& e) {
    std::cerr << "sqlnet: " << e.what() << "\n" << app.help();
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "sqlnet " << command << ": " << e.what() << "\n";
    return 1;
  }
}
