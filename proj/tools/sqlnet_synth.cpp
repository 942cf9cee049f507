// Writes a synthetic WikiSQL-format corpus: train/dev/test example files,
// one tables file and a matching embeddings file.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "sqlnet/dataset.hpp"
#include "sqlnet/synthetic_corpus.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic WikiSQL-format corpus"};
  std::string out_dir = "synthetic";
  std::size_t train_tables = 400, dev_tables = 100, test_tables = 100, per_table = 5, dim = 50;
  std::uint64_t seed = 7;
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--train-tables", train_tables);
  app.add_option("--dev-tables", dev_tables);
  app.add_option("--test-tables", test_tables);
  app.add_option("--per-table", per_table, "Examples per table");
  app.add_option("--emb-dim", dim, "Embedding dimension");
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(out_dir);
    const sqlnet::SyntheticCorpus splits[] = {
        sqlnet::synthetic_corpus("train", train_tables, per_table, seed),
        sqlnet::synthetic_corpus("dev", dev_tables, per_table, seed + 1),
        sqlnet::synthetic_corpus("test", test_tables, per_table, seed + 2),
    };
    const char* names[] = {"train", "dev", "test"};
    std::ofstream tables(fs::path(out_dir) / "tables.jsonl");
    for (int i = 0; i < 3; ++i) {
      std::ofstream out(fs::path(out_dir) / (std::string(names[i]) + ".jsonl"));
      for (const auto& ex : splits[i].examples) out << sqlnet::example_record(ex).dump() << '\n';
      for (const auto& [id, table] : splits[i].tables) tables << sqlnet::table_record(table).dump() << '\n';
    }
    std::ofstream emb(fs::path(out_dir) / "embeddings.txt");
    sqlnet::write_synthetic_embeddings(emb, sqlnet::corpus_tokens({&splits[0], &splits[1], &splits[2]}), dim);
    std::cout << "wrote " << splits[0].examples.size() << "/" << splits[1].examples.size() << "/"
              << splits[2].examples.size() << " examples to " << out_dir << "\n";
  } catch (const std::exception& e) {
    std::cerr << "sqlnet-synth: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
