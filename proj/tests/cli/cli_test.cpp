#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sqlnet/checkpoint.hpp"
#include "sqlnet/eval.hpp"
#include "sqlnet/synthetic_corpus.hpp"
#include "support/temp_dir.hpp"

using namespace sqlnet;
using sqlnet::testing::read_file;
using sqlnet::testing::TempDir;

namespace {

struct Run {
  int status = -1;
  std::string out, err;
};

Run sqlnet_cli(const TempDir& dir, const std::string& args) {
  const std::string out = dir.file("stdout.txt"), err = dir.file("stderr.txt");
  const std::string cmd = std::string(SQLNET_CLI) + " " + args + " >" + out + " 2>" + err;
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

/// One synthetic table with a few examples, written as a corpus.
struct CorpusFiles {
  SyntheticCorpus corpus;
  std::string train, dev, tables, embeddings, config;
};

CorpusFiles write_corpus(const TempDir& dir, std::size_t tables, std::size_t per_table, std::uint64_t seed) {
  CorpusFiles f{synthetic_corpus("cli", tables, per_table, seed), {}, {}, {}, {}, {}};
  std::ostringstream ex, tb, emb;
  for (const auto& e : f.corpus.examples) ex << example_record(e).dump() << "\n";
  for (const auto& [id, t] : f.corpus.tables) tb << table_record(t).dump() << "\n";
  write_synthetic_embeddings(emb, corpus_tokens({&f.corpus}), 16);
  f.train = dir.write("train.jsonl", ex.str());
  f.dev = dir.write("dev.jsonl", ex.str());
  f.tables = dir.write("tables.jsonl", tb.str());
  f.embeddings = dir.write("emb.txt", emb.str());
  f.config = dir.write("run.cfg",
                       "train_path=" + f.train + "\ndev_path=" + f.dev + "\ntables_path=" + f.tables +
                           "\nembeddings_path=" + f.embeddings + "\nemb_dim=16\nhidden_size=24\nbatch_size=3\n");
  return f;
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    auto eq = line.find('=');
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

}  // namespace

TEST(Cli, GradcheckPasses) {
  TempDir dir;
  auto r = sqlnet_cli(dir, "gradcheck --run_dir=" + dir.file("gc"));
  EXPECT_EQ(r.status, 0) << r.out << r.err;
  const auto report = read_file(dir.file("gc/gradcheck.txt"));
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 3);
  EXPECT_EQ(report.find("FAIL"), std::string::npos) << report;
  EXPECT_NE(read_file(dir.file("gc/config.resolved")).find("gradcheck_tolerance="), std::string::npos);
}

TEST(Cli, TrainWithZeroEpochsSavesTheInitialization) {
  TempDir dir;
  auto f = write_corpus(dir, 2, 3, 5);
  auto r = sqlnet_cli(dir, "train --config " + f.config + " --epochs=0 --seed 23 --run_dir=" + dir.file("run"));
  ASSERT_EQ(r.status, 0) << r.err;
  CheckpointInfo info;
  auto saved = load_checkpoint<double>(dir.file("run/checkpoint.bin"), &info);
  EXPECT_EQ(info.at("epoch"), "0");
  EXPECT_EQ(info.at("seed"), "23");

  auto train = load_examples(f.train), dev = load_examples(f.dev);
  auto tables = load_tables(f.tables);
  std::vector<Example> none;
  auto vocab = build_vocabulary({&train, &dev, &none}, tables);
  auto emb = load_embeddings(f.embeddings, vocab, 16);
  ModelConfig mc;
  mc.hidden_size = 24;
  mc.embedding_dim = 16;
  SqlNetModel<double> fresh(mc, vocab);
  fresh.initialize(23, &emb);
  ASSERT_EQ(saved.parameters().size(), fresh.parameters().size());
  for (std::size_t i = 0; i < fresh.parameters().size(); ++i) {
    EXPECT_EQ(saved.parameters()[i]->value.values(), fresh.parameters()[i]->value.values())
        << fresh.parameters()[i]->name;
  }
  EXPECT_EQ(read_file(dir.file("run/loss_log.tsv")), "epoch\tmean_loss\tembeddings_trainable\n");
}

TEST(Cli, TrainThenEvalAndPredictOnMemorizedFixture) {
  TempDir dir;
  auto f = write_corpus(dir, 1, 3, 12);
  const std::string run = dir.file("run");
  auto r = sqlnet_cli(dir, "train --config " + f.config + " --epochs=150 --lr=0.01 --checkpoint_every=50 --run_dir=" +
                               run + " --eval_every=50 --variant=seq2set+CA");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto log = read_file(run + "/loss_log.tsv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 151);
  EXPECT_NE(log.find("dev_acc_qm"), std::string::npos);

  r = sqlnet_cli(dir, "eval --config " + f.config + " --run_dir=" + run);
  ASSERT_EQ(r.status, 0) << r.err;
  auto metrics = key_values(read_file(run + "/metrics.txt"));
  EXPECT_EQ(metrics.at("total"), "3");
  EXPECT_EQ(metrics.at("acc_qm"), "1.000000") << read_file(run + "/metrics.txt");
  EXPECT_EQ(metrics.at("acc_ex"), "1.000000");
  EXPECT_EQ(metrics.at("acc_lf"), "n/a");
  auto json = nlohmann::json::parse(read_file(run + "/metrics.json"));
  EXPECT_EQ(json["acc_qm"], 1.0);

  r = sqlnet_cli(dir, "predict --config " + f.config + " --run_dir=" + run + " --eval_split=train");
  ASSERT_EQ(r.status, 0) << r.err;
  std::istringstream preds(read_file(run + "/predictions.jsonl"));
  std::size_t n = 0;
  for (std::string line; std::getline(preds, line); ++n) {
    auto rec = nlohmann::json::parse(line);
    const auto& truth = f.corpus.examples.at(n);
    EXPECT_EQ(rec["example_id"], truth.id);
    EXPECT_TRUE(query_match(parse_sql_record(rec["sql"]), truth.truth));
    EXPECT_EQ(rec["probs"]["where"].size(), truth.truth.conditions.size());
    EXPECT_GT(rec["probs"]["sel"].get<double>(), 0.5);
  }
  EXPECT_EQ(n, 3u);
}

TEST(Cli, BadConfigExitsWithUsageErrorNamingTheField) {
  TempDir dir;
  auto r = sqlnet_cli(dir, "train --hidden_size=7 --tables_path=x");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("hidden_size"), std::string::npos) << r.err;

  const auto cfg = dir.write("bad.cfg", "epochs=3\nbatchsize=4\n");
  r = sqlnet_cli(dir, "train --config " + cfg);
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("batchsize"), std::string::npos) << r.err;

  r = sqlnet_cli(dir, "train --run_dir=" + dir.file("x"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("tables_path"), std::string::npos) << r.err;

  r = sqlnet_cli(dir, "frobnicate");
  EXPECT_EQ(r.status, 2);
}

TEST(Cli, MissingInputFileFailsWithContext) {
  TempDir dir;
  auto r = sqlnet_cli(dir, "ingest --tables_path=/nonexistent/t.jsonl --run_dir=" + dir.file("r"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("/nonexistent/t.jsonl"), std::string::npos) << r.err;
}

TEST(Cli, IngestWritesNormalizedCorpusAndReport) {
  TempDir dir;
  auto f = write_corpus(dir, 3, 2, 9);
  auto r = sqlnet_cli(dir, "ingest --config " + f.config + " --run_dir=" + dir.file("ing"));
  ASSERT_EQ(r.status, 0) << r.err;
  auto report = key_values(read_file(dir.file("ing/ingest_report.txt")));
  EXPECT_EQ(report.at("tables"), "3");
  EXPECT_EQ(report.at("train_examples"), "6");
  EXPECT_EQ(report.at("embedding_dim"), "16");
  EXPECT_EQ(load_examples(dir.file("ing/train.jsonl")).size(), 6u);
  EXPECT_EQ(load_tables(dir.file("ing/tables.jsonl")).size(), 3u);
  const auto vocab = read_file(dir.file("ing/vocab.txt"));
  EXPECT_EQ(vocab.rfind("<UNK>\n<END>\n", 0), 0u);
}

TEST(Cli, ReshuffleKeepsTablesInTrain) {
  TempDir dir;
  auto f = write_corpus(dir, 20, 5, 4);
  auto r = sqlnet_cli(dir, "reshuffle --tables_path=" + f.tables + " --train_path=" + f.train +
                               " --reshuffle_ratios=0.6,0.2,0.2 --seed=3 --run_dir=" + dir.file("rs"));
  ASSERT_EQ(r.status, 0) << r.err;
  auto train = load_examples(dir.file("rs/train.jsonl"));
  auto dev = load_examples(dir.file("rs/dev.jsonl"));
  auto test = load_examples(dir.file("rs/test.jsonl"));
  EXPECT_EQ(train.size() + dev.size() + test.size(), 100u);
  EXPECT_EQ(dev.size(), 20u);
  EXPECT_EQ(test.size(), 20u);
  std::set<std::string> seen;
  for (const auto& e : train) seen.insert(e.table_id);
  for (const auto* part : {&dev, &test}) {
    for (const auto& e : *part) EXPECT_TRUE(seen.count(e.table_id));
  }
}
