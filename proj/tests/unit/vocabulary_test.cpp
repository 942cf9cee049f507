#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "sqlnet/synthetic_corpus.hpp"
#include "sqlnet/vocabulary.hpp"
#include "support/temp_dir.hpp"

using namespace sqlnet;

TEST(Vocabulary, ReservedRows) {
  Vocabulary v({"the", "player"});
  EXPECT_EQ(v.index(Vocabulary::kUnknownToken), Vocabulary::kUnknown);
  EXPECT_EQ(v.index(kEndToken), Vocabulary::kEnd);
  EXPECT_EQ(v.index("the"), 2u);
  EXPECT_EQ(v.index("missing"), Vocabulary::kUnknown);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.add("the"), 2u);
}

TEST(Vocabulary, BuiltFromQuestionsAndHeaders) {
  TableStore tables{{"roster", roster_table()}};
  std::vector<Example> examples{roster_example()};
  auto v = build_vocabulary({&examples}, tables);
  for (const char* t : {"who", "42", "?", "player", "no", ".", "school/club", "toronto"}) {
    EXPECT_TRUE(v.contains(t)) << t;
  }
  EXPECT_FALSE(v.contains("art"));
}

TEST(Embeddings, RowsReadBackFromFixtureFile) {
  sqlnet::testing::TempDir dir;
  const auto path = dir.write("emb.txt",
                              "the 0.1 0.2 0.3 0.4\n"
                              "Player -1 0 1e-3 2.5\n"
                              "unused 9 9 9 9\n");
  Vocabulary vocab({"the", "player", "number"});
  auto table = load_embeddings(path, vocab, 7);
  ASSERT_EQ(table.dim(), 4u);
  ASSERT_EQ(table.matrix.rows(), vocab.size());
  const std::vector<double> the{0.1, 0.2, 0.3, 0.4}, player{-1, 0, 1e-3, 2.5};
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_EQ(table.matrix.at(vocab.index("the"), c), the[c]);
    EXPECT_EQ(table.matrix.at(vocab.index("player"), c), player[c]);
    EXPECT_EQ(table.matrix.at(vocab.index("number"), c), 0.0);
    EXPECT_EQ(table.matrix.at(Vocabulary::kUnknown, c), 0.0);
  }
  EXPECT_EQ(table.found, 2u);
}

TEST(Embeddings, EmptyFileUsesConfiguredDimension) {
  std::istringstream in("");
  Vocabulary vocab({"a", "b"});
  auto table = parse_embeddings(in, vocab, 300);
  EXPECT_EQ(table.matrix.rows(), 4u);
  EXPECT_EQ(table.matrix.cols(), 300u);
  for (double v : table.matrix.values()) EXPECT_EQ(v, 0.0);
}

TEST(Embeddings, InconsistentLengthsThrow) {
  std::istringstream in("a 1 2 3\nb 1 2\n");
  Vocabulary vocab({"a", "b"});
  try {
    parse_embeddings(in, vocab, 3, "emb.txt");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("emb.txt:2:"), std::string::npos);
  }
}

TEST(Embeddings, BadNumberThrows) {
  std::istringstream in("a 1 x2 3\n");
  Vocabulary vocab({"a"});
  EXPECT_THROW(parse_embeddings(in, vocab, 3), DataError);
}

TEST(Embeddings, LoadingIsPure) {
  sqlnet::testing::TempDir dir;
  std::ostringstream text;
  auto corpus = synthetic_corpus("v", 10, 3, 2);
  const auto tokens = corpus_tokens({&corpus});
  write_synthetic_embeddings(text, tokens, 16);
  const auto path = dir.write("emb.txt", text.str());
  auto vocab = build_vocabulary({&corpus.examples}, corpus.tables);
  auto a = load_embeddings(path, vocab, 16);
  auto b = load_embeddings(path, vocab, 16);
  ASSERT_EQ(a.matrix.size(), b.matrix.size());
  EXPECT_EQ(std::memcmp(a.matrix.data(), b.matrix.data(), a.matrix.size() * sizeof(double)), 0);
  EXPECT_EQ(a.found, vocab.size() - 2);
}
