#include "homer/scoring.hpp"

#include <catch_amalgamated.hpp>
#include <filesystem>
#include <random>

#include "oracles.hpp"

using namespace homer;
namespace fs = std::filesystem;

namespace {

const LexicalDatabase& db() {
  static LexicalDatabase d = LexicalDatabase::load(fs::path(HOMER_FIXTURE_DIR) / "wordnet_rich");
  return d;
}

Joke joke_with(std::vector<std::string> tokens) {
  Joke j;
  for (const auto& t : tokens) j.text += t + " ";
  j.id = joke_id_for(j.text);
  j.source = "fixture";
  j.tokens = std::move(tokens);
  return j;
}

std::vector<const Joke*> ptrs(const std::vector<Joke>& jokes) {
  std::vector<const Joke*> out;
  for (const Joke& j : jokes) out.push_back(&j);
  return out;
}

constexpr double kInvE = 0.36787944117144233;  // exp(-1)

}  // namespace

TEST_CASE("target semantic similarity over synset pairs") {
  CHECK(tss("dog", "dog", db()) == 1.0);
  CHECK(tss("qzxv", "dog", db()) == 0.0);
  CHECK_THAT(tss("dog", "cat", db()), Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
  // multiword entities without a collocation entry have no synsets
  CHECK(tss("coffee cup", "milk", db()) == 0.0);
}

TEST_CASE("conceptual opposition from one-hop neighborhoods") {
  // single-synset word against itself: identical neighborhoods
  CHECK(conceptual_opposition("dog", "dog", db()) == 0.0);
  // no neighbors in common at all (adjective satellites are isolated)
  CHECK(conceptual_opposition("hot", "scalding", db()) == 1.0);
  // R(wolf) = {wolf, animal, pack}, R(hound) = {hound, animal, pack}
  CHECK_THAT(conceptual_opposition("wolf", "hound", db()),
             Catch::Matchers::WithinAbs(0.5, 1e-12));
  // a word with no synsets at all degrades to full opposition
  CHECK(conceptual_opposition("qzxv", "dog", db()) == 1.0);
}

TEST_CASE("relevance-opposition composes similarity with a gated bonus") {
  CHECK(relevance_opposition("qzxv", "dog", db()) == 0.0);
  CHECK(relevance_opposition_value(1.0, 0.0) == 1.0);
  CHECK_THAT(relevance_opposition_value(1.0, 1.0),
             Catch::Matchers::WithinAbs(1.0 + kInvE, 1e-12));
  CHECK_THAT(relevance_opposition_value(0.5, 0.5),
             Catch::Matchers::WithinAbs(0.651632664928158, 1e-12));
  // cream/milk realize TSS = 0.5 and CO = 0.5 on the fixture
  CHECK_THAT(tss("cream", "milk", db()), Catch::Matchers::WithinAbs(0.5, 1e-12));
  CHECK_THAT(conceptual_opposition("cream", "milk", db()),
             Catch::Matchers::WithinAbs(0.5, 1e-12));
  CHECK_THAT(relevance_opposition("cream", "milk", db()),
             Catch::Matchers::WithinAbs(0.651632664928158, 1e-12));
}

TEST_CASE("the opposition gate peaks at exactly 1/e and stays bounded") {
  CHECK_THAT(opposition_gate(1.0), Catch::Matchers::WithinAbs(kInvE, 1e-15));
  for (int i = 0; i <= 1000; ++i) {
    double x = i / 1000.0;
    CHECK(opposition_gate(x) <= kInvE + 1e-15);
    CHECK(opposition_gate(x) >= 0.0);
  }
}

TEST_CASE("relevance-opposition is monotone in both arguments") {
  const double step = 1e-3;
  const double tol = 1e-6;
  for (double co : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    double prev = relevance_opposition_value(0.0, co);
    for (int i = 1; i <= 1000; ++i) {
      double cur = relevance_opposition_value(i * step, co);
      CHECK(cur >= prev - tol);
      prev = cur;
    }
  }
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    double prev = relevance_opposition_value(t, 0.0);
    for (int i = 1; i <= 1000; ++i) {
      double cur = relevance_opposition_value(t, i * step);
      CHECK(cur >= prev - tol);
      prev = cur;
    }
  }
}

TEST_CASE("relevance-opposition equals TSS when conceptual opposition is zero") {
  for (int i = 0; i <= 1000; ++i) {
    double t = i / 1000.0;
    CHECK(relevance_opposition_value(t, 0.0) == t);
    CHECK(relevance_opposition_value(t, 1.0) <= 1.0 + kInvE + 1e-15);
  }
}

TEST_CASE("humor frequency pools counts and coverage") {
  std::vector<Joke> topk;
  for (int j = 0; j < 5; ++j) {
    std::vector<std::string> tokens;
    for (int t = 0; t < 10; ++t) tokens.push_back("filler" + std::to_string(j) + "_" + std::to_string(t));
    topk.push_back(joke_with(tokens));
  }
  CHECK(humor_frequency("milk", ptrs(topk)) == 0.0);

  // plant "milk" twice into one joke of the 5x10 setup
  topk[2].tokens[3] = "milk";
  topk[2].tokens[7] = "milk";
  CHECK_THAT(humor_frequency("milk", ptrs(topk)),
             Catch::Matchers::WithinAbs(std::sqrt((2.0 / 50.0) * (1.0 / 5.0)), 1e-15));
  CHECK_THAT(humor_frequency("milk", ptrs(topk)),
             Catch::Matchers::WithinAbs(0.08944271909999159, 1e-12));

  // the sole repeated token filling every joke maxes the score out
  std::vector<Joke> saturated = {joke_with({"milk", "milk"}), joke_with({"milk"})};
  CHECK(humor_frequency("milk", ptrs(saturated)) == 1.0);

  CHECK_THROWS_AS(humor_frequency("milk", {}), std::invalid_argument);
}

TEST_CASE("humor frequency is zero exactly when the token is absent") {
  std::vector<Joke> topk = {joke_with({"coffee", "cup"}), joke_with({"dog", "cow"})};
  for (const char* t : {"coffee", "cup", "dog", "cow"}) {
    CHECK(humor_frequency(t, ptrs(topk)) > 0.0);
  }
  CHECK(humor_frequency("boss", ptrs(topk)) == 0.0);
}

TEST_CASE("pos diversity is the share of categories with a sense") {
  CHECK(pos_diversity("qzxv", db()) == 0.0);
  CHECK(pos_diversity("bank", db()) == 0.5);
  CHECK(pos_diversity("sound", db()) == 1.0);
  CHECK(pos_diversity("dog", db()) == 0.25);
}

TEST_CASE("humor relevance sums its three terms exactly") {
  std::vector<Joke> topk;
  for (int j = 0; j < 5; ++j) {
    std::vector<std::string> tokens;
    for (int t = 0; t < 10; ++t) tokens.push_back("filler" + std::to_string(j) + "_" + std::to_string(t));
    topk.push_back(joke_with(tokens));
  }
  topk[2].tokens[3] = "milk";
  topk[2].tokens[7] = "milk";

  auto b = humor_relevance("cream", "milk", ptrs(topk), db());
  CHECK(b.total == b.relevance + b.frequency + b.diversity);
  CHECK_THAT(b.relevance, Catch::Matchers::WithinAbs(0.651632664928158, 1e-12));
  CHECK_THAT(b.frequency, Catch::Matchers::WithinAbs(0.089442719099992, 1e-12));
  CHECK(b.diversity == 0.5);
  CHECK_THAT(b.total, Catch::Matchers::WithinAbs(1.24107538402815, 1e-11));

  auto zero = humor_relevance("qzxv", "zzzz", ptrs(topk), db());
  CHECK(zero.total == 0.0);

  std::vector<Joke> saturated = {joke_with({"sound", "sound"}), joke_with({"sound"})};
  auto maxed = humor_relevance("sound", "sound", ptrs(saturated), db());
  CHECK(maxed.total == 3.0);
}

TEST_CASE("humor relevance matches the straight-line oracle on random pairs") {
  std::vector<Joke> corpus;
  const std::vector<std::string> pool = {"coffee", "milk", "cream", "cow", "dog",
                                         "cat",    "boss", "office", "cup",
                                         "wolf",   "hound", "pack",  "sound",
                                         "run",    "fast", "meeting", "zzzz"};
  std::mt19937_64 rng(99);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::string> tokens;
    std::size_t len = 2 + uniform_index(rng, 9);
    for (std::size_t t = 0; t < len; ++t) tokens.push_back(pool[uniform_index(rng, pool.size())]);
    corpus.push_back(joke_with(tokens));
  }
  auto top5 = ptrs(corpus);
  top5.resize(5);

  for (int i = 0; i < 100; ++i) {
    const std::string& entity = pool[uniform_index(rng, pool.size())];
    const std::string& token = pool[uniform_index(rng, pool.size())];
    auto got = humor_relevance(entity, token, top5, db());
    double expected = oracle::humor_relevance_total(db(), entity, token, top5);
    CHECK_THAT(got.total, Catch::Matchers::WithinAbs(expected, 1e-12));
  }
}

TEST_CASE("pruning keeps everything under the threshold") {
  std::vector<Joke> topk = {joke_with({"coffee", "milk", "cow"})};
  auto kept = prune_candidates("coffee", {"milk", "cow", "cup"}, ptrs(topk), db(), {5});
  CHECK(kept.size() == 3);
}

TEST_CASE("pruning matches a full-sort oracle on distinct scores") {
  std::vector<Joke> topk = {
      joke_with({"milk", "milk", "cow", "boss"}),
      joke_with({"cup", "cream", "milk", "office"}),
      joke_with({"dog", "cat", "cow", "meeting"}),
  };
  std::set<std::string> candidates = {"milk", "cow", "cup", "cream", "dog", "cat", "boss"};
  PruneConfig cfg{5};
  auto kept = prune_candidates("coffee", candidates, ptrs(topk), db(), cfg);
  REQUIRE(kept.size() == 5);

  // independent ranking: score each candidate, full stable sort
  std::vector<std::pair<double, std::string>> oracle_rank;
  for (const auto& c : candidates) {
    oracle_rank.emplace_back(-humor_relevance("coffee", c, ptrs(topk), db()).total, c);
  }
  std::sort(oracle_rank.begin(), oracle_rank.end());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    CHECK(kept[i].token == oracle_rank[i].second);
  }
  // scores arrive sorted descending
  for (std::size_t i = 1; i < kept.size(); ++i) {
    CHECK(kept[i - 1].score.total >= kept[i].score.total);
  }
}

TEST_CASE("exact ties at the boundary resolve lexicographically") {
  std::vector<Joke> topk = {joke_with({"milk", "cow", "cup", "cream"})};
  // zzza and zzzb never appear and have no senses: identical zero scores
  std::set<std::string> candidates = {"milk", "cow", "cup", "cream", "zzzb", "zzza"};
  auto kept = prune_candidates("coffee", candidates, ptrs(topk), db(), {5});
  REQUIRE(kept.size() == 5);
  CHECK(kept.back().token == "zzza");
  for (const auto& st : kept) CHECK(st.token != "zzzb");
}

TEST_CASE("pruning is deterministic") {
  std::vector<Joke> topk = {joke_with({"milk", "cow", "cup"})};
  std::set<std::string> candidates = {"milk", "cow", "cup", "dog", "cat", "pack", "wolf"};
  auto a = prune_candidates("coffee", candidates, ptrs(topk), db(), {3});
  auto b = prune_candidates("coffee", candidates, ptrs(topk), db(), {3});
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].token == b[i].token);
    CHECK(a[i].score.total == b[i].score.total);
  }
}

TEST_CASE("tfidf frequency variant stays available for replication") {
  std::vector<Joke> corpus = {
      joke_with({"coffee", "milk"}),
      joke_with({"coffee", "cow"}),
      joke_with({"boss", "office"}),
  };
  auto index = build_index(corpus);
  auto topk = ptrs(index.jokes());
  CHECK(tfidf_frequency("coffee", topk, index) > 0.0);
  CHECK(tfidf_frequency("zzzz", topk, index) == 0.0);
  // common terms are down-weighted relative to the humor frequency ordering
  CHECK(tfidf_frequency("boss", topk, index) > tfidf_frequency("coffee", topk, index) / 2.0);
}
