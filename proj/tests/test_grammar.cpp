#include <random>

#include "doctest.h"
#include "sodmv/grammar.hpp"
#include "test_util.hpp"

using namespace sodmv;

TEST_CASE("rule_count follows the 4V^3 + 4V^2 + V bookkeeping") {
  CHECK(rule_count(10, ModelOrder::SecondSibling) == 4410);
  CHECK(rule_count(10, ModelOrder::SecondGrand) == 4410);
  CHECK(rule_count(1, ModelOrder::SecondSibling) == 9);
  CHECK(rule_count(10, ModelOrder::First) == 450);
  CHECK_THROWS(rule_count(0, ModelOrder::First));
}

TEST_CASE("rule_count vs allocated entries") {
  // CHILD entries agree with the paper's 4|V|^3 when the extra axis is
  // counted as |V|; the allocated decision entries are 8|V|^2-sized (the
  // paper's middle term counts contexts, not entries).
  int V = 7;
  RuleTables t(ModelOrder::SecondSibling, V);
  CHECK(static_cast<std::int64_t>(t.child.size()) == 4LL * V * (V + 1) * V);
  CHECK(static_cast<std::int64_t>(t.decision.size()) == 8LL * V * (V + 1));
}

TEST_CASE("validate_rule_tables") {
  RuleTables t(ModelOrder::SecondSibling, 4);
  t.fill_uniform();
  auto rep = validate_rule_tables(t, 1e-6);
  CHECK(rep.ok);
  CHECK(rep.max_deviation == doctest::Approx(0.0).epsilon(1e-12));

  SUBCASE("scaled slice is flagged") {
    for (int c = 0; c < 4; ++c)
      t.child_at(2, 1, kLeft, kHasChild, c) += std::log(1.01);
    auto bad = validate_rule_tables(t, 1e-6);
    CHECK_FALSE(bad.ok);
    REQUIRE(bad.failures.size() == 1);
    CHECK(bad.failures[0].table == "child");
    CHECK(bad.failures[0].parent == 2);
    CHECK(bad.failures[0].extra == 1);
    CHECK(bad.failures[0].dir == kLeft);
    CHECK(bad.failures[0].val == kHasChild);
  }

  SUBCASE("dimension mismatch is an error") {
    t.extra_size = 1;  // inconsistent with declared second order
    CHECK_THROWS(validate_rule_tables(t, 1e-6));
  }
}

TEST_CASE("random normalized tables pass validation") {
  std::mt19937_64 rng(7);
  for (auto order : {ModelOrder::First, ModelOrder::SecondSibling}) {
    auto t = test::random_tables(order, 5, rng);
    CHECK(validate_rule_tables(t, 1e-9).ok);
  }
}

TEST_CASE("build_vocab") {
  auto tok = [](const std::string& f, const std::string& p) {
    RawToken t;
    t.form = f;
    t.pos = p;
    return t;
  };
  RawSentence s1, s2;
  s1.tokens = {tok("the", "DT"), tok("dog", "NN"), tok("barks", "VB")};
  s2.tokens = {tok("the", "DT"), tok("cat", "NN")};
  std::vector<RawSentence> corpus = {s1, s2};

  SUBCASE("unlexicalized is the tag set, deterministic") {
    auto v1 = build_vocab(corpus, VocabMode::Unlexicalized, 1);
    auto v2 = build_vocab(corpus, VocabMode::Unlexicalized, 1);
    CHECK(v1.size() == 3);
    CHECK(v1.symbols == v2.symbols);
    CHECK(v1.id_of("DT") >= 0);
  }

  SUBCASE("lexicalized applies the frequency cutoff") {
    auto v = build_vocab(corpus, VocabMode::Lexicalized, 2);
    CHECK(v.id_of("the/DT") >= 0);       // appears twice
    CHECK(v.id_of("dog/NN") == -1);      // appears once -> POS fallback
    CHECK(v.id_of("NN") >= 0);
    // fallback symbols map to their own POS
    CHECK(v.sym_pos[v.id_of("NN")] == v.id_of("NN"));
  }

  SUBCASE("empty corpus is an error") {
    CHECK_THROWS_WITH(build_vocab({}, VocabMode::Unlexicalized, 1),
                      "empty corpus");
  }
}
