#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "sqltrack/autograd.hpp"
#include "sqltrack/corpus.hpp"
#include "sqltrack/evaluation.hpp"

using namespace sqltrack;

namespace {

Schema schema() { return dorm_schema(); }

SqlQuery q(const std::string& text) { return parse(text, schema()); }

}  // namespace

TEST_CASE("textually identical queries match") {
  SqlQuery gold = q("select dorm_name from dorm where gender = 'F'");
  TurnResult r = question_match(&gold, gold);
  CHECK(r.qm);
  for (const auto& [name, flag] : r.component_flags) CHECK(flag);
}

TEST_CASE("reordered conjuncts still match") {
  SqlQuery gold = q("select dorm_name from dorm where gender = 'F' and student_capacity > 10");
  SqlQuery pred = q("select dorm_name from dorm where student_capacity > 10 and gender = 'F'");
  CHECK(question_match(&pred, gold).qm);
}

TEST_CASE("missing ORDER BY fails exactly the ORDER component") {
  SqlQuery gold = q("select dorm_name from dorm order by student_capacity desc");
  SqlQuery pred = q("select dorm_name from dorm");
  TurnResult r = question_match(&pred, gold);
  CHECK(!r.qm);
  CHECK(!r.component_flags.at("ORDER"));
  CHECK(!r.component_flags.at("KEYWORDS"));  // order_by keyword missing too
  CHECK(r.component_flags.at("SELECT"));
  CHECK(r.component_flags.at("WHERE"));
}

TEST_CASE("null predictions score false everywhere") {
  SqlQuery gold = q("select dorm_name from dorm");
  TurnResult r = question_match(nullptr, gold);
  CHECK(!r.qm);
  for (const auto& [name, flag] : r.component_flags) CHECK(!flag);
}

TEST_CASE("interaction match fractions") {
  auto turn = [](const char* id, bool qm) {
    TurnResult r;
    r.interaction_id = id;
    r.qm = qm;
    return r;
  };
  std::vector<TurnResult> one = {turn("a", true), turn("a", true)};
  CHECK(interaction_match(one) == 1.0);
  std::vector<TurnResult> two = {turn("a", true), turn("a", true), turn("b", true),
                                 turn("b", false)};
  CHECK(interaction_match(two) == 0.5);
}

TEST_CASE("interaction match equals a brute-force recount on a synthetic set") {
  Rng rng(77);
  std::vector<TurnResult> turns;
  std::map<std::string, bool> expected;
  for (int i = 0; i < 292; ++i) {
    std::string id = "inter_" + std::to_string(i);
    std::size_t n_turns = 1 + rng.below(4);
    bool all = true;
    for (std::size_t t = 0; t < n_turns; ++t) {
      TurnResult r;
      r.interaction_id = id;
      r.turn_index = t + 1;
      r.qm = rng.below(4) != 0;
      all = all && r.qm;
      turns.push_back(r);
    }
    expected[id] = all;
  }
  std::size_t hits = 0;
  for (const auto& [id, ok] : expected) hits += ok ? 1 : 0;
  double brute = static_cast<double>(hits) / static_cast<double>(expected.size());
  CHECK(interaction_match(turns) == doctest::Approx(brute).epsilon(1e-15));
}

TEST_CASE("clause F1 on perfect and empty predictions") {
  std::vector<std::pair<std::optional<ClauseDecomposition>, ClauseDecomposition>> perfect;
  SqlQuery g1 = q("select dorm_name from dorm where gender = 'F'");
  perfect.emplace_back(decompose(g1), decompose(g1));
  auto f1 = clause_f1(perfect);
  CHECK(f1.at("SELECT") == 1.0);
  CHECK(f1.at("WHERE") == 1.0);
  CHECK(f1.at("KEYWORDS") == 1.0);
  CHECK(!f1.count("ORDER"));  // absent everywhere: omitted

  std::vector<std::pair<std::optional<ClauseDecomposition>, ClauseDecomposition>> empty;
  empty.emplace_back(std::nullopt, decompose(g1));
  auto f0 = clause_f1(empty);
  CHECK(f0.at("SELECT") == 0.0);
  CHECK(f0.at("WHERE") == 0.0);
}

TEST_CASE("clause F1 matches a hand-computed table on a mixed fixture") {
  // five turns; the WHERE component counts below are worked out by hand
  std::vector<std::pair<std::optional<ClauseDecomposition>, ClauseDecomposition>> pairs;
  auto add = [&](const char* pred, const char* gold) {
    pairs.emplace_back(decompose(q(pred)), decompose(q(gold)));
  };
  // turn 1: exact match; WHERE tp=1
  add("select dorm_name from dorm where gender = 'F'",
      "select dorm_name from dorm where gender = 'F'");
  // turn 2: pred misses the second conjunct; tp=1, fn=1
  add("select dorm_name from dorm where gender = 'F'",
      "select dorm_name from dorm where gender = 'F' and student_capacity > 1");
  // turn 3: pred adds a spurious conjunct; tp=1, fp=1
  add("select dorm_name from dorm where gender = 'F' and student_capacity > 1",
      "select dorm_name from dorm where gender = 'F'");
  // turn 4: disjoint conditions; fp=1, fn=1
  add("select dorm_name from dorm where student_capacity < 5",
      "select dorm_name from dorm where gender = 'X'");
  // turn 5: no WHERE anywhere
  add("select dorm_name from dorm", "select dorm_name from dorm");
  // WHERE totals: tp=3, fp=2, fn=2 -> F1 = 6/10
  auto f1 = clause_f1(pairs);
  CHECK(f1.at("WHERE") == doctest::Approx(0.6).epsilon(1e-12));
  // SELECT matches everywhere: tp=5 -> F1 = 1.0
  CHECK(f1.at("SELECT") == 1.0);
}

TEST_CASE("difficulty rule table") {
  CHECK(difficulty_of(q("select dorm_name from dorm")) == Difficulty::Easy);
  CHECK(difficulty_of(q("select dorm_name from dorm where gender = 'F'")) == Difficulty::Easy);
  // one aggregation and GROUP BY: medium or harder
  Difficulty agg_group = difficulty_of(q("select count(dormid) from dorm group by gender"));
  CHECK(agg_group >= Difficulty::Medium);
  // EXCEPT plus a nested subquery: extra-hard
  CHECK(difficulty_of(q("select dorm_name from dorm where dormid in "
                        "(select dormid from has_amenity) except select dorm_name from dorm")) ==
        Difficulty::ExtraHard);
  CHECK(difficulty_name(Difficulty::ExtraHard) == "Extra-Hard");
}

TEST_CASE("difficulty is monotone: adding components never lowers the bucket") {
  std::vector<std::pair<std::string, std::string>> pairs = {
      {"select dorm_name from dorm",
       "select dorm_name from dorm where gender = 'F'"},
      {"select dorm_name from dorm where gender = 'F'",
       "select dorm_name from dorm where gender = 'F' order by dorm_name"},
      {"select dorm_name from dorm where gender = 'F' order by dorm_name",
       "select dorm_name from dorm where gender = 'F' order by dorm_name limit 1"},
      {"select dorm_name from dorm",
       "select dorm_name from dorm except select dorm_name from dorm"},
      {"select count(dormid) from dorm group by gender",
       "select count(dormid) from dorm group by gender having count(dormid) > 1"},
  };
  for (const auto& [smaller, larger] : pairs) {
    CHECK(difficulty_points(q(smaller).ast) <= difficulty_points(q(larger).ast));
    CHECK(difficulty_of(q(smaller)) <= difficulty_of(q(larger)));
  }
}

TEST_CASE("report buckets partition the turns and fields are present") {
  MetricsAccumulator acc;
  SqlQuery g1 = q("select dorm_name from dorm");
  SqlQuery g2 = q("select count(dormid) from dorm group by gender");
  acc.add_turn("i1", 1, &g1, g1);
  acc.add_turn("i1", 2, nullptr, g2);
  acc.add_turn("i2", 1, &g2, g2);
  acc.add_turn("i2", 5, &g1, g2);
  acc.add_turn("i2", 6, &g1, g1);
  MetricsReport report = acc.finish();

  CHECK(report.turn_count == 5);
  CHECK(report.interaction_count == 2);
  std::size_t dsum = 0, tsum = 0;
  for (const auto& [k, v] : report.difficulty_counts) dsum += v;
  for (const auto& [k, v] : report.turn_index_counts) tsum += v;
  CHECK(dsum == 5);
  CHECK(tsum == 5);
  CHECK(report.turn_index_counts.at(">4") == 2);
  CHECK(report.qm == doctest::Approx(3.0 / 5));
  CHECK(report.im == 0.0);

  auto j = nlohmann::json::parse(report.to_json());
  for (const char* field : {"qm", "im", "clause_f1", "qm_by_difficulty", "qm_by_turn", "counts"}) {
    CHECK(j.contains(field));
  }
  CHECK(j["counts"]["turns"] == 5);
  CHECK(j["qm_by_difficulty"].size() == 4);
  CHECK(j["qm_by_turn"].size() == 5);
}

TEST_CASE("gold passed as prediction scores perfectly") {
  SyntheticCorpus corpus = generate_corpus(31, 8, 2);
  MetricsAccumulator acc;
  for (const auto& rec : corpus.train) {
    const Schema& s = find_schema(corpus.schemas, rec.db_id);
    for (std::size_t t = 0; t < rec.turns.size(); ++t) {
      SqlQuery gold = parse(rec.turns[t].query, s);
      acc.add_turn(rec.id, t + 1, &gold, gold);
    }
  }
  MetricsReport report = acc.finish();
  CHECK(report.qm == 1.0);
  CHECK(report.im == 1.0);
  for (const auto& [name, f1] : report.clause_f1) CHECK(f1 == 1.0);
}
