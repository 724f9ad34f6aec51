#include "sqltrack/evaluation.hpp"

#include <algorithm>

#include <json.hpp>

namespace sqltrack {

std::string_view difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "Easy";
    case Difficulty::Medium: return "Medium";
    case Difficulty::Hard: return "Hard";
    default: return "Extra-Hard";
  }
}

namespace {

int count_aggregations(const SelectCore& core) {
  int n = 0;
  for (const auto& item : core.items) n += item.agg != AggFn::None ? 1 : 0;
  for (const auto& item : core.order_by) n += item.expr.agg != AggFn::None ? 1 : 0;
  if (core.having) {
    for (const auto& cond : core.having->conditions) {
      n += cond.lhs.kind == Operand::Kind::Agg ? 1 : 0;
    }
  }
  return n;
}

int count_points_chain(const ConditionChain& chain) {
  int points = 0;
  points += static_cast<int>(chain.conditions.size());  // one per conjunct
  for (const auto& cond : chain.conditions) {
    if (cond.kind == Condition::Kind::Like) points += 1;
    for (const auto& rhs : cond.rhs) {
      if (rhs.kind == Operand::Kind::Subquery) points += 3;
    }
  }
  for (auto conn : chain.connectives) {
    if (conn == Connective::Or) points += 1;
  }
  return points;
}

}  // namespace

int difficulty_points(const QueryAst& ast) {
  const SelectCore& core = ast.cores[0];
  int points = 0;
  points += static_cast<int>(core.items.size()) - 1;
  points += count_aggregations(core);
  if (core.where) points += count_points_chain(*core.where);
  if (core.having) points += count_points_chain(*core.having);
  if (!core.group_by.empty()) points += 1;
  if (!core.order_by.empty()) points += 1;
  if (core.limit) points += 1;
  points += 3 * static_cast<int>(ast.ops.size());
  return points;
}

Difficulty difficulty_of(const SqlQuery& gold) {
  int points = difficulty_points(gold.ast);
  if (points <= 1) return Difficulty::Easy;
  if (points <= 3) return Difficulty::Medium;
  if (points <= 5) return Difficulty::Hard;
  return Difficulty::ExtraHard;
}

TurnResult question_match(const SqlQuery* pred, const SqlQuery& gold, std::string interaction_id,
                          std::size_t turn_index) {
  TurnResult result;
  result.interaction_id = std::move(interaction_id);
  result.turn_index = turn_index;
  if (pred == nullptr) {
    for (auto name : ClauseDecomposition::component_names()) {
      result.component_flags[std::string(name)] = false;
    }
    result.qm = false;
    return result;
  }
  ClauseDecomposition dp = decompose(*pred);
  ClauseDecomposition dg = decompose(gold);
  bool all = true;
  for (auto name : ClauseDecomposition::component_names()) {
    std::string key(name);
    bool match = dp.components.at(key) == dg.components.at(key);
    result.component_flags[key] = match;
    all = all && match;
  }
  result.qm = all;
  return result;
}

double interaction_match(std::span<const TurnResult> turns) {
  std::map<std::string, bool> all_matched;
  for (const auto& t : turns) {
    auto [it, inserted] = all_matched.try_emplace(t.interaction_id, true);
    it->second = it->second && t.qm;
    (void)inserted;
  }
  if (all_matched.empty()) return 0.0;
  std::size_t good = 0;
  for (const auto& [id, ok] : all_matched) good += ok ? 1 : 0;
  return static_cast<double>(good) / static_cast<double>(all_matched.size());
}

std::map<std::string, double> clause_f1(
    std::span<const std::pair<std::optional<ClauseDecomposition>, ClauseDecomposition>> pairs) {
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::map<std::string, Counts> counts;
  for (const auto& [pred, gold] : pairs) {
    for (auto name : ClauseDecomposition::component_names()) {
      std::string key(name);
      const auto& gold_set = gold.components.at(key);
      static const std::multiset<std::string> empty;
      const auto& pred_set = pred ? pred->components.at(key) : empty;
      std::multiset<std::string> inter;
      std::set_intersection(pred_set.begin(), pred_set.end(), gold_set.begin(), gold_set.end(),
                            std::inserter(inter, inter.begin()));
      auto& c = counts[key];
      c.tp += inter.size();
      c.fp += pred_set.size() - inter.size();
      c.fn += gold_set.size() - inter.size();
    }
  }
  std::map<std::string, double> f1;
  for (const auto& [key, c] : counts) {
    std::size_t denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) continue;  // component absent everywhere
    f1[key] = 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
  }
  return f1;
}

std::string turn_bucket(std::size_t turn_index) {
  return turn_index <= 4 ? std::to_string(turn_index) : ">4";
}

void MetricsAccumulator::add_turn(const std::string& interaction_id, std::size_t turn_index,
                                  const SqlQuery* pred, const SqlQuery& gold) {
  Entry e;
  e.result = question_match(pred, gold, interaction_id, turn_index);
  e.difficulty = difficulty_of(gold);
  if (pred != nullptr) e.pred = decompose(*pred);
  e.gold = decompose(gold);
  entries_.push_back(std::move(e));
}

MetricsReport MetricsAccumulator::finish() const {
  MetricsReport report;
  report.turn_count = entries_.size();

  std::vector<TurnResult> results;
  std::vector<std::pair<std::optional<ClauseDecomposition>, ClauseDecomposition>> pairs;
  results.reserve(entries_.size());
  for (const auto& e : entries_) {
    results.push_back(e.result);
    pairs.emplace_back(e.pred, e.gold);
  }

  std::size_t qm_hits = 0;
  for (const auto& r : results) qm_hits += r.qm ? 1 : 0;
  report.qm = entries_.empty() ? 0.0
                               : static_cast<double>(qm_hits) / static_cast<double>(entries_.size());
  report.im = interaction_match(results);
  report.clause_f1 = clause_f1(pairs);

  std::map<std::string, bool> interactions;
  for (const auto& r : results) interactions[r.interaction_id] = true;
  report.interaction_count = interactions.size();

  for (Difficulty d : {Difficulty::Easy, Difficulty::Medium, Difficulty::Hard,
                       Difficulty::ExtraHard}) {
    report.difficulty_counts[std::string(difficulty_name(d))] = 0;
    report.qm_by_difficulty[std::string(difficulty_name(d))] = 0.0;
  }
  for (const char* b : {"1", "2", "3", "4", ">4"}) {
    report.turn_index_counts[b] = 0;
    report.qm_by_turn[b] = 0.0;
  }
  std::map<std::string, std::size_t> difficulty_hits, turn_hits;
  for (const auto& e : entries_) {
    std::string d(difficulty_name(e.difficulty));
    std::string b = turn_bucket(e.result.turn_index);
    report.difficulty_counts[d] += 1;
    report.turn_index_counts[b] += 1;
    difficulty_hits[d] += e.result.qm ? 1 : 0;
    turn_hits[b] += e.result.qm ? 1 : 0;
  }
  for (auto& [d, count] : report.difficulty_counts) {
    if (count > 0) {
      report.qm_by_difficulty[d] =
          static_cast<double>(difficulty_hits[d]) / static_cast<double>(count);
    }
  }
  for (auto& [b, count] : report.turn_index_counts) {
    if (count > 0) {
      report.qm_by_turn[b] = static_cast<double>(turn_hits[b]) / static_cast<double>(count);
    }
  }
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["qm"] = qm;
  j["im"] = im;
  j["clause_f1"] = clause_f1;
  j["qm_by_difficulty"] = qm_by_difficulty;
  j["qm_by_turn"] = qm_by_turn;
  j["counts"]["turns"] = turn_count;
  j["counts"]["interactions"] = interaction_count;
  j["counts"]["difficulty"] = difficulty_counts;
  j["counts"]["turn_index"] = turn_index_counts;
  return j.dump(2);
}

}  // namespace sqltrack
