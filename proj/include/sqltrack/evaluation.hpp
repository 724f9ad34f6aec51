#ifndef SQLTRACK_EVALUATION_HPP_
#define SQLTRACK_EVALUATION_HPP_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqltrack/sql_model.hpp"

namespace sqltrack {

enum class Difficulty : std::uint8_t { Easy, Medium, Hard, ExtraHard };

std::string_view difficulty_name(Difficulty d);

// Point-based hardness rule table (documented in the README): component
// counts map to a score, scores to buckets. Monotone: adding a component
// never lowers the bucket.
int difficulty_points(const QueryAst& ast);
Difficulty difficulty_of(const SqlQuery& gold);

struct TurnResult {
  std::string interaction_id;
  std::size_t turn_index = 1;  // 1-based
  std::map<std::string, bool> component_flags;
  bool qm = false;
};

// Set match per component; a null prediction (unparseable or
// unassemblable) scores false on every component.
TurnResult question_match(const SqlQuery* pred, const SqlQuery& gold,
                          std::string interaction_id = "", std::size_t turn_index = 1);

// Fraction of interactions whose turns are all matched.
double interaction_match(std::span<const TurnResult> turns);

// Micro-F1 per component over multiset intersections; components with no
// elements on either side anywhere are omitted.
std::map<std::string, double> clause_f1(
    std::span<const std::pair<std::optional<ClauseDecomposition>, ClauseDecomposition>> pairs);

struct MetricsReport {
  double qm = 0.0;
  double im = 0.0;
  std::map<std::string, double> clause_f1;
  std::map<std::string, double> qm_by_difficulty;
  std::map<std::string, double> qm_by_turn;
  std::size_t turn_count = 0;
  std::size_t interaction_count = 0;
  std::map<std::string, std::size_t> difficulty_counts;
  std::map<std::string, std::size_t> turn_index_counts;

  std::string to_json() const;
};

class MetricsAccumulator {
 public:
  void add_turn(const std::string& interaction_id, std::size_t turn_index, const SqlQuery* pred,
                const SqlQuery& gold);
  MetricsReport finish() const;

 private:
  struct Entry {
    TurnResult result;
    Difficulty difficulty;
    std::optional<ClauseDecomposition> pred;
    ClauseDecomposition gold;
  };
  std::vector<Entry> entries_;
};

std::string turn_bucket(std::size_t turn_index);  // "1".."4" or ">4"

}  // namespace sqltrack

#endif  // SQLTRACK_EVALUATION_HPP_
