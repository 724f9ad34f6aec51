#ifndef SQLTRACK_STATE_TRACKER_HPP_
#define SQLTRACK_STATE_TRACKER_HPP_

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sqltrack/schema_graph.hpp"
#include "sqltrack/sql_model.hpp"

namespace sqltrack {

struct SchemaMismatch : std::runtime_error {
  explicit SchemaMismatch(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr std::string_view kNoneK = "NONE_K";
inline constexpr std::string_view kNoneS = "NONE_S";

// A maximal run of normalized tokens ending at a column name; the unit of
// state extraction.
struct Piece {
  std::vector<SqlToken> tokens;        // the full run, trailing column included
  std::string trailing_column;         // qualified name of the final token
  std::vector<std::string> keywords;   // keyword texts inside the run, in order

  std::string text() const { return tokens_to_string(tokens); }
};

struct SplitResult {
  std::vector<Piece> pieces;
  std::vector<SqlToken> tail;  // tokens after the last column; contribute no values
};

// Left-to-right scan; a piece closes at each column token inclusively.
SplitResult split_pieces(std::span<const SqlToken> normalized);
SplitResult split_pieces(const SqlQuery& q);

// The two per-turn state maps, recomputed fresh from the previous query.
// Sentinels are stored literally: a keyword with no values maps to
// {NONE_K}, a column absent from the previous query maps to [NONE_S].
struct InteractionStates {
  std::map<std::string, std::set<std::string>> sql_states;        // keyword -> column set
  std::map<std::string, std::vector<std::string>> schema_states;  // column -> keyword occurrences

  bool sql_state_is_none(const std::string& keyword) const;
  bool schema_state_is_none(const std::string& column) const;
};

// Turn 1: no previous query, every state is sentinel.
InteractionStates update_states(const Schema& schema);
// States derived from the previous query's normalized tokens. Throws
// SchemaMismatch when a column token is not part of the schema.
InteractionStates update_states(std::span<const SqlToken> prev_normalized, const Schema& schema);
InteractionStates update_states(const SqlQuery& prev_query, const Schema& schema);

}  // namespace sqltrack

#endif  // SQLTRACK_STATE_TRACKER_HPP_
