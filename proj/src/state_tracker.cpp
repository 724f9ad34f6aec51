#include "sqltrack/state_tracker.hpp"

namespace sqltrack {

SplitResult split_pieces(std::span<const SqlToken> normalized) {
  SplitResult result;
  Piece current;
  for (const auto& token : normalized) {
    current.tokens.push_back(token);
    if (token.kind == TokenKind::Keyword) {
      current.keywords.push_back(token.text);
    } else if (token.kind == TokenKind::Column) {
      current.trailing_column = token.text;
      result.pieces.push_back(std::move(current));
      current = {};
    }
  }
  result.tail = std::move(current.tokens);
  return result;
}

SplitResult split_pieces(const SqlQuery& q) { return split_pieces(q.normalized_tokens); }

bool InteractionStates::sql_state_is_none(const std::string& keyword) const {
  const auto& v = sql_states.at(keyword);
  return v.size() == 1 && *v.begin() == kNoneK;
}

bool InteractionStates::schema_state_is_none(const std::string& column) const {
  const auto& v = schema_states.at(column);
  return v.size() == 1 && v[0] == kNoneS;
}

InteractionStates update_states(const Schema& schema) {
  InteractionStates states;
  for (auto kw : kKeywordVocabulary) {
    states.sql_states[std::string(kw)] = {std::string(kNoneK)};
  }
  for (const auto& column : schema.columns()) {
    states.schema_states[column] = {std::string(kNoneS)};
  }
  return states;
}

InteractionStates update_states(std::span<const SqlToken> prev_normalized, const Schema& schema) {
  for (const auto& token : prev_normalized) {
    if (token.kind == TokenKind::Column && !schema.has_column(token.text)) {
      throw SchemaMismatch("previous query references column '" + token.text +
                           "' outside schema " + schema.db_id());
    }
  }
  InteractionStates states = update_states(schema);
  SplitResult split = split_pieces(prev_normalized);
  for (const auto& piece : split.pieces) {
    for (const auto& kw : piece.keywords) {
      auto& values = states.sql_states[kw];
      values.erase(std::string(kNoneK));
      values.insert(piece.trailing_column);  // deduplicated by set semantics
    }
    auto& occurrences = states.schema_states[piece.trailing_column];
    if (occurrences.size() == 1 && occurrences[0] == kNoneS) occurrences.clear();
    // duplicates kept, in piece order
    occurrences.insert(occurrences.end(), piece.keywords.begin(), piece.keywords.end());
  }
  return states;
}

InteractionStates update_states(const SqlQuery& prev_query, const Schema& schema) {
  return update_states(prev_query.normalized_tokens, schema);
}

}  // namespace sqltrack
