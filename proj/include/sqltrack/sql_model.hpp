#ifndef SQLTRACK_SQL_MODEL_HPP_
#define SQLTRACK_SQL_MODEL_HPP_

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sqltrack/schema_graph.hpp"

namespace sqltrack {

struct SyntaxError : std::runtime_error {
  SyntaxError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " (at offset " + std::to_string(position) + ")"),
        position(position) {}
  std::size_t position;
};

struct UnknownColumn : std::runtime_error {
  explicit UnknownColumn(const std::string& what) : std::runtime_error(what) {}
};

struct AssemblyError : std::runtime_error {
  explicit AssemblyError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Keyword vocabulary. The list and its order are a published constant;
// index positions identify keywords in the state encoders and decoder.

inline constexpr std::array<std::string_view, 29> kKeywordVocabulary = {
    "select", "distinct", "where", "group_by", "having", "order_by", "limit",
    "asc",    "desc",     "and",   "or",       "not",    "in",       "like",
    "between", "intersect", "union", "except",
    "count",  "sum",      "avg",   "min",      "max",
    "=",      "!=",       "<",     ">",        "<=",     ">=",
};

inline constexpr std::size_t kKeywordCount = kKeywordVocabulary.size();

int keyword_index(std::string_view text);  // -1 when not a keyword

// ---------------------------------------------------------------------------
// Token stream

enum class TokenKind : std::uint8_t { Keyword, Column, ValuePlaceholder };

struct SqlToken {
  TokenKind kind;
  std::string text;  // canonical lowercase; columns qualified "table.column"

  bool operator==(const SqlToken&) const = default;
};

SqlToken keyword_token(std::string_view text);
SqlToken column_token(std::string_view qualified);
SqlToken value_token();

std::string tokens_to_string(std::span<const SqlToken> tokens);

// ---------------------------------------------------------------------------
// Abstract syntax tree for the supported subset

enum class AggFn : std::uint8_t { None, Count, Sum, Avg, Min, Max };
enum class SetOp : std::uint8_t { Intersect, Union, Except };
enum class CmpOp : std::uint8_t { Eq, Ne, Lt, Gt, Le, Ge };
enum class OrderDir : std::uint8_t { None, Asc, Desc };
enum class Connective : std::uint8_t { And, Or };

std::string_view agg_name(AggFn fn);
std::string_view set_op_name(SetOp op);
std::string_view cmp_name(CmpOp op);

struct ColumnRef {
  std::string table;
  std::string column;
  std::string qualified() const { return table + "." + column; }
  bool operator==(const ColumnRef&) const = default;
};

// A select item or aggregate expression: a column, "*", or agg over
// either, optionally DISTINCT inside the aggregate.
struct SelectItem {
  AggFn agg = AggFn::None;
  bool distinct_arg = false;
  bool star = false;
  ColumnRef column;  // meaningful when !star
  bool operator==(const SelectItem&) const = default;
};

struct Literal {
  enum class Kind : std::uint8_t { Number, String, Placeholder };
  Kind kind = Kind::Placeholder;
  std::string text;  // digits for Number, unquoted body for String
  bool operator==(const Literal&) const = default;
};

struct QueryAst;

struct Operand {
  enum class Kind : std::uint8_t { Column, Agg, Lit, Subquery };
  Kind kind = Kind::Column;
  SelectItem expr;  // Column / Agg
  Literal literal;
  std::shared_ptr<QueryAst> subquery;
};

struct Condition {
  enum class Kind : std::uint8_t { Compare, In, Like, Between };
  bool negated = false;
  Operand lhs;
  Kind kind = Kind::Compare;
  CmpOp cmp = CmpOp::Eq;
  std::vector<Operand> rhs;  // Compare/Like: 1 element; Between: 2; In: 1 subquery or n literals
};

struct ConditionChain {
  std::vector<Condition> conditions;
  std::vector<Connective> connectives;  // between successive conditions
};

struct JoinedTable {
  std::string table;
  std::optional<std::pair<ColumnRef, ColumnRef>> on;  // absent for the first table / cross join
};

struct OrderItem {
  SelectItem expr;
  OrderDir dir = OrderDir::None;
};

struct SelectCore {
  bool distinct = false;
  std::vector<SelectItem> items;
  std::vector<JoinedTable> from;
  std::optional<ConditionChain> where;
  std::vector<ColumnRef> group_by;
  std::optional<ConditionChain> having;
  std::vector<OrderItem> order_by;
  std::optional<Literal> limit;
};

struct QueryAst {
  std::vector<SelectCore> cores;
  std::vector<SetOp> ops;  // ops.size() == cores.size() - 1
};

struct SqlQuery {
  QueryAst ast;
  std::vector<SqlToken> normalized_tokens;  // FROM/JOIN/ON removed, literals placeholdered
};

// ---------------------------------------------------------------------------
// Operations

// Parses a query in the supported grammar, resolving aliases and
// unqualified columns against the schema. Throws SyntaxError or
// UnknownColumn.
SqlQuery parse(const std::string& sql_text, const Schema& schema);

// Deterministic canonical text; parse(serialize(q)) is structurally
// equal to q.
std::string serialize(const SqlQuery& q);
std::string serialize(const QueryAst& ast);

std::vector<SqlToken> normalized_tokens(const QueryAst& ast);

// The seven evaluation components. Absent clauses map to empty multisets.
struct ClauseDecomposition {
  static const std::array<std::string_view, 7>& component_names();
  std::map<std::string, std::multiset<std::string>> components;

  bool operator==(const ClauseDecomposition&) const = default;
};

ClauseDecomposition decompose(const SqlQuery& q);
ClauseDecomposition decompose(const QueryAst& ast);

// Rebuilds a full query from a normalized token stream: structural parse
// without FROM, then FROM/JOIN/ON reconstruction along shortest
// foreign-key paths (ties broken by table declaration order). Throws
// AssemblyError when the stream has no structural reading or mentioned
// tables cannot be connected.
SqlQuery assemble(std::span<const SqlToken> tokens, const Schema& schema);

}  // namespace sqltrack

#endif  // SQLTRACK_SQL_MODEL_HPP_
