#include <algorithm>
#include <cctype>

#include "sqltrack/sql_model.hpp"

namespace sqltrack {

namespace {

struct Lexeme {
  enum class Type : std::uint8_t { Word, Number, String, Punct, End };
  Type type;
  std::string text;
  std::size_t pos;
};

std::vector<Lexeme> lex(const std::string& s) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  auto peek2 = [&](char a, char b) { return i + 1 < s.size() && s[i] == a && s[i + 1] == b; };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string word;
      while (i < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) {
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
        ++i;
      }
      out.push_back({Lexeme::Type::Word, std::move(word), start});
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string num;
      bool dot_seen = false;
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) ||
                              (s[i] == '.' && !dot_seen))) {
        dot_seen = dot_seen || s[i] == '.';
        num.push_back(s[i]);
        ++i;
      }
      out.push_back({Lexeme::Type::Number, std::move(num), start});
    } else if (c == '\'' || c == '"') {
      char quote = c;
      ++i;
      std::string body;
      while (i < s.size() && s[i] != quote) body.push_back(s[i++]);
      if (i == s.size()) throw SyntaxError("unterminated string literal", start);
      ++i;
      out.push_back({Lexeme::Type::String, std::move(body), start});
    } else if (peek2('<', '=') || peek2('>', '=') || peek2('!', '=')) {
      out.push_back({Lexeme::Type::Punct, s.substr(i, 2), start});
      i += 2;
    } else if (peek2('<', '>')) {
      out.push_back({Lexeme::Type::Punct, "!=", start});
      i += 2;
    } else if (std::string("=<>(),.*;").find(c) != std::string::npos) {
      out.push_back({Lexeme::Type::Punct, std::string(1, c), start});
      ++i;
    } else {
      throw SyntaxError(std::string("unexpected character '") + c + "'", start);
    }
  }
  out.push_back({Lexeme::Type::End, "", s.size()});
  return out;
}

bool is_agg_word(const std::string& w) {
  return w == "count" || w == "sum" || w == "avg" || w == "min" || w == "max";
}

AggFn agg_from_word(const std::string& w) {
  if (w == "count") return AggFn::Count;
  if (w == "sum") return AggFn::Sum;
  if (w == "avg") return AggFn::Avg;
  if (w == "min") return AggFn::Min;
  return AggFn::Max;
}

CmpOp cmp_from_punct(const std::string& p) {
  if (p == "=") return CmpOp::Eq;
  if (p == "!=") return CmpOp::Ne;
  if (p == "<") return CmpOp::Lt;
  if (p == ">") return CmpOp::Gt;
  if (p == "<=") return CmpOp::Le;
  return CmpOp::Ge;
}

struct RawName {
  std::string qualifier;  // alias or table name, may be empty
  std::string name;
  std::size_t pos;
};

class TextParser {
 public:
  TextParser(const std::string& text, const Schema& schema)
      : lexemes_(lex(text)), schema_(schema) {}

  QueryAst parse_query() {
    QueryAst q;
    q.cores.push_back(parse_core());
    while (at_word("intersect") || at_word("union") || at_word("except")) {
      const std::string op = next().text;
      q.ops.push_back(op == "intersect" ? SetOp::Intersect
                                        : op == "union" ? SetOp::Union : SetOp::Except);
      q.cores.push_back(parse_core());
    }
    return q;
  }

  void expect_end() {
    while (at_punct(";")) next();
    if (peek().type != Lexeme::Type::End) {
      throw SyntaxError("unexpected trailing input '" + peek().text + "'", peek().pos);
    }
  }

 private:
  const Lexeme& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, lexemes_.size() - 1);
    return lexemes_[i];
  }
  const Lexeme& next() { return lexemes_[std::min(pos_++, lexemes_.size() - 1)]; }
  bool at_word(std::string_view w) const {
    return peek().type == Lexeme::Type::Word && peek().text == w;
  }
  bool at_punct(std::string_view p) const {
    return peek().type == Lexeme::Type::Punct && peek().text == p;
  }
  bool accept_word(std::string_view w) {
    if (!at_word(w)) return false;
    next();
    return true;
  }
  bool accept_punct(std::string_view p) {
    if (!at_punct(p)) return false;
    next();
    return true;
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w)) {
      throw SyntaxError("expected '" + std::string(w) + "', found '" + peek().text + "'",
                        peek().pos);
    }
  }
  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) {
      throw SyntaxError("expected '" + std::string(p) + "', found '" + peek().text + "'",
                        peek().pos);
    }
  }

  struct CoreScope {
    std::vector<std::string> tables;               // resolved real table names, declared order
    std::map<std::string, std::string> aliases;    // alias -> table
  };

  std::string resolve_table(const CoreScope& scope, const std::string& name, std::size_t pos) {
    auto it = scope.aliases.find(name);
    if (it != scope.aliases.end()) return it->second;
    if (schema_.table_index(name) >= 0) return name;
    throw SyntaxError("unknown table or alias '" + name + "'", pos);
  }

  ColumnRef resolve_column(const CoreScope& scope, const RawName& raw) {
    if (!raw.qualifier.empty()) {
      std::string table = resolve_table(scope, raw.qualifier, raw.pos);
      const Schema::Table* t = schema_.table(table);
      if (t == nullptr) throw UnknownColumn("unknown table '" + table + "'");
      for (const auto& [c, ty] : t->columns) {
        (void)ty;
        if (c == raw.name) return {table, raw.name};
      }
      throw UnknownColumn("column '" + raw.name + "' not found in table '" + table + "'");
    }
    std::vector<std::string> owners;
    for (const auto& table : scope.tables) {
      const Schema::Table* t = schema_.table(table);
      if (t == nullptr) continue;
      for (const auto& [c, ty] : t->columns) {
        (void)ty;
        if (c == raw.name && std::find(owners.begin(), owners.end(), table) == owners.end()) {
          owners.push_back(table);
        }
      }
    }
    if (owners.empty()) {
      for (const auto& table : schema_.tables()) {
        for (const auto& [c, ty] : table.columns) {
          (void)ty;
          if (c == raw.name &&
              std::find(owners.begin(), owners.end(), table.name) == owners.end()) {
            owners.push_back(table.name);
          }
        }
      }
    }
    if (owners.empty()) throw UnknownColumn("column '" + raw.name + "' not found in schema");
    if (owners.size() > 1) {
      throw UnknownColumn("column '" + raw.name + "' is ambiguous (tables " + owners[0] +
                          ", " + owners[1] + ")");
    }
    return {owners[0], raw.name};
  }

  RawName parse_raw_name() {
    if (peek().type != Lexeme::Type::Word) {
      throw SyntaxError("expected a name, found '" + peek().text + "'", peek().pos);
    }
    RawName raw;
    raw.pos = peek().pos;
    raw.name = next().text;
    if (accept_punct(".")) {
      raw.qualifier = raw.name;
      if (peek().type != Lexeme::Type::Word) {
        throw SyntaxError("expected a column name after '.'", peek().pos);
      }
      raw.name = next().text;
    }
    return raw;
  }

  struct RawItem {
    AggFn agg = AggFn::None;
    bool distinct_arg = false;
    bool star = false;
    RawName name;
  };

  RawItem parse_raw_item() {
    RawItem item;
    if (peek().type == Lexeme::Type::Word && is_agg_word(peek().text) &&
        peek(1).type == Lexeme::Type::Punct && peek(1).text == "(") {
      item.agg = agg_from_word(next().text);
      expect_punct("(");
      item.distinct_arg = accept_word("distinct");
      if (accept_punct("*")) {
        item.star = true;
      } else {
        item.name = parse_raw_name();
      }
      expect_punct(")");
    } else if (accept_punct("*")) {
      item.star = true;
    } else {
      item.name = parse_raw_name();
    }
    return item;
  }

  SelectItem resolve_item(const CoreScope& scope, const RawItem& raw) {
    SelectItem item;
    item.agg = raw.agg;
    item.distinct_arg = raw.distinct_arg;
    item.star = raw.star;
    if (!raw.star) item.column = resolve_column(scope, raw.name);
    return item;
  }

  Literal parse_literal() {
    if (peek().type == Lexeme::Type::Number) {
      return {Literal::Kind::Number, next().text};
    }
    if (peek().type == Lexeme::Type::String) {
      return {Literal::Kind::String, next().text};
    }
    if (at_word("value")) {
      next();
      return {Literal::Kind::Placeholder, "value"};
    }
    throw SyntaxError("expected a literal, found '" + peek().text + "'", peek().pos);
  }

  bool at_literal() const {
    return peek().type == Lexeme::Type::Number || peek().type == Lexeme::Type::String ||
           at_word("value");
  }

  Operand parse_operand(const CoreScope& scope, bool allow_subquery) {
    Operand op;
    if (at_literal()) {
      op.kind = Operand::Kind::Lit;
      op.literal = parse_literal();
      return op;
    }
    if (at_punct("(")) {
      if (!allow_subquery) throw SyntaxError("subquery not allowed here", peek().pos);
      next();
      expect_subquery_start();
      op.kind = Operand::Kind::Subquery;
      op.subquery = std::make_shared<QueryAst>(parse_query());
      expect_punct(")");
      return op;
    }
    RawItem raw = parse_raw_item();
    if (raw.star && raw.agg == AggFn::None) {
      throw SyntaxError("bare '*' is not a valid operand", peek().pos);
    }
    op.kind = raw.agg == AggFn::None ? Operand::Kind::Column : Operand::Kind::Agg;
    op.expr = resolve_item(scope, raw);
    return op;
  }

  void expect_subquery_start() {
    if (!at_word("select")) {
      throw SyntaxError("expected a subquery, found '" + peek().text + "'", peek().pos);
    }
  }

  Condition parse_condition(const CoreScope& scope) {
    Condition cond;
    cond.negated = accept_word("not");
    cond.lhs = parse_operand(scope, false);
    if (cond.lhs.kind == Operand::Kind::Lit) {
      throw SyntaxError("condition must start with a column or aggregate", peek().pos);
    }
    bool trailing_not = accept_word("not");
    if (trailing_not) cond.negated = true;
    if (accept_word("in")) {
      cond.kind = Condition::Kind::In;
      expect_punct("(");
      if (at_word("select")) {
        Operand sub;
        sub.kind = Operand::Kind::Subquery;
        sub.subquery = std::make_shared<QueryAst>(parse_query());
        cond.rhs.push_back(std::move(sub));
      } else {
        for (;;) {
          Operand lit;
          lit.kind = Operand::Kind::Lit;
          lit.literal = parse_literal();
          cond.rhs.push_back(std::move(lit));
          if (!accept_punct(",")) break;
        }
      }
      expect_punct(")");
      return cond;
    }
    if (accept_word("like")) {
      cond.kind = Condition::Kind::Like;
      Operand lit;
      lit.kind = Operand::Kind::Lit;
      lit.literal = parse_literal();
      cond.rhs.push_back(std::move(lit));
      return cond;
    }
    if (trailing_not) {
      throw SyntaxError("expected IN or LIKE after NOT", peek().pos);
    }
    if (accept_word("between")) {
      cond.kind = Condition::Kind::Between;
      cond.rhs.push_back(parse_operand(scope, false));
      expect_word("and");
      cond.rhs.push_back(parse_operand(scope, false));
      return cond;
    }
    if (peek().type == Lexeme::Type::Punct &&
        (peek().text == "=" || peek().text == "!=" || peek().text == "<" ||
         peek().text == ">" || peek().text == "<=" || peek().text == ">=")) {
      cond.kind = Condition::Kind::Compare;
      cond.cmp = cmp_from_punct(next().text);
      cond.rhs.push_back(parse_operand(scope, true));
      return cond;
    }
    throw SyntaxError("expected a comparison, IN, LIKE or BETWEEN, found '" + peek().text + "'",
                      peek().pos);
  }

  ConditionChain parse_chain(const CoreScope& scope) {
    ConditionChain chain;
    chain.conditions.push_back(parse_condition(scope));
    while (at_word("and") || at_word("or")) {
      chain.connectives.push_back(next().text == "and" ? Connective::And : Connective::Or);
      chain.conditions.push_back(parse_condition(scope));
    }
    return chain;
  }

  SelectCore parse_core() {
    SelectCore core;
    expect_word("select");
    core.distinct = accept_word("distinct");

    std::vector<RawItem> raw_items;
    for (;;) {
      raw_items.push_back(parse_raw_item());
      if (!accept_punct(",")) break;
    }

    expect_word("from");
    CoreScope scope;
    struct RawJoin {
      std::string table;
      bool has_on = false;
      RawName on_left, on_right;
    };
    std::vector<RawJoin> raw_joins;
    for (;;) {
      if (peek().type != Lexeme::Type::Word) {
        throw SyntaxError("expected a table name", peek().pos);
      }
      RawJoin join;
      std::size_t tpos = peek().pos;
      join.table = next().text;
      if (schema_.table_index(join.table) < 0) {
        throw SyntaxError("unknown table '" + join.table + "'", tpos);
      }
      // optional alias: AS word, or a bare word that is not a clause keyword
      if (accept_word("as")) {
        if (peek().type != Lexeme::Type::Word) {
          throw SyntaxError("expected an alias after AS", peek().pos);
        }
        scope.aliases[next().text] = join.table;
      } else if (peek().type == Lexeme::Type::Word && !reserved_after_table(peek().text)) {
        scope.aliases[next().text] = join.table;
      }
      scope.tables.push_back(join.table);
      if (!raw_joins.empty() && at_word("on")) {
        next();
        join.has_on = true;
        join.on_left = parse_raw_name();
        expect_punct("=");
        join.on_right = parse_raw_name();
      }
      raw_joins.push_back(std::move(join));
      if (accept_punct(",") || accept_word("join")) continue;
      break;
    }

    for (const auto& raw : raw_joins) {
      JoinedTable jt;
      jt.table = raw.table;
      if (raw.has_on) {
        jt.on = std::make_pair(resolve_column(scope, raw.on_left),
                               resolve_column(scope, raw.on_right));
      }
      core.from.push_back(std::move(jt));
    }
    for (const auto& raw : raw_items) core.items.push_back(resolve_item(scope, raw));

    if (accept_word("where")) core.where = parse_chain(scope);
    if (accept_word("group")) {
      expect_word("by");
      for (;;) {
        core.group_by.push_back(resolve_column(scope, parse_raw_name()));
        if (!accept_punct(",")) break;
      }
      if (accept_word("having")) core.having = parse_chain(scope);
    }
    if (accept_word("order")) {
      expect_word("by");
      for (;;) {
        OrderItem item;
        RawItem raw = parse_raw_item();
        if (raw.star && raw.agg == AggFn::None) {
          throw SyntaxError("bare '*' cannot be ordered by", peek().pos);
        }
        item.expr = resolve_item(scope, raw);
        if (accept_word("asc")) {
          item.dir = OrderDir::Asc;
        } else if (accept_word("desc")) {
          item.dir = OrderDir::Desc;
        }
        core.order_by.push_back(std::move(item));
        if (!accept_punct(",")) break;
      }
    }
    if (accept_word("limit")) core.limit = parse_literal();
    return core;
  }

  static bool reserved_after_table(const std::string& w) {
    static const std::set<std::string> reserved = {
        "join", "on",    "where",     "group", "having", "order",
        "limit", "union", "intersect", "except", "as",   "select"};
    return reserved.count(w) > 0;
  }

  std::vector<Lexeme> lexemes_;
  const Schema& schema_;
  std::size_t pos_ = 0;
};

}  // namespace

SqlQuery parse(const std::string& sql_text, const Schema& schema) {
  TextParser parser(sql_text, schema);
  SqlQuery q;
  q.ast = parser.parse_query();
  parser.expect_end();
  q.normalized_tokens = normalized_tokens(q.ast);
  return q;
}

}  // namespace sqltrack
