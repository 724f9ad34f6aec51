#include "sqltrack/sql_model.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace sqltrack {

int keyword_index(std::string_view text) {
  for (std::size_t i = 0; i < kKeywordVocabulary.size(); ++i) {
    if (kKeywordVocabulary[i] == text) return static_cast<int>(i);
  }
  return -1;
}

SqlToken keyword_token(std::string_view text) {
  if (keyword_index(text) < 0) {
    throw std::invalid_argument("not a keyword: " + std::string(text));
  }
  return {TokenKind::Keyword, std::string(text)};
}

SqlToken column_token(std::string_view qualified) {
  auto dot = qualified.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == qualified.size() ||
      qualified.find('.', dot + 1) != std::string_view::npos) {
    throw std::invalid_argument("column token must be 'table.column': " + std::string(qualified));
  }
  return {TokenKind::Column, std::string(qualified)};
}

SqlToken value_token() { return {TokenKind::ValuePlaceholder, "value"}; }

std::string tokens_to_string(std::span<const SqlToken> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t.text;
  }
  return out;
}

std::string_view agg_name(AggFn fn) {
  switch (fn) {
    case AggFn::Count: return "count";
    case AggFn::Sum: return "sum";
    case AggFn::Avg: return "avg";
    case AggFn::Min: return "min";
    case AggFn::Max: return "max";
    default: return "";
  }
}

std::string_view set_op_name(SetOp op) {
  switch (op) {
    case SetOp::Intersect: return "intersect";
    case SetOp::Union: return "union";
    default: return "except";
  }
}

std::string_view cmp_name(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Gt: return ">";
    case CmpOp::Le: return "<=";
    default: return ">=";
  }
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string item_text(const SelectItem& item) {
  std::string body = item.star ? "*" : item.column.qualified();
  if (item.agg == AggFn::None) return body;
  std::string out(agg_name(item.agg));
  out += "(";
  if (item.distinct_arg) out += "distinct ";
  out += body;
  out += ")";
  return out;
}

std::string literal_text(const Literal& lit) {
  switch (lit.kind) {
    case Literal::Kind::Number: return lit.text;
    case Literal::Kind::String: return "'" + lit.text + "'";
    default: return "value";
  }
}

std::string operand_text(const Operand& op) {
  switch (op.kind) {
    case Operand::Kind::Column:
    case Operand::Kind::Agg: return item_text(op.expr);
    case Operand::Kind::Lit: return literal_text(op.literal);
    default: return "(" + serialize(*op.subquery) + ")";
  }
}

std::string condition_text(const Condition& cond) {
  std::string out;
  switch (cond.kind) {
    case Condition::Kind::Compare:
      if (cond.negated) out += "not ";
      out += operand_text(cond.lhs);
      out += " ";
      out += cmp_name(cond.cmp);
      out += " " + operand_text(cond.rhs[0]);
      break;
    case Condition::Kind::In: {
      out += operand_text(cond.lhs);
      out += cond.negated ? " not in (" : " in (";
      if (cond.rhs.size() == 1 && cond.rhs[0].kind == Operand::Kind::Subquery) {
        out += serialize(*cond.rhs[0].subquery);
      } else {
        for (std::size_t i = 0; i < cond.rhs.size(); ++i) {
          if (i) out += ", ";
          out += operand_text(cond.rhs[i]);
        }
      }
      out += ")";
      break;
    }
    case Condition::Kind::Like:
      out += operand_text(cond.lhs);
      out += cond.negated ? " not like " : " like ";
      out += operand_text(cond.rhs[0]);
      break;
    case Condition::Kind::Between:
      out += operand_text(cond.lhs);
      out += " between " + operand_text(cond.rhs[0]) + " and " + operand_text(cond.rhs[1]);
      break;
  }
  return out;
}

std::string chain_text(const ConditionChain& chain) {
  std::string out = condition_text(chain.conditions[0]);
  for (std::size_t i = 0; i < chain.connectives.size(); ++i) {
    out += chain.connectives[i] == Connective::And ? " and " : " or ";
    out += condition_text(chain.conditions[i + 1]);
  }
  return out;
}

std::string core_text(const SelectCore& core) {
  std::string out = "select ";
  if (core.distinct) out += "distinct ";
  for (std::size_t i = 0; i < core.items.size(); ++i) {
    if (i) out += ", ";
    out += item_text(core.items[i]);
  }
  if (!core.from.empty()) {
    out += " from ";
    for (std::size_t i = 0; i < core.from.size(); ++i) {
      if (i) out += " join ";
      out += core.from[i].table;
      if (core.from[i].on) {
        out += " on " + core.from[i].on->first.qualified() + " = " +
               core.from[i].on->second.qualified();
      }
    }
  }
  if (core.where) out += " where " + chain_text(*core.where);
  if (!core.group_by.empty()) {
    out += " group by ";
    for (std::size_t i = 0; i < core.group_by.size(); ++i) {
      if (i) out += ", ";
      out += core.group_by[i].qualified();
    }
    if (core.having) out += " having " + chain_text(*core.having);
  }
  if (!core.order_by.empty()) {
    out += " order by ";
    for (std::size_t i = 0; i < core.order_by.size(); ++i) {
      if (i) out += ", ";
      out += item_text(core.order_by[i].expr);
      if (core.order_by[i].dir == OrderDir::Asc) out += " asc";
      if (core.order_by[i].dir == OrderDir::Desc) out += " desc";
    }
  }
  if (core.limit) out += " limit " + literal_text(*core.limit);
  return out;
}

}  // namespace

std::string serialize(const QueryAst& ast) {
  std::string out = core_text(ast.cores[0]);
  for (std::size_t i = 0; i < ast.ops.size(); ++i) {
    out += " " + std::string(set_op_name(ast.ops[i])) + " " + core_text(ast.cores[i + 1]);
  }
  return out;
}

std::string serialize(const SqlQuery& q) { return serialize(q.ast); }

// ---------------------------------------------------------------------------
// Normalized token stream

namespace {

void emit_item(const SelectItem& item, std::vector<SqlToken>& out) {
  if (item.agg != AggFn::None) out.push_back(keyword_token(agg_name(item.agg)));
  if (item.distinct_arg) out.push_back(keyword_token("distinct"));
  if (!item.star) out.push_back(column_token(item.column.qualified()));
}

void emit_query(const QueryAst& ast, std::vector<SqlToken>& out);

void emit_operand(const Operand& op, std::vector<SqlToken>& out) {
  switch (op.kind) {
    case Operand::Kind::Column:
    case Operand::Kind::Agg:
      emit_item(op.expr, out);
      break;
    case Operand::Kind::Lit:
      out.push_back(value_token());
      break;
    case Operand::Kind::Subquery:
      emit_query(*op.subquery, out);
      break;
  }
}

void emit_condition(const Condition& cond, std::vector<SqlToken>& out) {
  switch (cond.kind) {
    case Condition::Kind::Compare:
      if (cond.negated) out.push_back(keyword_token("not"));
      emit_operand(cond.lhs, out);
      out.push_back(keyword_token(cmp_name(cond.cmp)));
      emit_operand(cond.rhs[0], out);
      break;
    case Condition::Kind::In:
      emit_operand(cond.lhs, out);
      if (cond.negated) out.push_back(keyword_token("not"));
      out.push_back(keyword_token("in"));
      for (const auto& rhs : cond.rhs) emit_operand(rhs, out);
      break;
    case Condition::Kind::Like:
      emit_operand(cond.lhs, out);
      if (cond.negated) out.push_back(keyword_token("not"));
      out.push_back(keyword_token("like"));
      emit_operand(cond.rhs[0], out);
      break;
    case Condition::Kind::Between:
      emit_operand(cond.lhs, out);
      out.push_back(keyword_token("between"));
      emit_operand(cond.rhs[0], out);
      out.push_back(keyword_token("and"));
      emit_operand(cond.rhs[1], out);
      break;
  }
}

void emit_chain(const ConditionChain& chain, std::vector<SqlToken>& out) {
  emit_condition(chain.conditions[0], out);
  for (std::size_t i = 0; i < chain.connectives.size(); ++i) {
    out.push_back(keyword_token(chain.connectives[i] == Connective::And ? "and" : "or"));
    emit_condition(chain.conditions[i + 1], out);
  }
}

void emit_core(const SelectCore& core, std::vector<SqlToken>& out) {
  out.push_back(keyword_token("select"));
  if (core.distinct) out.push_back(keyword_token("distinct"));
  for (const auto& item : core.items) emit_item(item, out);
  if (core.where) {
    out.push_back(keyword_token("where"));
    emit_chain(*core.where, out);
  }
  if (!core.group_by.empty()) {
    out.push_back(keyword_token("group_by"));
    for (const auto& c : core.group_by) out.push_back(column_token(c.qualified()));
    if (core.having) {
      out.push_back(keyword_token("having"));
      emit_chain(*core.having, out);
    }
  }
  if (!core.order_by.empty()) {
    out.push_back(keyword_token("order_by"));
    for (const auto& item : core.order_by) {
      emit_item(item.expr, out);
      if (item.dir == OrderDir::Asc) out.push_back(keyword_token("asc"));
      if (item.dir == OrderDir::Desc) out.push_back(keyword_token("desc"));
    }
  }
  if (core.limit) {
    out.push_back(keyword_token("limit"));
    out.push_back(value_token());
  }
}

void emit_query(const QueryAst& ast, std::vector<SqlToken>& out) {
  emit_core(ast.cores[0], out);
  for (std::size_t i = 0; i < ast.ops.size(); ++i) {
    out.push_back(keyword_token(set_op_name(ast.ops[i])));
    emit_core(ast.cores[i + 1], out);
  }
}

}  // namespace

std::vector<SqlToken> normalized_tokens(const QueryAst& ast) {
  std::vector<SqlToken> out;
  emit_query(ast, out);
  return out;
}

// ---------------------------------------------------------------------------
// Clause decomposition

namespace {

std::string fingerprint_query(const QueryAst& ast);

std::string cond_str(const Condition& cond) {
  auto operand_str = [](const Operand& op) -> std::string {
    switch (op.kind) {
      case Operand::Kind::Column:
      case Operand::Kind::Agg: return item_text(op.expr);
      case Operand::Kind::Lit: return "value";
      default: return "(" + fingerprint_query(*op.subquery) + ")";
    }
  };
  std::string out;
  switch (cond.kind) {
    case Condition::Kind::Compare:
      if (cond.negated) out += "not ";
      out += operand_str(cond.lhs) + " " + std::string(cmp_name(cond.cmp)) + " " +
             operand_str(cond.rhs[0]);
      break;
    case Condition::Kind::In: {
      out += operand_str(cond.lhs);
      out += cond.negated ? " not in " : " in ";
      std::vector<std::string> parts;
      parts.reserve(cond.rhs.size());
      for (const auto& rhs : cond.rhs) parts.push_back(operand_str(rhs));
      std::sort(parts.begin(), parts.end());
      for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? " " : "") + parts[i];
      break;
    }
    case Condition::Kind::Like:
      out += operand_str(cond.lhs);
      out += cond.negated ? " not like value" : " like value";
      break;
    case Condition::Kind::Between:
      out += operand_str(cond.lhs) + " between " + operand_str(cond.rhs[0]) + " and " +
             operand_str(cond.rhs[1]);
      break;
  }
  return out;
}

struct CoreComponents {
  std::multiset<std::string> select, where, group, order, andor;
};

CoreComponents core_components(const SelectCore& core) {
  CoreComponents c;
  if (core.distinct) c.select.insert("distinct");
  for (const auto& item : core.items) c.select.insert(item_text(item));
  if (core.where) {
    for (const auto& cond : core.where->conditions) c.where.insert(cond_str(cond));
    for (auto conn : core.where->connectives) {
      c.andor.insert(conn == Connective::And ? "and" : "or");
    }
  }
  for (const auto& g : core.group_by) c.group.insert(g.qualified());
  if (core.having) {
    for (const auto& cond : core.having->conditions) c.group.insert("having " + cond_str(cond));
    for (auto conn : core.having->connectives) {
      c.andor.insert(conn == Connective::And ? "and" : "or");
    }
  }
  for (const auto& item : core.order_by) {
    std::string s = item_text(item.expr);
    if (item.dir == OrderDir::Asc) s += " asc";
    if (item.dir == OrderDir::Desc) s += " desc";
    c.order.insert(s);
  }
  if (core.limit) c.order.insert("limit");
  return c;
}

std::string join_sorted(const std::multiset<std::string>& elems) {
  std::string out;
  for (const auto& e : elems) {
    if (!out.empty()) out += ",";
    out += e;
  }
  return out;
}

std::string fingerprint_core(const SelectCore& core) {
  CoreComponents c = core_components(core);
  return "select{" + join_sorted(c.select) + "}where{" + join_sorted(c.where) + "}group{" +
         join_sorted(c.group) + "}order{" + join_sorted(c.order) + "}andor{" +
         join_sorted(c.andor) + "}";
}

std::string fingerprint_query(const QueryAst& ast) {
  std::string out = fingerprint_core(ast.cores[0]);
  for (std::size_t i = 0; i < ast.ops.size(); ++i) {
    out += " " + std::string(set_op_name(ast.ops[i])) + " " + fingerprint_core(ast.cores[i + 1]);
  }
  return out;
}

}  // namespace

const std::array<std::string_view, 7>& ClauseDecomposition::component_names() {
  static const std::array<std::string_view, 7> names = {
      "SELECT", "WHERE", "GROUP", "ORDER", "AND/OR", "IUEN", "KEYWORDS"};
  return names;
}

ClauseDecomposition decompose(const QueryAst& ast) {
  ClauseDecomposition d;
  for (auto name : ClauseDecomposition::component_names()) {
    d.components[std::string(name)] = {};
  }
  CoreComponents c = core_components(ast.cores[0]);
  d.components["SELECT"] = std::move(c.select);
  d.components["WHERE"] = std::move(c.where);
  d.components["GROUP"] = std::move(c.group);
  d.components["ORDER"] = std::move(c.order);
  d.components["AND/OR"] = std::move(c.andor);
  for (std::size_t i = 0; i < ast.ops.size(); ++i) {
    d.components["IUEN"].insert(std::string(set_op_name(ast.ops[i])) + " " +
                                fingerprint_core(ast.cores[i + 1]));
  }
  for (const auto& tok : normalized_tokens(ast)) {
    if (tok.kind == TokenKind::Keyword) d.components["KEYWORDS"].insert(tok.text);
  }
  return d;
}

ClauseDecomposition decompose(const SqlQuery& q) { return decompose(q.ast); }

// ---------------------------------------------------------------------------
// Assembly of normalized token streams back into full queries

namespace {

class NormalizedParser {
 public:
  NormalizedParser(std::span<const SqlToken> tokens, const Schema& schema)
      : tokens_(tokens), schema_(schema) {}

  QueryAst parse_query() {
    QueryAst q;
    q.cores.push_back(parse_core());
    while (at_kw("intersect") || at_kw("union") || at_kw("except")) {
      const std::string op = next().text;
      q.ops.push_back(op == "intersect" ? SetOp::Intersect
                                        : op == "union" ? SetOp::Union : SetOp::Except);
      q.cores.push_back(parse_core());
    }
    return q;
  }

  void expect_end() {
    if (pos_ != tokens_.size()) {
      throw AssemblyError("unexpected token '" + peek().text + "' at position " +
                          std::to_string(pos_));
    }
  }

 private:
  static const SqlToken& end_token() {
    static const SqlToken end{TokenKind::Keyword, ""};
    return end;
  }
  const SqlToken& peek(std::size_t ahead = 0) const {
    return pos_ + ahead < tokens_.size() ? tokens_[pos_ + ahead] : end_token();
  }
  const SqlToken& next() {
    if (pos_ >= tokens_.size()) throw AssemblyError("unexpected end of token stream");
    return tokens_[pos_++];
  }
  bool at_kw(std::string_view w) const {
    return peek().kind == TokenKind::Keyword && peek().text == w;
  }
  bool at_column() const { return peek().kind == TokenKind::Column; }
  bool at_value() const { return peek().kind == TokenKind::ValuePlaceholder; }
  bool accept_kw(std::string_view w) {
    if (!at_kw(w)) return false;
    ++pos_;
    return true;
  }
  void expect_kw(std::string_view w) {
    if (!accept_kw(w)) {
      throw AssemblyError("expected '" + std::string(w) + "' at position " +
                          std::to_string(pos_) + ", found '" + peek().text + "'");
    }
  }
  bool at_agg() const {
    return peek().kind == TokenKind::Keyword &&
           (peek().text == "count" || peek().text == "sum" || peek().text == "avg" ||
            peek().text == "min" || peek().text == "max");
  }

  ColumnRef take_column() {
    if (!at_column()) {
      throw AssemblyError("expected a column at position " + std::to_string(pos_) +
                          ", found '" + peek().text + "'");
    }
    const std::string& q = next().text;
    if (schema_.column_index(q) < 0) {
      throw AssemblyError("column '" + q + "' is not in schema " + schema_.db_id());
    }
    auto dot = q.find('.');
    return {q.substr(0, dot), q.substr(dot + 1)};
  }

  SelectItem parse_item() {
    SelectItem item;
    if (at_agg()) {
      item.agg = agg_from_kw(next().text);
      item.distinct_arg = accept_kw("distinct");
      if (at_column()) {
        item.column = take_column();
      } else {
        item.star = true;
      }
    } else {
      item.column = take_column();
    }
    return item;
  }

  static AggFn agg_from_kw(const std::string& w) {
    if (w == "count") return AggFn::Count;
    if (w == "sum") return AggFn::Sum;
    if (w == "avg") return AggFn::Avg;
    if (w == "min") return AggFn::Min;
    return AggFn::Max;
  }

  bool at_item_start() const { return at_column() || at_agg(); }

  Operand parse_operand_colagg() {
    Operand op;
    SelectItem item = parse_item();
    op.kind = item.agg == AggFn::None ? Operand::Kind::Column : Operand::Kind::Agg;
    op.expr = std::move(item);
    return op;
  }

  Operand parse_operand_rhs() {
    if (at_value()) {
      ++pos_;
      Operand op;
      op.kind = Operand::Kind::Lit;
      op.literal = {Literal::Kind::Placeholder, "value"};
      return op;
    }
    if (at_kw("select")) {
      Operand op;
      op.kind = Operand::Kind::Subquery;
      op.subquery = std::make_shared<QueryAst>(parse_query());
      return op;
    }
    if (at_item_start()) return parse_operand_colagg();
    throw AssemblyError("expected a value, column or subquery at position " +
                        std::to_string(pos_));
  }

  Condition parse_condition() {
    Condition cond;
    cond.negated = accept_kw("not");
    cond.lhs = parse_operand_colagg();
    if (accept_kw("not")) cond.negated = true;
    if (accept_kw("in")) {
      cond.kind = Condition::Kind::In;
      if (at_kw("select")) {
        Operand sub;
        sub.kind = Operand::Kind::Subquery;
        sub.subquery = std::make_shared<QueryAst>(parse_query());
        cond.rhs.push_back(std::move(sub));
      } else if (at_value()) {
        while (at_value()) {
          ++pos_;
          Operand lit;
          lit.kind = Operand::Kind::Lit;
          lit.literal = {Literal::Kind::Placeholder, "value"};
          cond.rhs.push_back(std::move(lit));
        }
      } else {
        throw AssemblyError("expected values or a subquery after 'in' at position " +
                            std::to_string(pos_));
      }
      return cond;
    }
    if (accept_kw("like")) {
      cond.kind = Condition::Kind::Like;
      if (!at_value()) {
        throw AssemblyError("expected a value after 'like' at position " + std::to_string(pos_));
      }
      ++pos_;
      Operand lit;
      lit.kind = Operand::Kind::Lit;
      lit.literal = {Literal::Kind::Placeholder, "value"};
      cond.rhs.push_back(std::move(lit));
      return cond;
    }
    if (accept_kw("between")) {
      cond.kind = Condition::Kind::Between;
      cond.rhs.push_back(parse_operand_rhs());
      expect_kw("and");
      cond.rhs.push_back(parse_operand_rhs());
      return cond;
    }
    for (const char* cmp : {"=", "!=", "<", ">", "<=", ">="}) {
      if (accept_kw(cmp)) {
        cond.kind = Condition::Kind::Compare;
        cond.cmp = cmp_from_kw(cmp);
        cond.rhs.push_back(parse_operand_rhs());
        return cond;
      }
    }
    throw AssemblyError("expected a predicate at position " + std::to_string(pos_) +
                        ", found '" + peek().text + "'");
  }

  static CmpOp cmp_from_kw(std::string_view p) {
    if (p == "=") return CmpOp::Eq;
    if (p == "!=") return CmpOp::Ne;
    if (p == "<") return CmpOp::Lt;
    if (p == ">") return CmpOp::Gt;
    if (p == "<=") return CmpOp::Le;
    return CmpOp::Ge;
  }

  ConditionChain parse_chain() {
    ConditionChain chain;
    chain.conditions.push_back(parse_condition());
    while (at_kw("and") || at_kw("or")) {
      chain.connectives.push_back(next().text == "and" ? Connective::And : Connective::Or);
      chain.conditions.push_back(parse_condition());
    }
    return chain;
  }

  SelectCore parse_core() {
    SelectCore core;
    expect_kw("select");
    core.distinct = accept_kw("distinct");
    while (at_item_start()) core.items.push_back(parse_item());
    if (core.items.empty()) {
      SelectItem star;
      star.star = true;
      core.items.push_back(star);
    }
    if (accept_kw("where")) core.where = parse_chain();
    if (accept_kw("group_by")) {
      if (!at_column()) {
        throw AssemblyError("expected a column after 'group_by' at position " +
                            std::to_string(pos_));
      }
      while (at_column()) core.group_by.push_back(take_column());
      if (accept_kw("having")) core.having = parse_chain();
    }
    if (accept_kw("order_by")) {
      if (!at_item_start()) {
        throw AssemblyError("expected an order item at position " + std::to_string(pos_));
      }
      while (at_item_start()) {
        OrderItem item;
        item.expr = parse_item();
        if (accept_kw("asc")) item.dir = OrderDir::Asc;
        else if (accept_kw("desc")) item.dir = OrderDir::Desc;
        core.order_by.push_back(std::move(item));
      }
    }
    if (accept_kw("limit")) {
      if (!at_value()) {
        throw AssemblyError("expected a value after 'limit' at position " + std::to_string(pos_));
      }
      ++pos_;
      core.limit = Literal{Literal::Kind::Placeholder, "value"};
    }
    return core;
  }

  std::span<const SqlToken> tokens_;
  const Schema& schema_;
  std::size_t pos_ = 0;
};

void collect_mentioned_tables(const SelectCore& core, const Schema& schema,
                              std::vector<std::size_t>& tables) {
  auto add_column = [&](const ColumnRef& c) {
    int idx = schema.column_index(c.qualified());
    if (idx >= 0) {
      std::size_t t = schema.table_of_column(idx);
      if (std::find(tables.begin(), tables.end(), t) == tables.end()) tables.push_back(t);
    }
  };
  auto add_item = [&](const SelectItem& item) {
    if (!item.star) add_column(item.column);
  };
  auto add_operand = [&](const Operand& op) {
    if (op.kind == Operand::Kind::Column || op.kind == Operand::Kind::Agg) add_item(op.expr);
  };
  auto add_chain = [&](const std::optional<ConditionChain>& chain) {
    if (!chain) return;
    for (const auto& cond : chain->conditions) {
      add_operand(cond.lhs);
      for (const auto& rhs : cond.rhs) add_operand(rhs);
    }
  };
  for (const auto& item : core.items) add_item(item);
  add_chain(core.where);
  for (const auto& g : core.group_by) add_column(g);
  add_chain(core.having);
  for (const auto& o : core.order_by) add_item(o.expr);
}

// Connects the mentioned tables along shortest paths in the table-level
// foreign-key graph. Deterministic: mentioned tables are taken in
// declaration order and BFS expands neighbors in declaration order.
void infer_from_clause(SelectCore& core, const Schema& schema, const TableAdjacency& adj) {
  std::vector<std::size_t> mentioned;
  collect_mentioned_tables(core, schema, mentioned);
  if (mentioned.empty()) {
    throw AssemblyError("cannot infer FROM clause: no columns mentioned");
  }
  std::sort(mentioned.begin(), mentioned.end());

  std::vector<std::size_t> joined;
  core.from.clear();
  auto join_table = [&](std::size_t t,
                        std::optional<std::pair<ColumnRef, ColumnRef>> on) {
    joined.push_back(t);
    JoinedTable jt;
    jt.table = schema.tables()[t].name;
    jt.on = std::move(on);
    core.from.push_back(std::move(jt));
  };
  join_table(mentioned[0], std::nullopt);

  auto split_ref = [](const std::string& qualified) {
    auto dot = qualified.find('.');
    return ColumnRef{qualified.substr(0, dot), qualified.substr(dot + 1)};
  };

  for (std::size_t k = 1; k < mentioned.size(); ++k) {
    std::size_t target = mentioned[k];
    if (std::find(joined.begin(), joined.end(), target) != joined.end()) continue;
    // Multi-source BFS from the joined set.
    std::vector<int> parent(schema.tables().size(), -2);  // -2 unvisited, -1 source
    std::deque<std::size_t> queue;
    for (auto t : joined) {
      parent[t] = -1;
      queue.push_back(t);
    }
    while (!queue.empty() && parent[target] == -2) {
      std::size_t u = queue.front();
      queue.pop_front();
      for (const auto& [v, fk] : adj[u]) {
        (void)fk;
        if (parent[v] == -2) {
          parent[v] = static_cast<int>(u);
          queue.push_back(v);
        }
      }
    }
    if (parent[target] == -2) {
      throw AssemblyError("cannot infer FROM clause: table '" +
                          schema.tables()[target].name +
                          "' is not connected to the joined tables by foreign keys");
    }
    std::vector<std::size_t> path;  // target back to (excluded) source
    for (std::size_t v = target; parent[v] != -1; v = static_cast<std::size_t>(parent[v])) {
      path.push_back(v);
    }
    std::reverse(path.begin(), path.end());
    for (auto v : path) {
      std::size_t u = static_cast<std::size_t>(parent[v]);
      const std::pair<std::string, std::string>* fk = nullptr;
      for (const auto& [w, pair] : adj[u]) {
        if (w == v) {
          fk = &pair;
          break;
        }
      }
      join_table(v, std::make_pair(split_ref(fk->first), split_ref(fk->second)));
    }
  }
}

void infer_from_recursive(QueryAst& ast, const Schema& schema, const TableAdjacency& adj) {
  for (auto& core : ast.cores) {
    infer_from_clause(core, schema, adj);
    auto recurse_chain = [&](std::optional<ConditionChain>& chain) {
      if (!chain) return;
      for (auto& cond : chain->conditions) {
        for (auto& rhs : cond.rhs) {
          if (rhs.kind == Operand::Kind::Subquery) {
            infer_from_recursive(*rhs.subquery, schema, adj);
          }
        }
      }
    };
    recurse_chain(core.where);
    recurse_chain(core.having);
  }
}

}  // namespace

SqlQuery assemble(std::span<const SqlToken> tokens, const Schema& schema) {
  if (tokens.empty()) throw AssemblyError("empty token stream");
  NormalizedParser parser(tokens, schema);
  SqlQuery q;
  q.ast = parser.parse_query();
  parser.expect_end();
  TableAdjacency adj = table_fk_adjacency(schema);
  infer_from_recursive(q.ast, schema, adj);
  q.normalized_tokens = normalized_tokens(q.ast);
  return q;
}

}  // namespace sqltrack
