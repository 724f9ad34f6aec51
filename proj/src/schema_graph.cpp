#include "sqltrack/schema_graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

namespace sqltrack {

Schema Schema::make(std::string db_id, std::vector<Table> tables,
                    std::vector<std::pair<std::string, std::string>> foreign_keys) {
  Schema s;
  s.db_id_ = std::move(db_id);
  s.tables_ = std::move(tables);
  std::set<std::string> seen_tables;
  for (std::size_t t = 0; t < s.tables_.size(); ++t) {
    const auto& table = s.tables_[t];
    if (table.name.empty()) throw SchemaError("empty table name in " + s.db_id_);
    if (table.name == "value") throw SchemaError("'value' is reserved and cannot name a table");
    if (!seen_tables.insert(table.name).second) {
      throw SchemaError("duplicate table name: " + table.name);
    }
    std::set<std::string> seen_cols;
    for (const auto& [col, type] : table.columns) {
      (void)type;
      if (col.empty()) throw SchemaError("empty column name in table " + table.name);
      if (col == "value") throw SchemaError("'value' is reserved and cannot name a column");
      if (!seen_cols.insert(col).second) {
        throw SchemaError("duplicate column " + col + " in table " + table.name);
      }
      s.columns_.push_back(table.name + "." + col);
      s.column_table_.push_back(t);
    }
  }
  for (const auto& [a, b] : foreign_keys) {
    int ia = s.column_index(a);
    int ib = s.column_index(b);
    if (ia < 0) throw InvalidForeignKey("foreign key references unknown column: " + a);
    if (ib < 0) throw InvalidForeignKey("foreign key references unknown column: " + b);
    if (s.column_table_[ia] == s.column_table_[ib]) {
      throw InvalidForeignKey("foreign key pair within one table: " + a + ", " + b);
    }
  }
  s.foreign_keys_ = std::move(foreign_keys);
  return s;
}

int Schema::column_index(std::string_view qualified) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == qualified) return static_cast<int>(i);
  }
  return -1;
}

int Schema::table_index(std::string_view name) const {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    if (tables_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

const Schema::Table* Schema::table(std::string_view name) const {
  int i = table_index(name);
  return i < 0 ? nullptr : &tables_[i];
}

SchemaGraph build_graph(const Schema& schema) {
  const std::size_t n = schema.column_count();
  SchemaGraph g;
  g.node_count = n;
  g.fk_out.resize(n);
  g.fk_in.resize(n);
  g.fkt_out.resize(n);
  g.fkt_in.resize(n);

  std::set<std::pair<std::uint32_t, std::uint32_t>> fk_pairs;
  std::set<std::pair<std::size_t, std::size_t>> fk_tables;
  for (const auto& [a, b] : schema.foreign_keys()) {
    int ia = schema.column_index(a);
    int ib = schema.column_index(b);
    if (ia < 0 || ib < 0) throw InvalidForeignKey("foreign key references unknown column");
    auto ta = schema.table_of_column(ia);
    auto tb = schema.table_of_column(ib);
    if (ta == tb) throw InvalidForeignKey("foreign key pair within one table");
    fk_pairs.emplace(static_cast<std::uint32_t>(ia), static_cast<std::uint32_t>(ib));
    fk_pairs.emplace(static_cast<std::uint32_t>(ib), static_cast<std::uint32_t>(ia));
    fk_tables.emplace(ta, tb);
    fk_tables.emplace(tb, ta);
  }

  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      if (i == j) continue;
      auto ti = schema.table_of_column(i);
      auto tj = schema.table_of_column(j);
      if (ti == tj) continue;
      if (fk_pairs.count({i, j})) {
        g.edges.push_back({i, j, EdgeType::FK});
      } else if (fk_tables.count({ti, tj})) {
        g.edges.push_back({i, j, EdgeType::FKT});
      }
    }
  }
  // Iteration above is already (src, dst) ordered; FK/FKT are disjoint per pair.
  for (const auto& e : g.edges) {
    auto& out = e.etype == EdgeType::FK ? g.fk_out : g.fkt_out;
    auto& in = e.etype == EdgeType::FK ? g.fk_in : g.fkt_in;
    out[e.src].push_back(e.dst);
    in[e.dst].push_back(e.src);
  }
  return g;
}

TableAdjacency table_fk_adjacency(const Schema& schema) {
  TableAdjacency adj(schema.tables().size());
  for (std::size_t ti = 0; ti < schema.tables().size(); ++ti) {
    for (std::size_t tj = 0; tj < schema.tables().size(); ++tj) {
      if (ti == tj) continue;
      for (const auto& [a, b] : schema.foreign_keys()) {
        auto ta = schema.table_of_column(schema.column_index(a));
        auto tb = schema.table_of_column(schema.column_index(b));
        if (ta == ti && tb == tj) {
          adj[ti].emplace_back(tj, std::make_pair(a, b));
          break;
        }
        if (tb == ti && ta == tj) {
          adj[ti].emplace_back(tj, std::make_pair(b, a));
          break;
        }
      }
    }
  }
  return adj;
}

namespace {

using nlohmann::json;

Schema schema_from_json(const json& doc, std::size_t line) {
  auto context = [line](const std::string& field) {
    return "schema file line " + std::to_string(line) + ", field '" + field + "': ";
  };
  try {
    if (!doc.contains("db_id")) throw SchemaError(context("db_id") + "missing");
    std::vector<Schema::Table> tables;
    for (const auto& t : doc.at("tables")) {
      Schema::Table table;
      table.name = t.at("name").get<std::string>();
      for (const auto& c : t.at("columns")) {
        table.columns.emplace_back(c.at(0).get<std::string>(), c.at(1).get<std::string>());
      }
      tables.push_back(std::move(table));
    }
    std::vector<std::pair<std::string, std::string>> fks;
    if (doc.contains("foreign_keys")) {
      for (const auto& fk : doc.at("foreign_keys")) {
        fks.emplace_back(fk.at(0).get<std::string>(), fk.at(1).get<std::string>());
      }
    }
    return Schema::make(doc.at("db_id").get<std::string>(), std::move(tables), std::move(fks));
  } catch (const json::exception& e) {
    throw SchemaError(context("tables/foreign_keys") + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError("schema file line " + std::to_string(line) + ": " + e.what());
  }
}

}  // namespace

std::vector<Schema> load_schemas(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file: " + path);
  std::vector<Schema> schemas;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError("schema file line " + std::to_string(lineno) + ": " + e.what());
    }
    schemas.push_back(schema_from_json(doc, lineno));
  }
  return schemas;
}

void save_schemas(const std::vector<Schema>& schemas, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw SchemaError("cannot open schema file for writing: " + path);
  for (const auto& s : schemas) {
    json doc;
    doc["db_id"] = s.db_id();
    doc["tables"] = json::array();
    for (const auto& t : s.tables()) {
      json jt;
      jt["name"] = t.name;
      jt["columns"] = json::array();
      for (const auto& [c, ty] : t.columns) jt["columns"].push_back({c, ty});
      doc["tables"].push_back(jt);
    }
    doc["foreign_keys"] = json::array();
    for (const auto& [a, b] : s.foreign_keys()) doc["foreign_keys"].push_back({a, b});
    out << doc.dump() << "\n";
  }
}

const Schema& find_schema(const std::vector<Schema>& schemas, std::string_view db_id) {
  for (const auto& s : schemas) {
    if (s.db_id() == db_id) return s;
  }
  throw SchemaError("unknown db_id: " + std::string(db_id));
}

}  // namespace sqltrack
