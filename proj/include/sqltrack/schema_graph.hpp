#ifndef SQLTRACK_SCHEMA_GRAPH_HPP_
#define SQLTRACK_SCHEMA_GRAPH_HPP_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sqltrack {

struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidForeignKey : SchemaError {
  explicit InvalidForeignKey(const std::string& what) : SchemaError(what) {}
};

// A database: tables with typed columns plus declared foreign-key pairs.
// Column identity everywhere downstream is the qualified "table.column"
// name; index order is the stable node order for the graph encoders.
class Schema {
 public:
  struct Table {
    std::string name;
    std::vector<std::pair<std::string, std::string>> columns;  // (name, declared type)
  };

  static Schema make(std::string db_id, std::vector<Table> tables,
                     std::vector<std::pair<std::string, std::string>> foreign_keys);

  const std::string& db_id() const { return db_id_; }
  const std::vector<Table>& tables() const { return tables_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::pair<std::string, std::string>>& foreign_keys() const {
    return foreign_keys_;
  }

  std::size_t column_count() const { return columns_.size(); }
  int column_index(std::string_view qualified) const;  // -1 when absent
  bool has_column(std::string_view qualified) const { return column_index(qualified) >= 0; }
  int table_index(std::string_view name) const;  // -1 when absent
  const Table* table(std::string_view name) const;
  // Table index owning column node i.
  std::size_t table_of_column(std::size_t column) const { return column_table_[column]; }

 private:
  std::string db_id_;
  std::vector<Table> tables_;
  std::vector<std::string> columns_;
  std::vector<std::size_t> column_table_;
  std::vector<std::pair<std::string, std::string>> foreign_keys_;
};

enum class EdgeType : std::uint8_t { FK, FKT };

// Directed relational graph over schema columns. Symmetric by
// construction: (a,b,e) present iff (b,a,e) present, and FK takes
// precedence over FKT for the same pair.
struct SchemaGraph {
  struct Edge {
    std::uint32_t src;
    std::uint32_t dst;
    EdgeType etype;
  };

  std::size_t node_count = 0;
  std::vector<Edge> edges;  // sorted by (src, dst, etype)

  // Adjacency views. For node i: out[i] lists j with edge i->j, in[i]
  // lists j with edge j->i; both sorted ascending.
  std::vector<std::vector<std::uint32_t>> fk_out, fk_in, fkt_out, fkt_in;

  std::span<const std::uint32_t> out_neighbors(std::size_t node, EdgeType e) const {
    return e == EdgeType::FK ? std::span<const std::uint32_t>(fk_out[node])
                             : std::span<const std::uint32_t>(fkt_out[node]);
  }
  std::span<const std::uint32_t> in_neighbors(std::size_t node, EdgeType e) const {
    return e == EdgeType::FK ? std::span<const std::uint32_t>(fk_in[node])
                             : std::span<const std::uint32_t>(fkt_in[node]);
  }
  bool node_isolated(std::size_t node) const {
    return fk_out[node].empty() && fk_in[node].empty() && fkt_out[node].empty() &&
           fkt_in[node].empty();
  }
};

SchemaGraph build_graph(const Schema& schema);

// Table-level foreign-key adjacency used for FROM clause reconstruction:
// adj[ti] lists (tj, (column in ti, column in tj)) for every other table
// sharing at least one foreign-key pair with ti; the pair is the first
// declared one, so reconstruction is deterministic.
using TableAdjacency =
    std::vector<std::vector<std::pair<std::size_t, std::pair<std::string, std::string>>>>;
TableAdjacency table_fk_adjacency(const Schema& schema);

// Schema file: one JSON document per line, each
//   {"db_id": ..., "tables": [{"name":..., "columns":[[name,type],...]},...],
//    "foreign_keys": [[qualified, qualified], ...]}
// Unknown references are rejected with a line/field diagnostic.
std::vector<Schema> load_schemas(const std::string& path);
void save_schemas(const std::vector<Schema>& schemas, const std::string& path);
const Schema& find_schema(const std::vector<Schema>& schemas, std::string_view db_id);

}  // namespace sqltrack

#endif  // SQLTRACK_SCHEMA_GRAPH_HPP_
