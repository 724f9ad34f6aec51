#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "sqltrack/autograd.hpp"
#include "sqltrack/corpus.hpp"
#include "sqltrack/schema_graph.hpp"

using namespace sqltrack;

namespace {

// Brute-force O(N^2) pair classifier: the independent oracle for
// build_graph.
std::set<std::tuple<std::uint32_t, std::uint32_t, int>> oracle_edges(const Schema& schema) {
  std::set<std::tuple<std::uint32_t, std::uint32_t, int>> edges;
  const std::size_t n = schema.column_count();
  auto is_fk_pair = [&](std::size_t a, std::size_t b) {
    for (const auto& [x, y] : schema.foreign_keys()) {
      std::size_t ix = schema.column_index(x);
      std::size_t iy = schema.column_index(y);
      if ((ix == a && iy == b) || (ix == b && iy == a)) return true;
    }
    return false;
  };
  auto tables_share_fk = [&](std::size_t ta, std::size_t tb) {
    for (const auto& [x, y] : schema.foreign_keys()) {
      std::size_t tx = schema.table_of_column(schema.column_index(x));
      std::size_t ty = schema.table_of_column(schema.column_index(y));
      if ((tx == ta && ty == tb) || (tx == tb && ty == ta)) return true;
    }
    return false;
  };
  for (std::uint32_t a = 0; a < n; ++a) {
    for (std::uint32_t b = 0; b < n; ++b) {
      if (a == b) continue;
      std::size_t ta = schema.table_of_column(a);
      std::size_t tb = schema.table_of_column(b);
      if (ta == tb) continue;
      if (is_fk_pair(a, b)) {
        edges.insert({a, b, 0});
      } else if (tables_share_fk(ta, tb)) {
        edges.insert({a, b, 1});
      }
    }
  }
  return edges;
}

void check_against_oracle(const Schema& schema) {
  SchemaGraph g = build_graph(schema);
  std::set<std::tuple<std::uint32_t, std::uint32_t, int>> got;
  for (const auto& e : g.edges) {
    auto [it, fresh] = got.insert({e.src, e.dst, e.etype == EdgeType::FK ? 0 : 1});
    CHECK(fresh);  // no duplicate (src, dst, etype)
    CHECK(e.src != e.dst);
  }
  CHECK(got == oracle_edges(schema));
}

Schema random_schema(Rng& rng, std::size_t n_tables, std::size_t n_cols, std::size_t n_fks) {
  std::vector<Schema::Table> tables(n_tables);
  std::vector<std::string> qualified;
  for (std::size_t t = 0; t < n_tables; ++t) {
    tables[t].name = "t" + std::to_string(t);
  }
  for (std::size_t c = 0; c < n_cols; ++c) {
    std::size_t t = c < n_tables ? c : rng.below(n_tables);  // every table nonempty
    std::string name = "c" + std::to_string(c);
    tables[t].columns.emplace_back(name, "number");
    qualified.push_back(tables[t].name + "." + name);
  }
  std::vector<std::pair<std::string, std::string>> fks;
  std::size_t guard = 0;
  while (fks.size() < n_fks && guard++ < 100) {
    const std::string& a = qualified[rng.below(qualified.size())];
    const std::string& b = qualified[rng.below(qualified.size())];
    if (a.substr(0, a.find('.')) != b.substr(0, b.find('.'))) fks.emplace_back(a, b);
  }
  return Schema::make("rand", std::move(tables), std::move(fks));
}

}  // namespace

TEST_CASE("FK and FKT edges on the dormitory example") {
  Schema schema = Schema::make(
      "mini",
      {{"dorm", {{"dormid", "number"}, {"dorm_name", "text"}}},
       {"has_amenity", {{"dormid", "number"}, {"amenid", "number"}}}},
      {{"dorm.dormid", "has_amenity.dormid"}});
  SchemaGraph g = build_graph(schema);

  std::size_t dormid = schema.column_index("dorm.dormid");
  std::size_t ha_dormid = schema.column_index("has_amenity.dormid");
  std::size_t dorm_name = schema.column_index("dorm.dorm_name");
  std::size_t amenid = schema.column_index("has_amenity.amenid");

  auto has_edge = [&](std::size_t a, std::size_t b, EdgeType e) {
    for (const auto& edge : g.edges) {
      if (edge.src == a && edge.dst == b && edge.etype == e) return true;
    }
    return false;
  };
  CHECK(has_edge(dormid, ha_dormid, EdgeType::FK));
  CHECK(has_edge(ha_dormid, dormid, EdgeType::FK));
  // every other cross-table pair is FKT
  CHECK(has_edge(dorm_name, amenid, EdgeType::FKT));
  CHECK(has_edge(amenid, dorm_name, EdgeType::FKT));
  CHECK(has_edge(dorm_name, ha_dormid, EdgeType::FKT));
  CHECK(has_edge(dormid, amenid, EdgeType::FKT));
  // 1 FK pair = 2 directed FK edges; 3 remaining cross pairs = 6 FKT edges
  std::size_t fk = 0, fkt = 0;
  for (const auto& e : g.edges) (e.etype == EdgeType::FK ? fk : fkt) += 1;
  CHECK(fk == 2);
  CHECK(fkt == 6);
  check_against_oracle(schema);
}

TEST_CASE("no foreign keys means no edges") {
  Schema schema = Schema::make(
      "flat", {{"a", {{"x", "number"}}}, {"b", {{"y", "number"}}}}, {});
  SchemaGraph g = build_graph(schema);
  CHECK(g.edges.empty());
  CHECK(g.node_isolated(0));
  CHECK(g.node_isolated(1));
}

TEST_CASE("FKT edges stay local to the FK-sharing table pair") {
  Schema schema = Schema::make(
      "three",
      {{"a", {{"x", "number"}, {"p", "number"}}},
       {"b", {{"y", "number"}, {"q", "number"}}},
       {"c", {{"z", "number"}}}},
      {{"a.x", "b.y"}});
  SchemaGraph g = build_graph(schema);
  std::size_t cz = schema.column_index("c.z");
  for (const auto& e : g.edges) {
    CHECK(e.src != cz);
    CHECK(e.dst != cz);
  }
  check_against_oracle(schema);
}

TEST_CASE("symmetry and FK/FKT disjointness") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    Schema schema = random_schema(rng, 3 + rng.below(3), 8 + rng.below(6), 1 + rng.below(4));
    SchemaGraph g = build_graph(schema);
    std::set<std::tuple<std::uint32_t, std::uint32_t, int>> seen;
    for (const auto& e : g.edges) seen.insert({e.src, e.dst, e.etype == EdgeType::FK ? 0 : 1});
    for (const auto& [a, b, t] : seen) {
      CHECK(seen.count({b, a, t}));      // symmetric
      CHECK(!seen.count({a, b, 1 - t})); // disjoint types per pair
    }
    check_against_oracle(schema);
  }
}

TEST_CASE("adjacency views agree with the edge list") {
  Schema schema = dorm_schema();
  SchemaGraph g = build_graph(schema);
  for (std::size_t i = 0; i < g.node_count; ++i) {
    for (EdgeType e : {EdgeType::FK, EdgeType::FKT}) {
      for (auto j : g.out_neighbors(i, e)) {
        bool found = false;
        for (const auto& edge : g.edges) {
          found = found || (edge.src == i && edge.dst == j && edge.etype == e);
        }
        CHECK(found);
      }
      CHECK(std::vector<std::uint32_t>(g.out_neighbors(i, e).begin(),
                                       g.out_neighbors(i, e).end()) ==
            std::vector<std::uint32_t>(g.in_neighbors(i, e).begin(),
                                       g.in_neighbors(i, e).end()));
    }
  }
}

TEST_CASE("invalid foreign keys are rejected") {
  CHECK_THROWS_AS(Schema::make("bad", {{"a", {{"x", "number"}}}, {"b", {{"y", "number"}}}},
                               {{"a.x", "a.x"}}),
                  InvalidForeignKey);
  CHECK_THROWS_AS(Schema::make("bad", {{"a", {{"x", "number"}}}}, {{"a.x", "b.y"}}),
                  InvalidForeignKey);
}

TEST_CASE("schema invariants are validated") {
  CHECK_THROWS_AS(Schema::make("dup", {{"a", {{"x", "number"}, {"x", "text"}}}}, {}),
                  SchemaError);
  CHECK_THROWS_AS(Schema::make("dup", {{"a", {{"x", "number"}}}, {"a", {{"y", "text"}}}}, {}),
                  SchemaError);
  CHECK_THROWS_AS(Schema::make("resv", {{"a", {{"value", "number"}}}}, {}), SchemaError);
}

TEST_CASE("schema file loader round-trips and reports diagnostics") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "sqltrack_schema_test.jsonl";
  std::vector<Schema> schemas = {dorm_schema(), concert_schema()};
  save_schemas(schemas, path.string());
  auto loaded = load_schemas(path.string());
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].db_id() == "dorm_1");
  CHECK(loaded[1].columns() == schemas[1].columns());
  CHECK(loaded[0].foreign_keys() == schemas[0].foreign_keys());

  std::ofstream bad(path);
  bad << R"({"db_id":"x","tables":[{"name":"a","columns":[["c","text"]]}],)"
      << R"("foreign_keys":[["a.c","missing.col"]]})" << "\n";
  bad.close();
  try {
    load_schemas(path.string());
    CHECK(false);
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  fs::remove(path);
}

TEST_CASE("table adjacency carries oriented first foreign keys") {
  Schema schema = dorm_schema();
  TableAdjacency adj = table_fk_adjacency(schema);
  std::size_t dorm = schema.table_index("dorm");
  std::size_t ha = schema.table_index("has_amenity");
  REQUIRE(adj[dorm].size() == 1);
  CHECK(adj[dorm][0].first == ha);
  CHECK(adj[dorm][0].second.first == "dorm.dormid");       // column in dorm
  CHECK(adj[dorm][0].second.second == "has_amenity.dormid");
}
