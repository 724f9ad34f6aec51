#include "sqltrack/state_encoders.hpp"

namespace sqltrack {

StateEncoderParams StateEncoderParams::create(ParamStore& store, std::size_t d,
                                              const std::string& prefix) {
  StateEncoderParams p;
  p.kw_emb = store.add_uniform(prefix + ".kw_emb", {kKeywordCount + 1, d});
  p.w1 = store.add_uniform(prefix + ".w1", {d, d});
  p.w2 = store.add_uniform(prefix + ".w2", {d, d});
  p.none_k = store.add_uniform(prefix + ".none_k", {d});
  p.w_out = store.add_uniform(prefix + ".w_out", {d, d});
  p.w_in = store.add_uniform(prefix + ".w_in", {d, d});
  p.z_out_fk = store.add_uniform(prefix + ".z_out_fk", {d});
  p.z_in_fk = store.add_uniform(prefix + ".z_in_fk", {d});
  p.z_out_fkt = store.add_uniform(prefix + ".z_out_fkt", {d});
  p.z_in_fkt = store.add_uniform(prefix + ".z_in_fkt", {d});
  return p;
}

StateEncoderParams StateEncoderParams::find(const ParamStore& store, const std::string& prefix) {
  StateEncoderParams p;
  p.kw_emb = store.find(prefix + ".kw_emb");
  p.w1 = store.find(prefix + ".w1");
  p.w2 = store.find(prefix + ".w2");
  p.none_k = store.find(prefix + ".none_k");
  p.w_out = store.find(prefix + ".w_out");
  p.w_in = store.find(prefix + ".w_in");
  p.z_out_fk = store.find(prefix + ".z_out_fk");
  p.z_in_fk = store.find(prefix + ".z_in_fk");
  p.z_out_fkt = store.find(prefix + ".z_out_fkt");
  p.z_in_fkt = store.find(prefix + ".z_in_fkt");
  return p;
}

std::vector<Var> encode_schema_states(Graph& g, std::span<const Var> column_reprs,
                                      const InteractionStates& states, const Schema& schema,
                                      Var w1, std::span<const Var> kw_rows) {
  if (column_reprs.size() != schema.column_count()) {
    throw ShapeMismatch("encode_schema_states: column representation count mismatch");
  }
  std::vector<Var> out;
  out.reserve(column_reprs.size());
  for (std::size_t i = 0; i < column_reprs.size(); ++i) {
    const auto& occurrences = states.schema_states.at(schema.columns()[i]);
    std::vector<Var> terms;
    terms.reserve(occurrences.size() + 1);
    terms.push_back(column_reprs[i]);
    for (const auto& value : occurrences) {
      if (value == kNoneS) {
        terms.push_back(kw_rows[kNoneSRow]);
      } else {
        int idx = keyword_index(value);
        if (idx < 0) throw ShapeMismatch("schema-state value is not a keyword: " + value);
        terms.push_back(kw_rows[static_cast<std::size_t>(idx)]);
      }
    }
    out.push_back(g.tanh(g.matvec(w1, g.add_many(terms))));
  }
  return out;
}

std::vector<Var> rgnn_propagate(Graph& g, std::span<const Var> schema_init,
                                const SchemaGraph& graph, const RgnnEdgeVars& edges) {
  if (schema_init.size() != graph.node_count) {
    throw GraphMismatch("rgnn_propagate: node count disagreement");
  }
  std::vector<Var> out;
  out.reserve(schema_init.size());
  for (std::size_t i = 0; i < schema_init.size(); ++i) {
    if (graph.node_isolated(i)) {
      out.push_back(schema_init[i]);  // empty sums: pass through bitwise
      continue;
    }
    std::vector<Var> out_msgs, in_msgs;
    for (EdgeType e : {EdgeType::FK, EdgeType::FKT}) {
      Var z_out = e == EdgeType::FK ? edges.z_out_fk : edges.z_out_fkt;
      Var z_in = e == EdgeType::FK ? edges.z_in_fk : edges.z_in_fkt;
      for (auto j : graph.out_neighbors(i, e)) {
        out_msgs.push_back(g.matvec(edges.w_out, g.mul(z_out, schema_init[j])));
      }
      for (auto j : graph.in_neighbors(i, e)) {
        in_msgs.push_back(g.matvec(edges.w_in, g.mul(z_in, schema_init[j])));
      }
    }
    Var result = schema_init[i];
    if (!out_msgs.empty()) result = g.add_scaled(result, g.add_many(out_msgs), 0.5);
    if (!in_msgs.empty()) result = g.add_scaled(result, g.add_many(in_msgs), 0.5);
    out.push_back(result);
  }
  return out;
}

std::vector<Var> encode_sql_states(Graph& g, std::span<const Var> kw_rows,
                                   const InteractionStates& states, const Schema& schema,
                                   std::span<const Var> column_space_reprs, Var none_k, Var w2) {
  std::vector<Var> out;
  out.reserve(kKeywordCount);
  for (std::size_t j = 0; j < kKeywordCount; ++j) {
    const auto& values = states.sql_states.at(std::string(kKeywordVocabulary[j]));
    std::vector<Var> terms;
    terms.push_back(kw_rows[j]);
    for (const auto& value : values) {  // std::set iterates sorted: order-stable sums
      if (value == kNoneK) {
        terms.push_back(none_k);
      } else {
        int idx = schema.column_index(value);
        if (idx < 0) throw ShapeMismatch("sql-state value is not a schema column: " + value);
        terms.push_back(column_space_reprs[static_cast<std::size_t>(idx)]);
      }
    }
    out.push_back(g.tanh(g.matvec(w2, g.add_many(terms))));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tensor-level wrappers

namespace {

std::vector<Var> input_rows(Graph& g, const Tensor& matrix) {
  std::vector<Var> rows;
  rows.reserve(matrix.rows());
  for (std::size_t r = 0; r < matrix.rows(); ++r) rows.push_back(g.input(matrix.row(r)));
  return rows;
}

Tensor rows_to_tensor(const Graph& g, std::span<const Var> rows) {
  if (rows.empty()) return Tensor();
  std::size_t d = g.value(rows[0]).size();
  Tensor out({rows.size(), d});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto v = g.value(rows[r]);
    std::copy(v.begin(), v.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

Tensor encode_schema_states(const Tensor& column_reprs, const InteractionStates& states,
                            const Schema& schema, const Tensor& kw_emb, const Tensor& w1) {
  Graph g;
  auto cols = input_rows(g, column_reprs);
  auto kws = input_rows(g, kw_emb);
  auto out = encode_schema_states(g, cols, states, schema, g.input(w1), kws);
  return rows_to_tensor(g, out);
}

Tensor rgnn_propagate(const Tensor& schema_init, const SchemaGraph& graph,
                      const EdgeParams& edges) {
  Graph g;
  auto rows = input_rows(g, schema_init);
  RgnnEdgeVars vars{g.input(edges.w_out),    g.input(edges.w_in),
                    g.input(edges.z_out_fk), g.input(edges.z_in_fk),
                    g.input(edges.z_out_fkt), g.input(edges.z_in_fkt)};
  auto out = rgnn_propagate(g, rows, graph, vars);
  return rows_to_tensor(g, out);
}

Tensor encode_sql_states(const Tensor& kw_emb, const InteractionStates& states,
                         const Schema& schema, const Tensor& column_space_reprs,
                         const Tensor& none_k, const Tensor& w2) {
  Graph g;
  auto kws = input_rows(g, kw_emb);
  auto cols = input_rows(g, column_space_reprs);
  auto out = encode_sql_states(g, kws, states, schema, cols, g.input(none_k), g.input(w2));
  return rows_to_tensor(g, out);
}

}  // namespace sqltrack
