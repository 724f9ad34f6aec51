#ifndef SQLTRACK_STATE_ENCODERS_HPP_
#define SQLTRACK_STATE_ENCODERS_HPP_

#include <span>
#include <string>
#include <vector>

#include "sqltrack/autograd.hpp"
#include "sqltrack/schema_graph.hpp"
#include "sqltrack/state_tracker.hpp"

namespace sqltrack {

struct GraphMismatch : std::runtime_error {
  explicit GraphMismatch(const std::string& what) : std::runtime_error(what) {}
};

// Trainable parameters of the two state encoders. Keyword embeddings have
// one row per vocabulary member plus a trailing NONE_S sentinel row; the
// NONE_K sentinel lives in column-representation space as its own vector.
struct StateEncoderParams {
  std::size_t kw_emb;     // (kKeywordCount + 1) x d
  std::size_t w1;         // d x d
  std::size_t w2;         // d x d
  std::size_t none_k;     // d
  std::size_t w_out;      // d x d
  std::size_t w_in;       // d x d
  std::size_t z_out_fk, z_in_fk, z_out_fkt, z_in_fkt;  // d each

  static StateEncoderParams create(ParamStore& store, std::size_t d,
                                   const std::string& prefix = "states");
  static StateEncoderParams find(const ParamStore& store, const std::string& prefix = "states");
};

inline constexpr std::size_t kNoneSRow = kKeywordCount;

// Schema-state initialization: h_s^i = tanh(W1 (h_c^i + sum of value
// occurrence embeddings)). Duplicate occurrences contribute multiply.
std::vector<Var> encode_schema_states(Graph& g, std::span<const Var> column_reprs,
                                      const InteractionStates& states, const Schema& schema,
                                      Var w1, std::span<const Var> kw_rows);

// One propagation round over FK/FKT edges:
//   h_out^i = sum_e sum_{j in out(i,e)} W_out (z_out^e * h_s^j)
//   h_in^i analogous; result = h_s^i + 0.5 h_out^i + 0.5 h_in^i.
// Isolated nodes pass through unchanged.
struct RgnnEdgeVars {
  Var w_out, w_in;
  Var z_out_fk, z_in_fk, z_out_fkt, z_in_fkt;
};
std::vector<Var> rgnn_propagate(Graph& g, std::span<const Var> schema_init,
                                const SchemaGraph& graph, const RgnnEdgeVars& edges);

// SQL-state encoder: h~_k^j = tanh(W2 (h_k^j + sum over the deduplicated
// value columns of their representations)); {NONE_K} uses none_k.
std::vector<Var> encode_sql_states(Graph& g, std::span<const Var> kw_rows,
                                   const InteractionStates& states, const Schema& schema,
                                   std::span<const Var> column_space_reprs, Var none_k, Var w2);

// Tensor-level entry points used by tests and oracles.
Tensor encode_schema_states(const Tensor& column_reprs, const InteractionStates& states,
                            const Schema& schema, const Tensor& kw_emb, const Tensor& w1);

struct EdgeParams {
  Tensor w_out, w_in;
  Tensor z_out_fk, z_in_fk, z_out_fkt, z_in_fkt;
};
Tensor rgnn_propagate(const Tensor& schema_init, const SchemaGraph& graph,
                      const EdgeParams& edges);

Tensor encode_sql_states(const Tensor& kw_emb, const InteractionStates& states,
                         const Schema& schema, const Tensor& column_space_reprs,
                         const Tensor& none_k, const Tensor& w2);

}  // namespace sqltrack

#endif  // SQLTRACK_STATE_ENCODERS_HPP_
