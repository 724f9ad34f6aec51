#ifndef SQLTRACK_UTTERANCE_ENCODER_HPP_
#define SQLTRACK_UTTERANCE_ENCODER_HPP_

#include <span>
#include <string>
#include <vector>

#include "sqltrack/autograd.hpp"
#include "sqltrack/nn.hpp"

namespace sqltrack {

// Multi-head attention pieces of the history-aware utterance encoder and
// the schema linking module. Attention distributions are returned per
// head, aligned across heads, for the diversity regularizer and
// diagnostics.

struct UtteranceEncoderParams {
  std::size_t heads = 0;                 // K
  std::vector<std::size_t> a_u;          // utterance head vectors, d each
  std::vector<std::size_t> a_s;          // schema-linking head vectors
  std::vector<std::size_t> b_s;          // schema transform vectors
  LstmParams history_fw, history_bw;     // input 2d, hidden d/2
  LstmParams link_fw, link_bw;           // input 2d, hidden d/2

  static UtteranceEncoderParams create(ParamStore& store, std::size_t d, std::size_t heads,
                                       const std::string& prefix = "utt");
  static UtteranceEncoderParams find(const ParamStore& store, std::size_t d, std::size_t heads,
                                     const std::string& prefix = "utt");
};

struct AttentionCollect {
  std::vector<Var> vectors;                    // one per current token
  std::vector<std::vector<Var>> head_alphas;   // [head][position], aligned across heads
};

// History collection (pre-recurrent stage): per token n,
//   s_m^{nkl} = (h_t^n * a_u^k) . h_m^l,  alpha = softmax over l,
//   h_{m->t}^n = sum_k sum_l alpha h_m^l,  mean over m.
// Empty history yields zero vectors.
AttentionCollect collect_history(Graph& g, std::span<const Var> current,
                                 std::span<const std::vector<Var>> history,
                                 std::span<const Var> a_u_heads);

// Schema linking collection: scores against schema representations, no
// mean, per-head output scaled elementwise by b_s^k.
AttentionCollect collect_schema_link(Graph& g, std::span<const Var> utterance,
                                     std::span<const Var> schema_reprs,
                                     std::span<const Var> a_s_heads,
                                     std::span<const Var> b_s_heads);

struct UtteranceEncodeResult {
  std::vector<Var> outputs;                    // per token, dimension d
  std::vector<std::vector<Var>> head_alphas;
};

// Full stages: collection followed by the bidirectional recurrent layer
// over [token ; collected].
UtteranceEncodeResult encode_history(Graph& g, std::span<const Var> current,
                                     std::span<const std::vector<Var>> history,
                                     const UtteranceEncoderParams& p);
UtteranceEncodeResult link_schema(Graph& g, std::span<const Var> utterance,
                                  std::span<const Var> schema_reprs,
                                  const UtteranceEncoderParams& p);

// Mean over head pairs and aligned positions of the cosine similarity
// between attention distributions; zero for K < 2 or no positions.
Var attention_diversity_penalty(Graph& g, std::span<const std::vector<Var>> head_alphas);

// Tensor-level variant for tests: alphas[k] is a matrix whose rows are
// the k-th head's distributions.
double attention_diversity_penalty(const std::vector<Tensor>& head_alphas);

}  // namespace sqltrack

#endif  // SQLTRACK_UTTERANCE_ENCODER_HPP_
