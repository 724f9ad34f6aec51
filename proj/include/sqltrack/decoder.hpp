#ifndef SQLTRACK_DECODER_HPP_
#define SQLTRACK_DECODER_HPP_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqltrack/autograd.hpp"
#include "sqltrack/nn.hpp"
#include "sqltrack/sql_model.hpp"

namespace sqltrack {

struct DecoderParams {
  LstmParams cell;        // input 2d -> hidden d
  std::size_t w_col;      // d x d projection for column scores
  std::size_t w_copy;     // 2d gate vector
  std::size_t bos;        // d
  std::size_t value_emb;  // d
  std::size_t eos_emb;    // d

  static DecoderParams create(ParamStore& store, std::size_t d,
                              const std::string& prefix = "dec");
  static DecoderParams find(const ParamStore& store, std::size_t d,
                            const std::string& prefix = "dec");
};

// Candidate layout over one schema: keywords, then columns in schema
// order, then the value placeholder, then EOS.
struct GenVocab {
  std::size_t column_count = 0;

  std::size_t keyword_base() const { return 0; }
  std::size_t column_base() const { return kKeywordCount; }
  std::size_t value_index() const { return kKeywordCount + column_count; }
  std::size_t eos_index() const { return value_index() + 1; }
  std::size_t size() const { return eos_index() + 1; }

  SqlToken token_at(std::size_t index, const Schema& schema) const;
  std::size_t index_of(const SqlToken& token, const Schema& schema) const;
};

// Per-turn representations the decoder consumes; built by the model once
// per turn. Column score representations carry the W_col projection so
// scoring is a plain dot product per step.
struct DecoderInputs {
  GenVocab vocab;
  std::vector<Var> utterance;        // final utterance rows
  std::vector<Var> kw_reprs;         // N(k): SQL-state reprs, or raw keyword embeddings
  std::vector<Var> col_reprs;        // N(c): schema-state reprs, or raw column reprs
  std::vector<Var> col_score_reprs;  // W_col * col_reprs
  Var value_repr;
  Var eos_repr;
  Var bos_repr;
  std::vector<Var> prev_reprs;             // previous-query token representations
  std::vector<std::uint32_t> prev_to_gen;  // previous position -> candidate index
};

struct DecoderScores {
  Var gen_scores;
  Var gen_dist;
  Var copy_scores;  // invalid at turn 1
  Var copy_dist;    // invalid at turn 1
  Var p_copy;       // invalid at turn 1 (forced to 0)
  Var mixed;        // final distribution over candidate indices
};

struct DecoderStepResult {
  LstmState state;
  Var context;
  DecoderScores scores;
};

// Scoring layer on its own: direct similarities of a hidden state against
// the candidate representations, the copy distribution and the gate mix.
DecoderScores score_candidates(Graph& g, const DecoderParams& p, const DecoderInputs& in,
                               Var hidden, Var context);

// One decoder step. The cell consumes [prev_token_repr ; previous
// context]; keyword and column scores are direct similarities against the
// state representations; the copy gate mixes a distribution over
// previous-query tokens back onto candidate surfaces.
DecoderStepResult decode_step(Graph& g, const DecoderParams& p, const DecoderInputs& in,
                              Var prev_token_repr, const LstmState& prev_state,
                              Var prev_context);

// Input representation of the candidate chosen at the previous step.
Var candidate_input_repr(const DecoderInputs& in, std::size_t gen_index);

struct DecodeResult {
  std::vector<SqlToken> tokens;
  bool terminated = false;
  struct StepInfo {
    std::size_t chosen;
    double p_copy;
  };
  std::vector<StepInfo> steps;
};

// The greedy loop is written against an abstract step provider so forced
// sequences are testable without a trained model. The provider returns
// the mixed distribution and the copy gate for a step; prev_index is
// SIZE_MAX on the first step.
struct StepDistribution {
  std::vector<double> probs;
  double p_copy = 0.0;
};
using StepProvider = std::function<StepDistribution(std::size_t step, std::size_t prev_index)>;

DecodeResult decode_greedy(const StepProvider& provider, const GenVocab& vocab,
                           const Schema& schema, std::size_t max_len);

}  // namespace sqltrack

#endif  // SQLTRACK_DECODER_HPP_
