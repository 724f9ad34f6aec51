#ifndef SQLTRACK_MODEL_HPP_
#define SQLTRACK_MODEL_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sqltrack/decoder.hpp"
#include "sqltrack/embedder.hpp"
#include "sqltrack/state_encoders.hpp"
#include "sqltrack/state_tracker.hpp"
#include "sqltrack/utterance_encoder.hpp"

namespace sqltrack {

struct ModelConfig {
  std::size_t d = 16;
  std::size_t heads = 3;
  double lambda = 0.01;  // diversity regularization weight
  bool no_schema_states = false;
  bool no_sql_states = false;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

// The full parser: embedder, state tracking and encoding, history-aware
// utterance encoder with schema linking, and the copy decoder.
class Model {
 public:
  Model(ParamStore& store, std::vector<std::string> vocab, ModelConfig config);
  static Model from_store(ParamStore& store);

  const ModelConfig& config() const { return config_; }
  const Embedder& embedder() const { return embedder_; }
  ParamStore& store() { return *store_; }

  struct TurnReprs {
    DecoderInputs dec;
    std::vector<std::vector<Var>> utt_alphas;
    std::vector<std::vector<Var>> link_alphas;
    InteractionStates states;
    // Ablation instrumentation: the representations actually fed
    // downstream next to the raw embedder outputs they replace.
    std::vector<Var> raw_column_reprs;
    std::vector<Var> raw_kw_reprs;
    bool used_schema_states = false;
    bool used_sql_states = false;
  };

  // Encodes one turn. utterances covers turns 1..t with the current turn
  // last; prev_query is the previous turn's normalized token stream
  // (nullptr at turn 1).
  TurnReprs encode_turn(Graph& g, const Schema& schema, const SchemaGraph& sgraph,
                        std::span<const std::vector<std::string>> utterances,
                        const std::vector<SqlToken>* prev_query);

  struct TeacherForced {
    std::vector<Var> ce_terms;  // -log p(gold) per position, EOS included
    std::size_t correct = 0;
    std::size_t total = 0;
  };
  TeacherForced teacher_forced(Graph& g, const TurnReprs& reprs, const Schema& schema,
                               std::span<const SqlToken> gold);

  DecodeResult decode(Graph& g, const TurnReprs& reprs, const Schema& schema,
                      std::size_t max_len);

  struct InteractionLoss {
    Var loss;
    double loss_value = 0.0;
    double ce_mean = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
  };
  // Teacher-forced loss over a whole interaction: mean token cross
  // entropy plus the diversity penalties of both attention sites. The
  // tracker consumes gold previous queries.
  InteractionLoss interaction_loss(Graph& g, const Schema& schema, const SchemaGraph& sgraph,
                                   std::span<const std::vector<std::string>> turn_tokens,
                                   std::span<const std::vector<SqlToken>> gold_queries);

 private:
  Model() = default;

  ParamStore* store_ = nullptr;
  ModelConfig config_;
  Embedder embedder_;
  StateEncoderParams states_;
  UtteranceEncoderParams utt_;
  DecoderParams dec_;
};

}  // namespace sqltrack

#endif  // SQLTRACK_MODEL_HPP_
