#include "sqltrack/model.hpp"

#include <json.hpp>

namespace sqltrack {

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["d"] = d;
  j["heads"] = heads;
  j["lambda"] = lambda;
  j["no_schema_states"] = no_schema_states;
  j["no_sql_states"] = no_sql_states;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  ModelConfig c;
  c.d = j.at("d").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.lambda = j.at("lambda").get<double>();
  c.no_schema_states = j.at("no_schema_states").get<bool>();
  c.no_sql_states = j.at("no_sql_states").get<bool>();
  return c;
}

Model::Model(ParamStore& store, std::vector<std::string> vocab, ModelConfig config)
    : store_(&store),
      config_(config),
      embedder_(store, std::move(vocab), config.d),
      states_(StateEncoderParams::create(store, config.d)),
      utt_(UtteranceEncoderParams::create(store, config.d, config.heads)),
      dec_(DecoderParams::create(store, config.d)) {
  store.set_blob("model.config", config_.to_json());
}

Model Model::from_store(ParamStore& store) {
  const std::string* blob = store.blob("model.config");
  if (blob == nullptr) throw std::runtime_error("checkpoint lacks a model config record");
  ModelConfig config = ModelConfig::from_json(*blob);
  Model m;
  m.store_ = &store;
  m.config_ = config;
  m.embedder_ = Embedder::from_store(store);
  m.states_ = StateEncoderParams::find(store);
  m.utt_ = UtteranceEncoderParams::find(store, config.d, config.heads);
  m.dec_ = DecoderParams::find(store, config.d);
  return m;
}

Model::TurnReprs Model::encode_turn(Graph& g, const Schema& schema, const SchemaGraph& sgraph,
                                    std::span<const std::vector<std::string>> utterances,
                                    const std::vector<SqlToken>* prev_query) {
  if (utterances.empty()) throw ShapeMismatch("encode_turn: at least one utterance required");
  TurnReprs reprs;

  // Interaction states from the previous query (all sentinel at turn 1).
  reprs.states = prev_query == nullptr ? update_states(schema)
                                       : update_states(*prev_query, schema);

  // Raw embeddings.
  std::vector<Var> column_raw;
  column_raw.reserve(schema.column_count());
  for (std::size_t i = 0; i < schema.column_count(); ++i) {
    column_raw.push_back(embedder_.embed_column(g, schema, i));
  }
  std::vector<Var> kw_rows;
  kw_rows.reserve(kKeywordCount + 1);
  for (std::size_t j = 0; j <= kKeywordCount; ++j) {
    kw_rows.push_back(g.param_row(states_.kw_emb, j));
  }
  reprs.raw_column_reprs = column_raw;
  reprs.raw_kw_reprs = std::vector<Var>(kw_rows.begin(), kw_rows.begin() + kKeywordCount);

  // State encoders, honoring the ablation flags.
  std::vector<Var> column_final;    // fed to schema linking, decoder scores and copy
  std::vector<Var> column_for_sql;  // column-space inputs of the SQL-state encoder
  if (config_.no_schema_states) {
    column_final = column_raw;
    column_for_sql = column_raw;
  } else {
    auto schema_init = encode_schema_states(g, column_raw, reprs.states, schema,
                                            g.param(states_.w1), kw_rows);
    RgnnEdgeVars edges{g.param(states_.w_out),    g.param(states_.w_in),
                       g.param(states_.z_out_fk), g.param(states_.z_in_fk),
                       g.param(states_.z_out_fkt), g.param(states_.z_in_fkt)};
    column_final = rgnn_propagate(g, schema_init, sgraph, edges);
    column_for_sql = schema_init;  // pre-propagation representations
    reprs.used_schema_states = true;
  }

  std::vector<Var> kw_final;
  if (config_.no_sql_states) {
    kw_final = reprs.raw_kw_reprs;
  } else {
    kw_final = encode_sql_states(g, kw_rows, reprs.states, schema, column_for_sql,
                                 g.param(states_.none_k), g.param(states_.w2));
    reprs.used_sql_states = true;
  }

  // Utterance pipeline: history attention, then schema linking.
  std::vector<std::vector<Var>> history;
  for (std::size_t t = 0; t + 1 < utterances.size(); ++t) {
    history.push_back(embedder_.embed_utterance(g, utterances[t]));
  }
  auto current = embedder_.embed_utterance(g, utterances.back());
  auto encoded = encode_history(g, current, history, utt_);
  auto linked = link_schema(g, encoded.outputs, column_final, utt_);
  reprs.utt_alphas = std::move(encoded.head_alphas);
  reprs.link_alphas = std::move(linked.head_alphas);

  // Decoder inputs.
  DecoderInputs& dec = reprs.dec;
  dec.vocab.column_count = schema.column_count();
  dec.utterance = std::move(linked.outputs);
  dec.kw_reprs = kw_final;
  dec.col_reprs = column_final;
  dec.col_score_reprs.reserve(column_final.size());
  Var w_col = g.param(dec_.w_col);
  for (const auto& col : column_final) dec.col_score_reprs.push_back(g.matvec(w_col, col));
  dec.value_repr = g.param(dec_.value_emb);
  dec.eos_repr = g.param(dec_.eos_emb);
  dec.bos_repr = g.param(dec_.bos);
  if (prev_query != nullptr) {
    for (const auto& token : *prev_query) {
      std::size_t idx = dec.vocab.index_of(token, schema);
      dec.prev_to_gen.push_back(static_cast<std::uint32_t>(idx));
      dec.prev_reprs.push_back(candidate_input_repr(dec, idx));
    }
  }
  return reprs;
}

Model::TeacherForced Model::teacher_forced(Graph& g, const TurnReprs& reprs,
                                           const Schema& schema,
                                           std::span<const SqlToken> gold) {
  TeacherForced out;
  const DecoderInputs& dec = reprs.dec;
  LstmState state = lstm_initial(g, config_.d);
  Var context = g.zeros(config_.d);
  Var prev_repr = dec.bos_repr;
  for (std::size_t pos = 0; pos <= gold.size(); ++pos) {
    DecoderStepResult step = decode_step(g, dec_, dec, prev_repr, state, context);
    std::size_t target = pos < gold.size() ? dec.vocab.index_of(gold[pos], schema)
                                           : dec.vocab.eos_index();
    out.ce_terms.push_back(g.scale(g.log(g.pick(step.scores.mixed, target)), -1.0));
    auto probs = g.value(step.scores.mixed);
    std::size_t argmax = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
      if (probs[i] > probs[argmax]) argmax = i;
    }
    out.correct += argmax == target ? 1 : 0;
    ++out.total;
    state = step.state;
    context = step.context;
    if (pos < gold.size()) prev_repr = candidate_input_repr(dec, target);
  }
  return out;
}

DecodeResult Model::decode(Graph& g, const TurnReprs& reprs, const Schema& schema,
                           std::size_t max_len) {
  const DecoderInputs& dec = reprs.dec;
  LstmState state = lstm_initial(g, config_.d);
  Var context = g.zeros(config_.d);
  auto provider = [&](std::size_t step_index, std::size_t prev_index) -> StepDistribution {
    (void)step_index;
    Var prev_repr = prev_index == SIZE_MAX ? dec.bos_repr : candidate_input_repr(dec, prev_index);
    DecoderStepResult step = decode_step(g, dec_, dec, prev_repr, state, context);
    state = step.state;
    context = step.context;
    StepDistribution dist;
    auto probs = g.value(step.scores.mixed);
    dist.probs.assign(probs.begin(), probs.end());
    dist.p_copy = step.scores.p_copy.valid() ? g.scalar(step.scores.p_copy) : 0.0;
    return dist;
  };
  return decode_greedy(provider, dec.vocab, schema, max_len);
}

Model::InteractionLoss Model::interaction_loss(
    Graph& g, const Schema& schema, const SchemaGraph& sgraph,
    std::span<const std::vector<std::string>> turn_tokens,
    std::span<const std::vector<SqlToken>> gold_queries) {
  if (turn_tokens.size() != gold_queries.size() || turn_tokens.empty()) {
    throw ShapeMismatch("interaction_loss: turn/gold count mismatch");
  }
  InteractionLoss result;
  std::vector<Var> ce_terms;
  std::vector<std::vector<Var>> utt_alphas(config_.heads), link_alphas(config_.heads);
  for (std::size_t t = 0; t < turn_tokens.size(); ++t) {
    std::span<const std::vector<std::string>> history(turn_tokens.data(), t + 1);
    const std::vector<SqlToken>* prev = t == 0 ? nullptr : &gold_queries[t - 1];
    TurnReprs reprs = encode_turn(g, schema, sgraph, history, prev);
    TeacherForced forced = teacher_forced(g, reprs, schema, gold_queries[t]);
    ce_terms.insert(ce_terms.end(), forced.ce_terms.begin(), forced.ce_terms.end());
    result.correct += forced.correct;
    result.total += forced.total;
    for (std::size_t k = 0; k < config_.heads; ++k) {
      utt_alphas[k].insert(utt_alphas[k].end(), reprs.utt_alphas[k].begin(),
                           reprs.utt_alphas[k].end());
      link_alphas[k].insert(link_alphas[k].end(), reprs.link_alphas[k].begin(),
                            reprs.link_alphas[k].end());
    }
  }
  Var ce_mean = g.scale(g.add_many(ce_terms), 1.0 / static_cast<double>(ce_terms.size()));
  Var penalty = g.add(attention_diversity_penalty(g, utt_alphas),
                      attention_diversity_penalty(g, link_alphas));
  result.loss = g.add_scaled(ce_mean, penalty, config_.lambda);
  result.ce_mean = g.scalar(ce_mean);
  result.loss_value = g.scalar(result.loss);
  return result;
}

}  // namespace sqltrack
