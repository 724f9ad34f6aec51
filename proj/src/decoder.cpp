#include "sqltrack/decoder.hpp"

#include <algorithm>

namespace sqltrack {

DecoderParams DecoderParams::create(ParamStore& store, std::size_t d, const std::string& prefix) {
  DecoderParams p;
  p.cell = LstmParams::create(store, prefix + ".cell", 2 * d, d);
  p.w_col = store.add_uniform(prefix + ".w_col", {d, d});
  p.w_copy = store.add_uniform(prefix + ".w_copy", {2 * d});
  p.bos = store.add_uniform(prefix + ".bos", {d});
  p.value_emb = store.add_uniform(prefix + ".value", {d});
  p.eos_emb = store.add_uniform(prefix + ".eos", {d});
  return p;
}

DecoderParams DecoderParams::find(const ParamStore& store, std::size_t d,
                                  const std::string& prefix) {
  DecoderParams p;
  p.cell = LstmParams::find(store, prefix + ".cell", 2 * d, d);
  p.w_col = store.find(prefix + ".w_col");
  p.w_copy = store.find(prefix + ".w_copy");
  p.bos = store.find(prefix + ".bos");
  p.value_emb = store.find(prefix + ".value");
  p.eos_emb = store.find(prefix + ".eos");
  return p;
}

SqlToken GenVocab::token_at(std::size_t index, const Schema& schema) const {
  if (index < kKeywordCount) return keyword_token(kKeywordVocabulary[index]);
  if (index < column_base() + column_count) {
    return column_token(schema.columns()[index - column_base()]);
  }
  if (index == value_index()) return value_token();
  throw std::out_of_range("candidate index has no token surface");
}

std::size_t GenVocab::index_of(const SqlToken& token, const Schema& schema) const {
  switch (token.kind) {
    case TokenKind::Keyword: {
      int idx = keyword_index(token.text);
      if (idx < 0) throw std::out_of_range("unknown keyword: " + token.text);
      return static_cast<std::size_t>(idx);
    }
    case TokenKind::Column: {
      int idx = schema.column_index(token.text);
      if (idx < 0) throw std::out_of_range("column not in schema: " + token.text);
      return column_base() + static_cast<std::size_t>(idx);
    }
    default:
      return value_index();
  }
}

Var candidate_input_repr(const DecoderInputs& in, std::size_t gen_index) {
  if (gen_index < kKeywordCount) return in.kw_reprs[gen_index];
  if (gen_index < in.vocab.column_base() + in.vocab.column_count) {
    return in.col_reprs[gen_index - in.vocab.column_base()];
  }
  if (gen_index == in.vocab.value_index()) return in.value_repr;
  return in.eos_repr;  // never fed in practice; EOS terminates decoding
}

DecoderScores score_candidates(Graph& g, const DecoderParams& p, const DecoderInputs& in,
                               Var hidden, Var context) {
  DecoderScores out;
  std::vector<Var> gen;
  gen.reserve(in.vocab.size());
  for (const auto& kw : in.kw_reprs) gen.push_back(g.dot(hidden, kw));
  for (const auto& col : in.col_score_reprs) gen.push_back(g.dot(hidden, col));
  gen.push_back(g.dot(hidden, in.value_repr));
  gen.push_back(g.dot(hidden, in.eos_repr));
  out.gen_scores = g.pack(gen);
  out.gen_dist = g.softmax(out.gen_scores);

  if (in.prev_reprs.empty()) {
    out.mixed = out.gen_dist;  // p_copy forced to 0 at turn 1
    return out;
  }

  std::vector<Var> copy;
  copy.reserve(in.prev_reprs.size());
  for (const auto& r : in.prev_reprs) copy.push_back(g.dot(hidden, r));
  out.copy_scores = g.pack(copy);
  out.copy_dist = g.softmax(out.copy_scores);
  out.p_copy = g.sigmoid(g.dot(g.param(p.w_copy), g.concat(hidden, context)));

  Var copy_on_gen = g.scatter_sum(out.copy_dist, in.prev_to_gen, in.vocab.size());
  Var keep = g.add_scaled(g.constant(1.0), out.p_copy, -1.0);
  out.mixed = g.add(g.scale_by(keep, out.gen_dist), g.scale_by(out.p_copy, copy_on_gen));
  return out;
}

DecoderStepResult decode_step(Graph& g, const DecoderParams& p, const DecoderInputs& in,
                              Var prev_token_repr, const LstmState& prev_state,
                              Var prev_context) {
  DecoderStepResult step;
  Var x = g.concat(prev_token_repr, prev_context);
  step.state = lstm_cell(g, p.cell, x, prev_state);
  Var hidden = step.state.h;

  // Single-head dot-product attention over the utterance.
  {
    std::vector<Var> scores;
    scores.reserve(in.utterance.size());
    for (const auto& u : in.utterance) scores.push_back(g.dot(hidden, u));
    Var alpha = g.softmax(g.pack(scores));
    step.context = g.weighted_sum(alpha, in.utterance);
  }

  step.scores = score_candidates(g, p, in, hidden, step.context);
  return step;
}

DecodeResult decode_greedy(const StepProvider& provider, const GenVocab& vocab,
                           const Schema& schema, std::size_t max_len) {
  DecodeResult result;
  std::size_t prev = SIZE_MAX;
  for (std::size_t step = 0; step < max_len; ++step) {
    StepDistribution dist = provider(step, prev);
    std::size_t chosen = static_cast<std::size_t>(
        std::max_element(dist.probs.begin(), dist.probs.end()) - dist.probs.begin());
    result.steps.push_back({chosen, dist.p_copy});
    if (chosen == vocab.eos_index()) {
      result.terminated = true;
      break;
    }
    result.tokens.push_back(vocab.token_at(chosen, schema));
    prev = chosen;
  }
  return result;
}

}  // namespace sqltrack
