#include "sqltrack/utterance_encoder.hpp"

namespace sqltrack {

UtteranceEncoderParams UtteranceEncoderParams::create(ParamStore& store, std::size_t d,
                                                      std::size_t heads,
                                                      const std::string& prefix) {
  if (d % 2 != 0) throw ShapeMismatch("hidden dimension must be even for the BiLSTM halves");
  UtteranceEncoderParams p;
  p.heads = heads;
  for (std::size_t k = 0; k < heads; ++k) {
    p.a_u.push_back(store.add_uniform(prefix + ".a_u." + std::to_string(k), {d}));
  }
  for (std::size_t k = 0; k < heads; ++k) {
    p.a_s.push_back(store.add_uniform(prefix + ".a_s." + std::to_string(k), {d}));
  }
  for (std::size_t k = 0; k < heads; ++k) {
    p.b_s.push_back(store.add_uniform(prefix + ".b_s." + std::to_string(k), {d}));
  }
  p.history_fw = LstmParams::create(store, prefix + ".hist.fw", 2 * d, d / 2);
  p.history_bw = LstmParams::create(store, prefix + ".hist.bw", 2 * d, d / 2);
  p.link_fw = LstmParams::create(store, prefix + ".link.fw", 2 * d, d / 2);
  p.link_bw = LstmParams::create(store, prefix + ".link.bw", 2 * d, d / 2);
  return p;
}

UtteranceEncoderParams UtteranceEncoderParams::find(const ParamStore& store, std::size_t d,
                                                    std::size_t heads,
                                                    const std::string& prefix) {
  UtteranceEncoderParams p;
  p.heads = heads;
  for (std::size_t k = 0; k < heads; ++k) {
    p.a_u.push_back(store.find(prefix + ".a_u." + std::to_string(k)));
    p.a_s.push_back(store.find(prefix + ".a_s." + std::to_string(k)));
    p.b_s.push_back(store.find(prefix + ".b_s." + std::to_string(k)));
  }
  p.history_fw = LstmParams::find(store, prefix + ".hist.fw", 2 * d, d / 2);
  p.history_bw = LstmParams::find(store, prefix + ".hist.bw", 2 * d, d / 2);
  p.link_fw = LstmParams::find(store, prefix + ".link.fw", 2 * d, d / 2);
  p.link_bw = LstmParams::find(store, prefix + ".link.bw", 2 * d, d / 2);
  return p;
}

AttentionCollect collect_history(Graph& g, std::span<const Var> current,
                                 std::span<const std::vector<Var>> history,
                                 std::span<const Var> a_u_heads) {
  const std::size_t heads = a_u_heads.size();
  AttentionCollect out;
  out.head_alphas.resize(heads);
  if (current.empty()) return out;
  const std::size_t d = g.value(current[0]).size();

  if (history.empty()) {
    for (std::size_t n = 0; n < current.size(); ++n) out.vectors.push_back(g.zeros(d));
    return out;
  }

  for (std::size_t n = 0; n < current.size(); ++n) {
    std::vector<Var> keys(heads);
    for (std::size_t k = 0; k < heads; ++k) keys[k] = g.mul(current[n], a_u_heads[k]);

    std::vector<Var> per_turn;  // h_{m->t}^n for each m
    per_turn.reserve(history.size());
    for (const auto& turn : history) {
      std::vector<Var> head_sums;
      head_sums.reserve(heads);
      for (std::size_t k = 0; k < heads; ++k) {
        std::vector<Var> scores;
        scores.reserve(turn.size());
        for (const auto& token : turn) scores.push_back(g.dot(keys[k], token));
        Var alpha = g.softmax(g.pack(scores));
        out.head_alphas[k].push_back(alpha);
        head_sums.push_back(g.weighted_sum(alpha, turn));
      }
      per_turn.push_back(g.add_many(head_sums));  // sum over heads, not averaged
    }
    out.vectors.push_back(
        g.scale(g.add_many(per_turn), 1.0 / static_cast<double>(history.size())));
  }
  return out;
}

AttentionCollect collect_schema_link(Graph& g, std::span<const Var> utterance,
                                     std::span<const Var> schema_reprs,
                                     std::span<const Var> a_s_heads,
                                     std::span<const Var> b_s_heads) {
  const std::size_t heads = a_s_heads.size();
  AttentionCollect out;
  out.head_alphas.resize(heads);
  if (schema_reprs.empty()) throw ShapeMismatch("link_schema: empty schema");

  for (std::size_t n = 0; n < utterance.size(); ++n) {
    std::vector<Var> head_vecs;
    head_vecs.reserve(heads);
    for (std::size_t k = 0; k < heads; ++k) {
      Var key = g.mul(utterance[n], a_s_heads[k]);
      std::vector<Var> scores;
      scores.reserve(schema_reprs.size());
      for (const auto& col : schema_reprs) scores.push_back(g.dot(key, col));
      Var alpha = g.softmax(g.pack(scores));
      out.head_alphas[k].push_back(alpha);
      head_vecs.push_back(g.mul(b_s_heads[k], g.weighted_sum(alpha, schema_reprs)));
    }
    out.vectors.push_back(g.add_many(head_vecs));
  }
  return out;
}

namespace {

std::vector<Var> params_to_vars(Graph& g, std::span<const std::size_t> ids) {
  std::vector<Var> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(g.param(id));
  return out;
}

std::vector<Var> concat_pairs(Graph& g, std::span<const Var> a, std::span<const Var> b) {
  std::vector<Var> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(g.concat(a[i], b[i]));
  return out;
}

}  // namespace

UtteranceEncodeResult encode_history(Graph& g, std::span<const Var> current,
                                     std::span<const std::vector<Var>> history,
                                     const UtteranceEncoderParams& p) {
  auto collected = collect_history(g, current, history, params_to_vars(g, p.a_u));
  auto inputs = concat_pairs(g, current, collected.vectors);
  UtteranceEncodeResult result;
  result.outputs = bilstm(g, p.history_fw, p.history_bw, inputs);
  result.head_alphas = std::move(collected.head_alphas);
  return result;
}

UtteranceEncodeResult link_schema(Graph& g, std::span<const Var> utterance,
                                  std::span<const Var> schema_reprs,
                                  const UtteranceEncoderParams& p) {
  auto collected = collect_schema_link(g, utterance, schema_reprs, params_to_vars(g, p.a_s),
                                       params_to_vars(g, p.b_s));
  auto inputs = concat_pairs(g, utterance, collected.vectors);
  UtteranceEncodeResult result;
  result.outputs = bilstm(g, p.link_fw, p.link_bw, inputs);
  result.head_alphas = std::move(collected.head_alphas);
  return result;
}

Var attention_diversity_penalty(Graph& g, std::span<const std::vector<Var>> head_alphas) {
  const std::size_t heads = head_alphas.size();
  if (heads < 2 || head_alphas[0].empty()) return g.constant(0.0);
  const std::size_t positions = head_alphas[0].size();
  std::vector<Var> cosines;
  for (std::size_t k1 = 0; k1 < heads; ++k1) {
    for (std::size_t k2 = k1 + 1; k2 < heads; ++k2) {
      for (std::size_t p = 0; p < positions; ++p) {
        Var a = head_alphas[k1][p];
        Var b = head_alphas[k2][p];
        Var denom = g.sqrt(g.mul(g.dot(a, a), g.dot(b, b)));
        cosines.push_back(g.div(g.dot(a, b), denom));
      }
    }
  }
  return g.scale(g.add_many(cosines), 1.0 / static_cast<double>(cosines.size()));
}

double attention_diversity_penalty(const std::vector<Tensor>& head_alphas) {
  Graph g;
  std::vector<std::vector<Var>> vars(head_alphas.size());
  for (std::size_t k = 0; k < head_alphas.size(); ++k) {
    for (std::size_t r = 0; r < head_alphas[k].rows(); ++r) {
      vars[k].push_back(g.input(head_alphas[k].row(r)));
    }
  }
  return g.scalar(attention_diversity_penalty(g, vars));
}

}  // namespace sqltrack
