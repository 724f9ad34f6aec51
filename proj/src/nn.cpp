#include "sqltrack/nn.hpp"

namespace sqltrack {

namespace {
const char* kGateNames[4] = {"i", "f", "o", "g"};
}

LstmParams LstmParams::create(ParamStore& store, const std::string& prefix, std::size_t input,
                              std::size_t hidden) {
  LstmParams p;
  p.input = input;
  p.hidden = hidden;
  for (int g = 0; g < 4; ++g) {
    p.w[g] = store.add_uniform(prefix + ".w" + kGateNames[g], {hidden, input});
    p.u[g] = store.add_uniform(prefix + ".u" + kGateNames[g], {hidden, hidden});
    p.b[g] = store.add_uniform(prefix + ".b" + kGateNames[g], {hidden});
  }
  return p;
}

LstmParams LstmParams::find(const ParamStore& store, const std::string& prefix, std::size_t input,
                            std::size_t hidden) {
  LstmParams p;
  p.input = input;
  p.hidden = hidden;
  for (int g = 0; g < 4; ++g) {
    p.w[g] = store.find(prefix + ".w" + kGateNames[g]);
    p.u[g] = store.find(prefix + ".u" + kGateNames[g]);
    p.b[g] = store.find(prefix + ".b" + kGateNames[g]);
  }
  return p;
}

LstmState lstm_initial(Graph& g, std::size_t hidden) {
  return {g.zeros(hidden), g.zeros(hidden)};
}

LstmState lstm_cell(Graph& g, const LstmParams& p, Var x, const LstmState& prev) {
  auto gate = [&](int i) {
    return g.add(g.add(g.matvec(g.param(p.w[i]), x), g.matvec(g.param(p.u[i]), prev.h)),
                 g.param(p.b[i]));
  };
  Var in_gate = g.sigmoid(gate(0));
  Var forget_gate = g.sigmoid(gate(1));
  Var out_gate = g.sigmoid(gate(2));
  Var cell_update = g.tanh(gate(3));
  Var c = g.add(g.mul(forget_gate, prev.c), g.mul(in_gate, cell_update));
  Var h = g.mul(out_gate, g.tanh(c));
  return {h, c};
}

std::vector<Var> bilstm(Graph& g, const LstmParams& fw, const LstmParams& bw,
                        std::span<const Var> inputs) {
  const std::size_t n = inputs.size();
  std::vector<Var> fwd(n), bwd(n);
  LstmState state = lstm_initial(g, fw.hidden);
  for (std::size_t i = 0; i < n; ++i) {
    state = lstm_cell(g, fw, inputs[i], state);
    fwd[i] = state.h;
  }
  state = lstm_initial(g, bw.hidden);
  for (std::size_t i = n; i-- > 0;) {
    state = lstm_cell(g, bw, inputs[i], state);
    bwd[i] = state.h;
  }
  std::vector<Var> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = g.concat(fwd[i], bwd[i]);
  return out;
}

}  // namespace sqltrack
