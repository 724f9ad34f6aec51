#ifndef SQLTRACK_NN_HPP_
#define SQLTRACK_NN_HPP_

#include <span>
#include <string>
#include <vector>

#include "sqltrack/autograd.hpp"

namespace sqltrack {

// LSTM-gated cell parameters. Four gates, each with input weights,
// recurrent weights and a bias.
struct LstmParams {
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::size_t w[4];  // gate weights, hidden x input (order: i, f, o, g)
  std::size_t u[4];  // recurrent weights, hidden x hidden
  std::size_t b[4];  // biases

  static LstmParams create(ParamStore& store, const std::string& prefix, std::size_t input,
                           std::size_t hidden);
  static LstmParams find(const ParamStore& store, const std::string& prefix, std::size_t input,
                         std::size_t hidden);
};

struct LstmState {
  Var h;
  Var c;
};

LstmState lstm_initial(Graph& g, std::size_t hidden);
LstmState lstm_cell(Graph& g, const LstmParams& p, Var x, const LstmState& prev);

// Bidirectional run over a token sequence; per-token output is
// [forward_h ; backward_h].
std::vector<Var> bilstm(Graph& g, const LstmParams& fw, const LstmParams& bw,
                        std::span<const Var> inputs);

}  // namespace sqltrack

#endif  // SQLTRACK_NN_HPP_
