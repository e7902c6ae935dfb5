#pragma once

#include <cstdint>
#include <string>

#include "dfd/models/batch.hpp"
#include "dfd/models/config.hpp"
#include "dfd/models/layers.hpp"

namespace dfd::models {

// Gate layout of the LSTM projections: columns [i | f | g | o], each hidden
// wide. Wx [E × 4H], Wh [H × 4H], b [4H].
template <typename T>
struct LstmParams {
  num::Var<T> wx, wh, b;
};

// GRU: Wx [E × 3H] with columns [z | r | candidate], Uzr [H × 2H] for the
// two gates, Uh [H × H] applied to r∘h, b [3H].
template <typename T>
struct GruParams {
  num::Var<T> wx, uzr, uh, b;
};

template <typename T>
struct LstmState {
  num::Var<T> h, c;
};

// One step over a batch of inputs x [B × E]:
//   i, f, o = σ(·), g = tanh(·), c' = f∘c + i∘g, h' = o∘tanh(c')
template <typename T>
LstmState<T> lstm_cell_step(const num::Var<T>& x, const LstmState<T>& state, const LstmParams<T>& p);

// z, r = σ(·), h̃ = tanh(Wx + U(r∘h)), h' = (1−z)∘h̃ + z∘h
template <typename T>
num::Var<T> gru_cell_step(const num::Var<T>& x, const num::Var<T>& h, const GruParams<T>& p);

// Parameter names: "embedding", "fwd.*" and (bidirectional) "bwd.*" cell
// weights, "dense.W/b", "out.W/b". Recurrent weights and embeddings are
// uniform in ±0.08 and ±0.05, dense layers normal(0, 0.05), biases zero.
num::ParameterSet<float> init_rnn(const RnnConfig& cfg, std::uint64_t seed);

// Final hidden state of one direction over the batch. The backward
// direction reads each example's real tokens last to first. Padding steps
// leave the state untouched.
template <typename T>
num::Var<T> rnn_encode_direction(num::Tape<T>& tape, const RnnConfig& cfg, num::ParameterSet<T>& p,
                                 const std::string& prefix, const num::Var<T>& embedded,
                                 const Batch& batch, bool reverse);

// Class probabilities [B × classes].
template <typename T>
num::Var<T> rnn_forward(num::Tape<T>& tape, const RnnConfig& cfg, num::ParameterSet<T>& p,
                        const Batch& batch, const ForwardOptions& opt = {});

}  // namespace dfd::models
