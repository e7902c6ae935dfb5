#include "dfd/models/rnn.hpp"

#include <algorithm>

#include "dfd/error.hpp"

namespace dfd::models {
namespace {

using num::Tape;
using num::Tensor;
using num::Var;

template <typename T>
LstmState<T> lstm_step_projected(const Var<T>& xproj, const LstmState<T>& s, const Var<T>& wh) {
  const std::size_t H = s.h.shape()[1];
  auto gates = num::add(xproj, num::matmul(s.h, wh));
  auto i = num::sigmoid(num::slice_cols(gates, 0, H));
  auto f = num::sigmoid(num::slice_cols(gates, H, 2 * H));
  auto g = num::tanh(num::slice_cols(gates, 2 * H, 3 * H));
  auto o = num::sigmoid(num::slice_cols(gates, 3 * H, 4 * H));
  auto c = num::add(num::mul(f, s.c), num::mul(i, g));
  return {num::mul(o, num::tanh(c)), c};
}

template <typename T>
Var<T> gru_step_projected(const Var<T>& xproj, const Var<T>& h, const Var<T>& uzr, const Var<T>& uh) {
  const std::size_t H = h.shape()[1];
  auto zr = num::sigmoid(num::add(num::slice_cols(xproj, 0, 2 * H), num::matmul(h, uzr)));
  auto z = num::slice_cols(zr, 0, H);
  auto r = num::slice_cols(zr, H, 2 * H);
  auto cand = num::tanh(num::add(num::slice_cols(xproj, 2 * H, 3 * H), num::matmul(num::mul(r, h), uh)));
  return num::add(cand, num::mul(z, num::sub(h, cand)));
}

void require_input_width(const num::Shape& x, const num::Shape& w, const char* what) {
  if (x.size() != 2 || w.size() != 2 || x[1] != w[0]) {
    throw ShapeError(std::string(what) + ": input " + num::shape_str(x) + " does not match weights " +
                     num::shape_str(w));
  }
}

}  // namespace

template <typename T>
LstmState<T> lstm_cell_step(const Var<T>& x, const LstmState<T>& state, const LstmParams<T>& p) {
  require_input_width(x.shape(), p.wx.shape(), "lstm_cell_step");
  const std::size_t H = p.wh.shape()[0];
  if (p.wx.shape()[1] != 4 * H || p.wh.shape()[1] != 4 * H || state.h.shape() != state.c.shape() ||
      state.h.shape()[1] != H || state.h.shape()[0] != x.shape()[0]) {
    throw ShapeError("lstm_cell_step: inconsistent state or weight shapes");
  }
  return lstm_step_projected(num::add_row(num::matmul(x, p.wx), p.b), state, p.wh);
}

template <typename T>
Var<T> gru_cell_step(const Var<T>& x, const Var<T>& h, const GruParams<T>& p) {
  require_input_width(x.shape(), p.wx.shape(), "gru_cell_step");
  const std::size_t H = p.uh.shape()[0];
  if (p.wx.shape()[1] != 3 * H || p.uzr.shape() != num::Shape{H, 2 * H} || p.uh.shape()[1] != H ||
      h.shape() != num::Shape{x.shape()[0], H}) {
    throw ShapeError("gru_cell_step: inconsistent state or weight shapes");
  }
  return gru_step_projected(num::add_row(num::matmul(x, p.wx), p.b), h, p.uzr, p.uh);
}

num::ParameterSet<float> init_rnn(const RnnConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  num::Rng rng(seed);
  num::ParameterSet<float> p;
  const std::size_t E = cfg.embedding_dim, H = cfg.hidden;
  constexpr double kRecurrentRange = 0.08;
  p.add("embedding", num::uniform_tensor<float>({cfg.vocab_size, E}, -0.05, 0.05, rng));
  for (const char* dir : {"fwd", "bwd"}) {
    if (std::string(dir) == "bwd" && !cfg.bidirectional) break;
    const std::string pre = dir;
    auto u = [&](num::Shape s) { return num::uniform_tensor<float>(std::move(s), -kRecurrentRange, kRecurrentRange, rng); };
    if (cfg.cell == CellKind::lstm) {
      p.add(pre + ".Wx", u({E, 4 * H}));
      p.add(pre + ".Wh", u({H, 4 * H}));
      p.add(pre + ".b", Tensor<float>({4 * H}));
    } else {
      p.add(pre + ".Wx", u({E, 3 * H}));
      p.add(pre + ".Uzr", u({H, 2 * H}));
      p.add(pre + ".Uh", u({H, H}));
      p.add(pre + ".b", Tensor<float>({3 * H}));
    }
  }
  add_linear(p, "dense", cfg.rnn_output_dim(), cfg.dense, 0.05, rng);
  add_linear(p, "out", cfg.dense, cfg.classes, 0.05, rng);
  return p;
}

template <typename T>
Var<T> rnn_encode_direction(Tape<T>& tape, const RnnConfig& cfg, num::ParameterSet<T>& p,
                            const std::string& prefix, const Var<T>& embedded, const Batch& batch,
                            bool reverse) {
  const std::size_t B = batch.size, L = batch.seq_len, H = cfg.hidden;
  const bool lstm = cfg.cell == CellKind::lstm;
  auto wx = tape.param(p.get(prefix + ".Wx"));
  auto b = tape.param(p.get(prefix + ".b"));
  // Input projections for every position at once.
  auto xproj = num::add_row(num::matmul(embedded, wx), b);

  Var<T> wh, uzr, uh;
  if (lstm) {
    wh = tape.param(p.get(prefix + ".Wh"));
  } else {
    uzr = tape.param(p.get(prefix + ".Uzr"));
    uh = tape.param(p.get(prefix + ".Uh"));
  }

  Var<T> h = tape.constant(Tensor<T>({B, H}));
  Var<T> c = lstm ? tape.constant(Tensor<T>({B, H})) : Var<T>{};
  std::vector<std::size_t> rows(B);
  std::vector<std::uint8_t> active(B);
  for (std::size_t t = 0; t < L; ++t) {
    bool all_active = true, any_active = false;
    for (std::size_t e = 0; e < B; ++e) {
      const std::size_t len = batch.lengths[e];
      active[e] = t < len ? 1 : 0;
      all_active = all_active && active[e];
      any_active = any_active || active[e];
      rows[e] = e * L + (t < len ? (reverse ? len - 1 - t : t) : 0);
    }
    if (!any_active) break;
    auto xt = num::gather_rows(xproj, std::span<const std::size_t>(rows));
    if (lstm) {
      auto next = lstm_step_projected(xt, LstmState<T>{h, c}, wh);
      h = all_active ? next.h : num::select_rows(std::span<const std::uint8_t>(active), next.h, h);
      c = all_active ? next.c : num::select_rows(std::span<const std::uint8_t>(active), next.c, c);
    } else {
      auto next = gru_step_projected(xt, h, uzr, uh);
      h = all_active ? next : num::select_rows(std::span<const std::uint8_t>(active), next, h);
    }
  }
  return h;
}

template <typename T>
Var<T> rnn_forward(Tape<T>& tape, const RnnConfig& cfg, num::ParameterSet<T>& p, const Batch& batch,
                   const ForwardOptions& opt) {
  if (batch.lengths.size() != batch.size || batch.ids.size() != batch.size * batch.seq_len) {
    throw ShapeError("rnn_forward: malformed batch");
  }
  auto emb = num::embedding(tape.param(p.get("embedding")), std::span<const std::size_t>(batch.ids));
  auto h = rnn_encode_direction(tape, cfg, p, "fwd", emb, batch, false);
  if (cfg.bidirectional) h = num::concat_cols(h, rnn_encode_direction(tape, cfg, p, "bwd", emb, batch, true));
  auto dense = num::relu(linear(tape, p, "dense", h));
  dense = maybe_dropout(dense, cfg.dropout, opt);
  return num::softmax(linear(tape, p, "out", dense), 1);
}

#define DFD_INSTANTIATE_RNN(T)                                                                   \
  template LstmState<T> lstm_cell_step(const Var<T>&, const LstmState<T>&, const LstmParams<T>&); \
  template Var<T> gru_cell_step(const Var<T>&, const Var<T>&, const GruParams<T>&);              \
  template Var<T> rnn_encode_direction(Tape<T>&, const RnnConfig&, num::ParameterSet<T>&,        \
                                       const std::string&, const Var<T>&, const Batch&, bool);   \
  template Var<T> rnn_forward(Tape<T>&, const RnnConfig&, num::ParameterSet<T>&, const Batch&,   \
                              const ForwardOptions&);

DFD_INSTANTIATE_RNN(float)
DFD_INSTANTIATE_RNN(double)
DFD_INSTANTIATE_RNN(long double)

#undef DFD_INSTANTIATE_RNN

}  // namespace dfd::models
