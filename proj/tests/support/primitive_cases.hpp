#pragma once

// Small randomly seeded instances of every differentiable primitive, shared
// by the unit tests and the acceptance suite. Each case reduces the op's
// output to a scalar through a fixed random weighting so every output entry
// contributes a distinct gradient.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dfd/numerics/grad_check.hpp"
#include "dual_check.hpp"
#include "dfd/numerics/ops.hpp"

namespace dfd::testing {

struct PrimitiveCase {
  std::string name;
  std::function<num::ParameterSet<float>(std::uint64_t)> make_params;
  std::function<num::ScalarFn<float>(num::ParameterSet<float>&, std::uint64_t)> fn32;
  std::function<num::ScalarFn<double>(num::ParameterSet<double>&, std::uint64_t)> fn64;
  std::function<num::ScalarFn<num::Wide>(num::ParameterSet<num::Wide>&, std::uint64_t)> fn_wide;
};

namespace cases {

template <typename T>
num::Var<T> weighted_sum(const num::Var<T>& y, std::uint64_t seed) {
  num::Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  auto w = num::uniform_tensor<T>(y.shape(), -1.0, 1.0, rng);
  return num::sum(num::mul(y, y.tape().constant(std::move(w))));
}

inline num::ParameterSet<float> params_of(std::initializer_list<std::pair<const char*, num::Shape>> spec,
                                          std::uint64_t seed, double scale = 1.0) {
  num::Rng rng(seed);
  num::ParameterSet<float> p;
  for (const auto& [name, shape] : spec) p.add(name, num::uniform_tensor<float>(shape, -scale, scale, rng));
  return p;
}

struct Matmul {
  static num::ParameterSet<float> params(std::uint64_t s) { return params_of({{"a", {3, 4}}, {"b", {4, 5}}}, s); }
  template <typename T>
  static num::ScalarFn<T> build(num::ParameterSet<T>& p, std::uint64_t s) {
    return [&p, s](num::Tape<T>& t) {
      return weighted_sum(num::matmul(t.param(p.get("a")), t.param(p.get("b"))), s);
    };
  }
};

struct MatmulNt {
  static num::ParameterSet<float> params(std::uint64_t s) { return params_of({{"a", {3, 4}}, {"b", {5, 4}}}, s); }
  template <typename T>
  static num::ScalarFn<T> build(num::ParameterSet<T>& p, std::uint64_t s) {
    return [&p, s](num::Tape<T>& t) {
      return weighted_sum(num::matmul_nt(t.param(p.get("a")), t.param(p.get("b"))), s);
    };
  }
};

struct Elementwise {
  static num::ParameterSet<float> params(std::uint64_t s) { return params_of({{"a", {3, 4}}, {"b", {3, 4}}}, s); }
  template <typename T>
  static num::ScalarFn<T> build(num::ParameterSet<T>& p, std::uint64_t s) {
    return [&p, s](num::Tape<T>& t) {
      auto a = t.param(p.get("a"));
      auto b = t.param(p.get("b"));
      auto y = num::sub(num::add(num::mul(a, b), a), num::affine(b, T{0.5}, T{-1}));
      return weighted_sum(y, s);
    };
  }
};

struct AddRow {
  static num::ParameterSet<float> params(std::uint64_t s) { return params_of({{"x", {3, 4}}, {"b", {4}}}, s); }
  template <typename T>
  static num::ScalarFn<T> build(num::ParameterSet<T>& p, std::uint64_t s) {
    return [&p, s](num::Tape<T>& t) {
      return weighted_sum(num::add_row(t.param(p.get("x")), t.param(p.get("b"))), s);
    };
  }
};

template <int Kind>
struct Activation {
  static num::ParameterSet<float> params(std::uint64_t s) { return params_of({{"x", {4, 5}}}, s, 2.0); }
  template <typename T>
  static num::ScalarFn<T> build(num::ParameterSet<T>& p, std::uint64_t s) {
    return [&p, s](num::Tape<T>& t) {
      auto x = t.param(p.get("x"));
      num::Var<T> y;
      switch (Kind) {
        case 0: y = num::sigmoid(x); break;
        case 1: y = num::tanh(x); break;
        case 2: y = num::relu(x); break;
        default: y = num::gelu(x); break;
      }
      return weighted_sum(y, s);
    };
  }
};

struct SoftmaxCrossEntropy {
  static num::ParameterSet<float> params(std::uint64_t s) { return params_of({{"x", {4, 3}}}, s, 2.0); }
  template <typename T>
  static num::ScalarFn<T> build(num::ParameterSet<T>& p, std::uint64_t s) {
    return [&p, s](num::Tape<T>& t) {
      const std::vector<std::size_t> labels{s % 3, (s + 1) % 3, 2, 0};
      return num::cross_entropy(num::softmax(t.param(p.get("x")), 1), std::span(labels));
    };
  }
};

struct SoftmaxAxis0 {
  static num::ParameterSet<float> params(std::uint64_t s) { return params_of({{"x", {4, 3}}}, s, 2.0); }
  template <typename T>
  static num::ScalarFn<T> build(num::ParameterSet<T>& p, std::uint64_t s) {
    return [&p, s](num::Tape<T>& t) { return weighted_sum(num::softmax(t.param(p.get("x")), 0), s); };
  }
};

struct EmbeddingGather {
  static num::ParameterSet<float> params(std::uint64_t s) { return params_of({{"table", {6, 3}}}, s); }
  template <typename T>
  static num::ScalarFn<T> build(num::ParameterSet<T>& p, std::uint64_t s) {
    return [&p, s](num::Tape<T>& t) {
      const std::vector<std::size_t> ids{1, 4, 1, static_cast<std::size_t>(s % 6)};
      const std::vector<std::size_t> rows{3, 0};
      auto e = num::embedding(t.param(p.get("table")), std::span(ids));
      return weighted_sum(num::gather_rows(e, std::span(rows)), s);
    };
  }
};

struct SliceConcatSelect {
  static num::ParameterSet<float> params(std::uint64_t s) { return params_of({{"a", {3, 6}}, {"b", {3, 2}}}, s); }
  template <typename T>
  static num::ScalarFn<T> build(num::ParameterSet<T>& p, std::uint64_t s) {
    return [&p, s](num::Tape<T>& t) {
      auto a = t.param(p.get("a"));
      auto b = t.param(p.get("b"));
      auto left = num::slice_cols(a, 1, 3);
      auto right = num::slice_cols(a, 4, 6);
      const std::vector<std::uint8_t> take{1, 0, 1};
      auto picked = num::select_rows(std::span(take), left, num::mul(right, b));
      return weighted_sum(num::concat_cols(picked, b), s);
    };
  }
};

struct Dropout {
  static num::ParameterSet<float> params(std::uint64_t s) { return params_of({{"x", {4, 5}}}, s); }
  template <typename T>
  static num::ScalarFn<T> build(num::ParameterSet<T>& p, std::uint64_t s) {
    return [&p, s](num::Tape<T>& t) {
      num::Rng frozen(s);  // same mask on every call
      return weighted_sum(num::dropout(t.param(p.get("x")), 0.4, frozen), s);
    };
  }
};

struct LayerNorm {
  static num::ParameterSet<float> params(std::uint64_t s) {
    return params_of({{"x", {3, 6}}, {"gamma", {6}}, {"beta", {6}}}, s);
  }
  template <typename T>
  static num::ScalarFn<T> build(num::ParameterSet<T>& p, std::uint64_t s) {
    return [&p, s](num::Tape<T>& t) {
      return weighted_sum(num::layer_norm(t.param(p.get("x")), t.param(p.get("gamma")),
                                          t.param(p.get("beta"))),
                          s);
    };
  }
};

template <bool Causal>
struct Attention {
  static num::ParameterSet<float> params(std::uint64_t s) {
    return params_of({{"q", {8, 4}}, {"k", {8, 4}}, {"v", {8, 4}}}, s);
  }
  template <typename T>
  static num::ScalarFn<T> build(num::ParameterSet<T>& p, std::uint64_t s) {
    return [&p, s](num::Tape<T>& t) {
      num::AttentionLayout layout;
      layout.batch = 2;
      layout.seq_len = 4;
      layout.heads = 2;
      layout.lengths = {4, 2 + s % 2};
      layout.causal = Causal;
      return weighted_sum(num::attention(t.param(p.get("q")), t.param(p.get("k")),
                                         t.param(p.get("v")), layout),
                          s);
    };
  }
};

template <typename C>
PrimitiveCase make(std::string name) {
  return PrimitiveCase{
      std::move(name), [](std::uint64_t s) { return C::params(s); },
      [](num::ParameterSet<float>& p, std::uint64_t s) { return C::template build<float>(p, s); },
      [](num::ParameterSet<double>& p, std::uint64_t s) { return C::template build<double>(p, s); },
      [](num::ParameterSet<num::Wide>& p, std::uint64_t s) { return C::template build<num::Wide>(p, s); }};
}

}  // namespace cases

inline std::vector<PrimitiveCase> primitive_cases() {
  using namespace cases;
  return {make<Matmul>("matmul"),
          make<MatmulNt>("matmul_nt"),
          make<Elementwise>("add/sub/mul/affine"),
          make<AddRow>("add_row"),
          make<Activation<0>>("sigmoid"),
          make<Activation<1>>("tanh"),
          make<Activation<2>>("relu"),
          make<Activation<3>>("gelu"),
          make<SoftmaxCrossEntropy>("softmax+cross_entropy"),
          make<SoftmaxAxis0>("softmax(axis 0)"),
          make<EmbeddingGather>("embedding/gather_rows"),
          make<SliceConcatSelect>("slice/concat/select_rows"),
          make<Dropout>("dropout (frozen mask)"),
          make<LayerNorm>("layer_norm"),
          make<Attention<false>>("attention"),
          make<Attention<true>>("attention (causal)")};
}

// Both precisions against one extended-precision reference.
inline CheckErrors check_case(const PrimitiveCase& c, std::uint64_t seed) {
  auto p32 = c.make_params(seed);
  auto p64 = p32.cast<double>();
  auto pw = p32.cast<num::Wide>();
  auto f32 = c.fn32(p32, seed);
  auto f64 = c.fn64(p64, seed);
  auto fw = c.fn_wide(pw, seed);
  num::GradCheckOptions opt;
  opt.seed = seed;
  return check_both_precisions(f32, p32, f64, p64, fw, pw, opt);
}

}  // namespace dfd::testing
