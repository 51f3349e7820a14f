#pragma once

// Loop-based dense network evaluator over std::vector, used to cross-check nn::Mlp.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

struct DenseLayer {
  int in = 0, out = 0;
  std::vector<double> w;  // row-major out x in
  std::vector<double> b;
};

enum class Act { Identity, Relu, Tanh };

inline double apply(Act a, double x) {
  switch (a) {
    case Act::Relu: return x > 0.0 ? x : 0.0;
    case Act::Tanh: return std::tanh(x);
    default: return x;
  }
}

inline std::vector<double> evaluate(const std::vector<DenseLayer>& layers, std::vector<double> x,
                                    Act hidden, Act output) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    std::vector<double> y(L.out);
    for (int o = 0; o < L.out; ++o) {
      double s = L.b[o];
      for (int i = 0; i < L.in; ++i) s += L.w[o * L.in + i] * x[i];
      y[o] = apply(l + 1 == layers.size() ? output : hidden, s);
    }
    x = std::move(y);
  }
  return x;
}

}  // namespace oracle
