#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "robex/common.hpp"
#include "robex/rng.hpp"

namespace robex {

enum class Activation { kReLU, kIdentity };

inline std::string activation_name(Activation a) {
  return a == Activation::kReLU ? "relu" : "identity";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::kReLU;
  if (s == "identity") return Activation::kIdentity;
  throw IoError("unknown activation '" + s + "'");
}

struct Layer {
  int out_dim = 0;
  int in_dim = 0;
  std::vector<double> weights;  // row-major, out_dim x in_dim
  Vector bias;                  // out_dim
  Activation activation = Activation::kReLU;
};

// Layered feed-forward ReLU classifier emitting raw logits. Immutable after
// construction; forward/input_gradient are safe for concurrent readers.
struct Model {
  int input_dim = 0;
  int num_classes = 0;
  std::vector<Layer> layers;

  void validate() const {
    if (layers.empty()) throw NumericError("model has no layers");
    int in = input_dim;
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const Layer& l = layers[li];
      if (l.in_dim != in) {
        throw NumericError("layer " + std::to_string(li) + " expects input " +
                           std::to_string(l.in_dim) + ", got " + std::to_string(in));
      }
      if (static_cast<int>(l.bias.size()) != l.out_dim) {
        throw NumericError("layer " + std::to_string(li) + " bias length " +
                           std::to_string(l.bias.size()) + " != out_dim " +
                           std::to_string(l.out_dim));
      }
      if (static_cast<int>(l.weights.size()) != l.out_dim * l.in_dim) {
        throw NumericError("layer " + std::to_string(li) + " weight count mismatch");
      }
      in = l.out_dim;
    }
    if (in != num_classes) throw NumericError("final layer width != num_classes");
    if (layers.back().activation != Activation::kIdentity) {
      throw NumericError("final layer must emit raw logits");
    }
  }
};

struct Example {
  Vector x;
  int label = 0;
};

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 50;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double l2_penalty = 0.0;
};

namespace detail {

inline void check_input(const Model& m, const Vector& x) {
  if (static_cast<int>(x.size()) != m.input_dim) {
    throw std::invalid_argument("input length " + std::to_string(x.size()) +
                                " != model input_dim " + std::to_string(m.input_dim));
  }
}

inline void affine_forward(const Layer& l, const Vector& in, Vector& out) {
  out.assign(l.out_dim, 0.0);
  for (int r = 0; r < l.out_dim; ++r) {
    const double* w = l.weights.data() + static_cast<std::size_t>(r) * l.in_dim;
    double s = l.bias[r];
    for (int c = 0; c < l.in_dim; ++c) s += w[c] * in[c];
    out[r] = s;
  }
}

}  // namespace detail

// Pre-activation values per layer, kept for the backward pass.
struct ForwardTrace {
  std::vector<Vector> pre;  // pre[i] = W_i h_{i-1} + b_i
  Vector logits;
};

inline ForwardTrace forward_trace(const Model& m, const Vector& x) {
  detail::check_input(m, x);
  ForwardTrace t;
  t.pre.resize(m.layers.size());
  Vector cur = x;
  Vector next;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const Layer& l = m.layers[li];
    detail::affine_forward(l, cur, next);
    t.pre[li] = next;
    if (l.activation == Activation::kReLU) {
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    }
    cur.swap(next);
  }
  t.logits = cur;
  return t;
}

inline Vector forward(const Model& m, const Vector& x) { return forward_trace(m, x).logits; }

inline int predict(const Model& m, const Vector& x) { return argmax_index(forward(m, x)); }

// Numerically stable softmax (max subtraction); entries sum to 1.
inline Vector softmax_probs(const Vector& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax of empty logits");
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  Vector p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

// Scalar functions of the logits whose input gradient the attack and the
// gradient-based explainers need.
//   Logit(c)        : z_c
//   Margin(y)       : max_{j != y} z_j - z_y   (ascends toward "not y")
//   TargetMargin(t) : z_t - max_{j != t} z_j   (ascends toward "exactly t")
struct ScalarHead {
  enum class Kind { kLogit, kMargin, kTargetMargin };
  Kind kind = Kind::kLogit;
  int class_index = 0;

  static ScalarHead logit(int c) { return {Kind::kLogit, c}; }
  static ScalarHead margin(int y) { return {Kind::kMargin, y}; }
  static ScalarHead target_margin(int t) { return {Kind::kTargetMargin, t}; }
};

namespace detail {

inline int runner_up(const Vector& logits, int excluded) {
  int best = -1;
  for (int j = 0; j < static_cast<int>(logits.size()); ++j) {
    if (j == excluded) continue;
    if (best < 0 || logits[j] > logits[best]) best = j;
  }
  if (best < 0) throw std::invalid_argument("margin head needs >= 2 classes");
  return best;
}

inline void check_head(const Model& m, ScalarHead head) {
  if (head.class_index < 0 || head.class_index >= m.num_classes) {
    throw std::invalid_argument("head class index out of range");
  }
}

// Coefficients v over the logits such that head value = v . z.
inline void head_coefficients(const Vector& logits, ScalarHead head, Vector& v) {
  v.assign(logits.size(), 0.0);
  switch (head.kind) {
    case ScalarHead::Kind::kLogit:
      v[head.class_index] = 1.0;
      break;
    case ScalarHead::Kind::kMargin:
      v[runner_up(logits, head.class_index)] = 1.0;
      v[head.class_index] -= 1.0;
      break;
    case ScalarHead::Kind::kTargetMargin:
      v[head.class_index] = 1.0;
      v[runner_up(logits, head.class_index)] -= 1.0;
      break;
  }
}

}  // namespace detail

inline double head_value(const Vector& logits, ScalarHead head) {
  switch (head.kind) {
    case ScalarHead::Kind::kLogit:
      return logits[head.class_index];
    case ScalarHead::Kind::kMargin:
      return logits[detail::runner_up(logits, head.class_index)] - logits[head.class_index];
    case ScalarHead::Kind::kTargetMargin:
      return logits[head.class_index] - logits[detail::runner_up(logits, head.class_index)];
  }
  return 0.0;
}

// Exact reverse-mode gradient of the head scalar with respect to the input.
// ReLU subgradient at 0 is taken as 0.
inline Vector input_gradient(const Model& m, const Vector& x, ScalarHead head) {
  detail::check_input(m, x);
  detail::check_head(m, head);
  ForwardTrace t = forward_trace(m, x);

  Vector grad;
  detail::head_coefficients(t.logits, head, grad);
  Vector prev;
  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const Layer& l = m.layers[li];
    if (l.activation == Activation::kReLU) {
      for (int r = 0; r < l.out_dim; ++r) {
        if (t.pre[li][r] <= 0.0) grad[r] = 0.0;
      }
    }
    prev.assign(l.in_dim, 0.0);
    for (int r = 0; r < l.out_dim; ++r) {
      const double g = grad[r];
      if (g == 0.0) continue;
      const double* w = l.weights.data() + static_cast<std::size_t>(r) * l.in_dim;
      for (int c = 0; c < l.in_dim; ++c) prev[c] += g * w[c];
    }
    grad.swap(prev);
  }
  return grad;
}

// Glorot-style uniform init bound for a layer.
inline double init_bound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

inline Layer make_random_layer(int out_dim, int in_dim, Activation act, Rng& rng) {
  Layer l;
  l.out_dim = out_dim;
  l.in_dim = in_dim;
  l.activation = act;
  const double bound = init_bound(in_dim, out_dim);
  l.weights.resize(static_cast<std::size_t>(out_dim) * in_dim);
  for (double& w : l.weights) w = rng.uniform(-bound, bound);
  l.bias.assign(out_dim, 0.0);
  return l;
}

// Replaces only the final layer with a fresh draw from the init distribution;
// earlier layers are shared bit-for-bit.
inline Model randomize_last_layer(const Model& m, std::uint64_t seed) {
  if (m.layers.empty()) throw std::invalid_argument("model has no layers");
  Model out = m;
  Rng rng(seed);
  Layer& last = out.layers.back();
  last = make_random_layer(last.out_dim, last.in_dim, last.activation, rng);
  return out;
}

}  // namespace robex
