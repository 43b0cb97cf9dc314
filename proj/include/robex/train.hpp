#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "robex/model.hpp"

namespace robex {

struct TrainResult {
  Model model;
  double final_train_accuracy = 0.0;
};

inline double accuracy(const Model& m, const std::vector<Example>& data) {
  if (data.empty()) return 0.0;
  int hits = 0;
  for (const Example& e : data) {
    if (predict(m, e.x) == e.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

// Minibatch SGD on the softmax cross-entropy loss. Deterministic for a fixed
// seed: seeded init, seeded per-epoch shuffle, fixed batch order.
inline TrainResult train_sgd(const std::vector<Example>& dataset, const std::vector<int>& arch,
                             const TrainConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("train_sgd: empty dataset");
  if (arch.size() < 2) throw std::invalid_argument("train_sgd: need input and output widths");
  if (config.learning_rate <= 0 || config.epochs <= 0 || config.batch_size <= 0 ||
      config.l2_penalty < 0) {
    throw std::invalid_argument("train_sgd: invalid config");
  }
  const int d = arch.front();
  const int num_classes = arch.back();
  for (const Example& e : dataset) {
    if (static_cast<int>(e.x.size()) != d) throw std::invalid_argument("train_sgd: example dim");
    if (e.label < 0 || e.label >= num_classes) {
      throw std::invalid_argument("train_sgd: label out of range");
    }
  }

  Rng rng(config.seed);
  Model m;
  m.input_dim = d;
  m.num_classes = num_classes;
  for (std::size_t i = 0; i + 1 < arch.size(); ++i) {
    Activation act = (i + 2 == arch.size()) ? Activation::kIdentity : Activation::kReLU;
    m.layers.push_back(make_random_layer(arch[i + 1], arch[i], act, rng));
  }
  m.validate();

  const std::size_t num_layers = m.layers.size();
  std::vector<std::vector<double>> grad_w(num_layers);
  std::vector<Vector> grad_b(num_layers);
  std::vector<Vector> act_in(num_layers);  // input seen by each layer
  std::vector<Vector> pre(num_layers);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      for (std::size_t li = 0; li < num_layers; ++li) {
        grad_w[li].assign(m.layers[li].weights.size(), 0.0);
        grad_b[li].assign(m.layers[li].bias.size(), 0.0);
      }

      for (std::size_t k = start; k < stop; ++k) {
        const Example& e = dataset[order[k]];
        // Forward with caches.
        Vector cur = e.x;
        for (std::size_t li = 0; li < num_layers; ++li) {
          const Layer& l = m.layers[li];
          act_in[li] = cur;
          detail::affine_forward(l, cur, pre[li]);
          cur = pre[li];
          if (l.activation == Activation::kReLU) {
            for (double& v : cur) v = v > 0.0 ? v : 0.0;
          }
        }
        // d(loss)/d(logits) for softmax cross-entropy.
        Vector delta = softmax_probs(cur);
        delta[e.label] -= 1.0;

        for (std::size_t li = num_layers; li-- > 0;) {
          const Layer& l = m.layers[li];
          if (l.activation == Activation::kReLU) {
            for (int r = 0; r < l.out_dim; ++r) {
              if (pre[li][r] <= 0.0) delta[r] = 0.0;
            }
          }
          double* gw = grad_w[li].data();
          const Vector& in = act_in[li];
          for (int r = 0; r < l.out_dim; ++r) {
            const double g = delta[r];
            grad_b[li][r] += g;
            if (g == 0.0) continue;
            double* row = gw + static_cast<std::size_t>(r) * l.in_dim;
            for (int c = 0; c < l.in_dim; ++c) row[c] += g * in[c];
          }
          if (li > 0) {
            Vector prev(l.in_dim, 0.0);
            for (int r = 0; r < l.out_dim; ++r) {
              const double g = delta[r];
              if (g == 0.0) continue;
              const double* row = l.weights.data() + static_cast<std::size_t>(r) * l.in_dim;
              for (int c = 0; c < l.in_dim; ++c) prev[c] += g * row[c];
            }
            delta.swap(prev);
          }
        }
      }

      const double lr = config.learning_rate;
      for (std::size_t li = 0; li < num_layers; ++li) {
        Layer& l = m.layers[li];
        for (std::size_t i = 0; i < l.weights.size(); ++i) {
          l.weights[i] -= lr * (grad_w[li][i] * inv_batch + config.l2_penalty * l.weights[i]);
        }
        for (std::size_t i = 0; i < l.bias.size(); ++i) {
          l.bias[i] -= lr * grad_b[li][i] * inv_batch;
        }
      }
    }
  }

  TrainResult result;
  result.final_train_accuracy = accuracy(m, dataset);
  result.model = std::move(m);
  return result;
}

}  // namespace robex
