#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "snnprune/network.hpp"
#include "snnprune/dataset.hpp"
#include "snnprune/random.hpp"

namespace snnprune::testing {

/// Average ACs per timestep by direct enumeration of (t, layer, post, pre).
inline double brute_force_acs(const ActivationRecord& rec, const Network& net) {
  if (rec.timesteps == 0) return 0.0;
  std::uint64_t count = 0;
  for (std::size_t t = 0; t < rec.timesteps; ++t) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const auto& layer = net.layers[l];
      const auto pre = rec.at(l, t);
      for (std::size_t i = 0; i < layer.post_dim(); ++i) {
        for (std::size_t j = 0; j < layer.pre_dim(); ++j) {
          if (pre[j] != 0.0 && layer.mask[i * layer.pre_dim() + j] && layer.weights(i, j) != 0.0) ++count;
        }
      }
    }
  }
  return static_cast<double>(count) / static_cast<double>(rec.timesteps);
}

/// Random net with at most `max_width` neurons per layer and random masks,
/// some weights forced to exactly zero.
inline Network random_small_net(Rng& rng, std::size_t max_width, std::uint64_t seed) {
  std::vector<std::size_t> hidden;
  const std::size_t depth = 1 + rng.next() % 3;
  for (std::size_t k = 0; k < depth; ++k) hidden.push_back(1 + rng.next() % max_width);
  auto cfg = make_snn3_config(1 + rng.next() % max_width, seed, hidden);
  cfg.init_gain = rng.uniform(1.0, 4.0);
  for (auto& p : cfg.lif) p.tau = rng.uniform(1.0, 10.0);
  auto net = Network::initialize(cfg);
  for (auto& layer : net.layers) {
    for (std::size_t k = 0; k < layer.size(); ++k) {
      layer.mask[k] = rng.bernoulli(0.7) ? 1 : 0;
      if (rng.bernoulli(0.05)) layer.weights.data[k] = 0.0;
    }
  }
  return net;
}

inline BinaryMatrix random_input(Rng& rng, std::size_t T, std::size_t channels, double rate) {
  BinaryMatrix x(T, channels);
  for (auto& v : x.data) v = rng.bernoulli(rate) ? 1 : 0;
  return x;
}

// Scalar re-derivation of the differentiable forward: the spike is
// sigmoid((u - threshold) / width) and the reset blends toward reset_value.
inline double sigmoid_loss(const Network& net, const Sequence& seq, double width) {
  const auto& cfg = net.config;
  const std::size_t L = cfg.num_layers();
  std::vector<std::vector<double>> v(L);
  for (std::size_t l = 0; l < L; ++l) v[l].assign(cfg.layer_dims[l + 1], 0.0);
  double sq = 0.0;
  for (std::size_t t = 0; t < seq.spikes.rows; ++t) {
    std::vector<double> x(seq.spikes.row(t).begin(), seq.spikes.row(t).end());
    for (std::size_t l = 0; l < L; ++l) {
      const auto& layer = net.layers[l];
      const auto& p = cfg.lif[l];
      const double a = std::exp(-p.dt / p.tau);
      std::vector<double> y(layer.post_dim());
      for (std::size_t i = 0; i < layer.post_dim(); ++i) {
        double cur = 0.0;
        for (std::size_t j = 0; j < layer.pre_dim(); ++j) cur += layer.effective_weight(i, j) * x[j];
        const double u = a * v[l][i] + cur;
        if (!cfg.spiking[l]) {
          v[l][i] = u;
          y[i] = u;
        } else {
          const double s = 1.0 / (1.0 + std::exp(-(u - p.threshold) / width));
          v[l][i] = u * (1.0 - s) + p.reset_value * s;
          y[i] = s;
        }
      }
      x = std::move(y);
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double d = x[k] - seq.velocity(t, k);
      sq += d * d;
    }
  }
  return sq / static_cast<double>(seq.velocity.size());
}

/// Central finite difference of sigmoid_loss with respect to one weight.
inline double fd_gradient(Network net, const Sequence& seq, std::size_t l, std::size_t k, double width) {
  const double w = net.layers[l].weights.data[k];
  const double h = 1e-6 * std::max(1.0, std::abs(w));
  net.layers[l].weights.data[k] = w + h;
  const double plus = sigmoid_loss(net, seq, width);
  net.layers[l].weights.data[k] = w - h;
  const double minus = sigmoid_loss(net, seq, width);
  return (plus - minus) / (2 * h);
}

}  // namespace snnprune::testing
