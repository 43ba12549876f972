#include "snnprune/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "snnprune/error.hpp"
#include "snnprune/random.hpp"

namespace snnprune {

void NetworkConfig::validate() const {
  if (layer_dims.size() < 2) throw ContractError("NetworkConfig: need at least one weight layer");
  const std::size_t n = num_layers();
  if (spiking.size() != n || prunable.size() != n || lif.size() != n) {
    throw ContractError("NetworkConfig: spiking/prunable/lif must have one entry per weight layer");
  }
  for (std::size_t d : layer_dims) {
    if (d == 0) throw ContractError("NetworkConfig: layer dimensions must be positive");
  }
  for (const auto& p : lif) p.validate();
}

NetworkConfig make_snn3_config(std::size_t input_dim, std::uint64_t seed, std::vector<std::size_t> hidden,
                               LifParams lif) {
  NetworkConfig cfg;
  cfg.layer_dims.push_back(input_dim);
  cfg.layer_dims.insert(cfg.layer_dims.end(), hidden.begin(), hidden.end());
  cfg.layer_dims.push_back(2);
  const std::size_t n = cfg.num_layers();
  cfg.spiking.assign(n, true);
  cfg.prunable.assign(n, true);
  cfg.spiking.back() = false;
  cfg.prunable.back() = false;
  cfg.lif.assign(n, lif);
  cfg.seed = seed;
  return cfg;
}

void WeightLayer::apply_mask() {
  for (std::size_t k = 0; k < weights.data.size(); ++k) {
    if (!mask[k]) weights.data[k] = 0.0;
  }
}

std::size_t WeightLayer::masked_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{0}));
}

Network Network::initialize(const NetworkConfig& config) {
  config.validate();
  Network net;
  net.config = config;
  Rng rng(config.seed);
  for (std::size_t l = 0; l < config.num_layers(); ++l) {
    const std::size_t pre = config.layer_dims[l];
    const std::size_t post = config.layer_dims[l + 1];
    WeightLayer layer;
    layer.weights = Matrix(post, pre);
    layer.mask.assign(post * pre, 1);
    layer.prunable = config.prunable[l];
    const double bound = config.init_gain / std::sqrt(static_cast<double>(pre));
    for (double& w : layer.weights.data) w = rng.uniform(-bound, bound);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

void Network::validate() const {
  config.validate();
  if (layers.size() != config.num_layers()) throw ContractError("Network: layer count does not match config");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weights.rows != config.layer_dims[l + 1] || layer.weights.cols != config.layer_dims[l] ||
        layer.weights.data.size() != layer.weights.rows * layer.weights.cols) {
      throw ContractError("Network: layer " + std::to_string(l) + " weight shape does not match config");
    }
    if (layer.mask.size() != layer.weights.size()) {
      throw ContractError("Network: layer " + std::to_string(l) + " mask shape does not match weights");
    }
  }
}

std::size_t Network::prunable_weight_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    if (layer.prunable) n += layer.size();
  }
  return n;
}

std::size_t Network::prunable_masked_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    if (layer.prunable) n += layer.masked_count();
  }
  return n;
}

double Network::pruned_fraction() const {
  const std::size_t total = prunable_weight_count();
  return total == 0 ? 0.0 : static_cast<double>(prunable_masked_count()) / static_cast<double>(total);
}

void Network::apply_masks() {
  for (auto& layer : layers) layer.apply_mask();
}

NeuronState reset_state(const Network& net) {
  NeuronState state;
  for (std::size_t l = 1; l < net.config.layer_dims.size(); ++l) {
    state.membrane.emplace_back(net.config.layer_dims[l], 0.0);
  }
  return state;
}

std::vector<double> synaptic_current(const WeightLayer& layer, std::span<const std::uint8_t> pre_spikes) {
  if (pre_spikes.size() != layer.pre_dim()) {
    throw ContractError("synaptic_current: expected " + std::to_string(layer.pre_dim()) +
                        " presynaptic entries, got " + std::to_string(pre_spikes.size()));
  }
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < pre_spikes.size(); ++j) {
    if (pre_spikes[j]) active.push_back(j);
  }
  std::vector<double> current(layer.post_dim(), 0.0);
  const std::size_t cols = layer.pre_dim();
  for (std::size_t i = 0; i < current.size(); ++i) {
    const double* w = layer.weights.data.data() + i * cols;
    const std::uint8_t* m = layer.mask.data() + i * cols;
    double acc = 0.0;
    for (std::size_t j : active) {
      if (m[j]) acc += w[j];
    }
    current[i] = acc;
  }
  return current;
}

LayerOutput layer_forward(std::span<const std::uint8_t> pre_spikes, const WeightLayer& layer,
                          std::span<const double> membrane, const LifParams& params, bool spiking) {
  if (membrane.size() != layer.post_dim()) {
    throw ContractError("layer_forward: membrane has " + std::to_string(membrane.size()) + " entries, layer has " +
                        std::to_string(layer.post_dim()) + " neurons");
  }
  const auto current = synaptic_current(layer, pre_spikes);
  auto u = lif_membrane_update(membrane, current, params);
  if (!spiking) return {{}, std::move(u)};
  auto fired = spike_and_reset(u, params);
  return {std::move(fired.spikes), std::move(fired.membrane)};
}

ForwardResult network_forward(const Network& net, const BinaryMatrix& spikes) {
  net.validate();
  const auto& cfg = net.config;
  if (spikes.cols != cfg.input_dim()) {
    throw ContractError("network_forward: input has " + std::to_string(spikes.cols) + " channels, network expects " +
                        std::to_string(cfg.input_dim()));
  }
  const std::size_t T = spikes.rows;
  const std::size_t L = cfg.num_layers();

  ForwardResult result;
  result.prediction = Matrix(T, cfg.output_dim());
  auto& rec = result.record;
  rec.dims = cfg.layer_dims;
  rec.timesteps = T;
  rec.values.resize(cfg.layer_dims.size());
  for (std::size_t l = 0; l < rec.dims.size(); ++l) rec.values[l].assign(T * rec.dims[l], 0.0);

  NeuronState state = reset_state(net);
  std::vector<std::uint8_t> pre;
  for (std::size_t t = 0; t < T; ++t) {
    const auto input = spikes.row(t);
    pre.assign(input.begin(), input.end());
    for (std::size_t i = 0; i < pre.size(); ++i) {
      if (pre[i] > 1) throw ContractError("network_forward: spike value outside {0,1}");
      rec.values[0][t * rec.dims[0] + i] = pre[i];
    }
    for (std::size_t l = 0; l < L; ++l) {
      auto out = layer_forward(pre, net.layers[l], state.membrane[l], cfg.lif[l], cfg.spiking[l]);
      double* dst = rec.values[l + 1].data() + t * rec.dims[l + 1];
      if (cfg.spiking[l]) {
        for (std::size_t i = 0; i < out.spikes.size(); ++i) dst[i] = out.spikes[i];
        if (l + 1 == L) std::copy(dst, dst + rec.dims[l + 1], result.prediction.row(t).begin());
        pre = std::move(out.spikes);
      } else {
        std::copy(out.membrane.begin(), out.membrane.end(), dst);
        // Non-spiking layers only make sense as the readout.
        if (l + 1 != L) throw ContractError("network_forward: only the last layer may be non-spiking");
        std::copy(out.membrane.begin(), out.membrane.end(), result.prediction.row(t).begin());
      }
      state.membrane[l] = std::move(out.membrane);
    }
    state.last_update_time = t;
  }
  return result;
}

}  // namespace snnprune
