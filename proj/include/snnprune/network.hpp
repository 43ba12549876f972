#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "snnprune/lif.hpp"
#include "snnprune/tensor.hpp"

namespace snnprune {

/// Topology and neuron parameters of a feed-forward LIF network.
///
/// `layer_dims` lists neuron counts from the input through the readout, so a
/// network with N weight layers has N + 1 entries. `spiking`, `lif` and
/// `prunable` each hold one entry per weight layer.
struct NetworkConfig {
  std::vector<std::size_t> layer_dims;
  std::vector<bool> spiking;
  std::vector<bool> prunable;
  std::vector<LifParams> lif;
  std::uint64_t seed = 0;
  /// Uniform init half-width is init_gain / sqrt(fan_in).
  double init_gain = 1.0;

  std::size_t num_layers() const { return layer_dims.empty() ? 0 : layer_dims.size() - 1; }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }

  /// Throws ContractError on inconsistent sizes or invalid LIF parameters.
  void validate() const;

  bool operator==(const NetworkConfig&) const = default;
};

/// Three spiking hidden layers feeding a non-spiking 2-neuron velocity readout.
/// Hidden layers are prunable, the readout is not.
NetworkConfig make_snn3_config(std::size_t input_dim, std::uint64_t seed,
                               std::vector<std::size_t> hidden = {50, 50, 50},
                               LifParams lif = {});

/// One dense connection matrix (rows = postsynaptic) with its binary prune mask.
struct WeightLayer {
  Matrix weights;
  std::vector<std::uint8_t> mask;
  bool prunable = true;

  std::size_t post_dim() const { return weights.rows; }
  std::size_t pre_dim() const { return weights.cols; }
  std::size_t size() const { return weights.size(); }

  /// Zeroes every weight whose mask entry is 0.
  void apply_mask();
  std::size_t masked_count() const;
  double effective_weight(std::size_t post, std::size_t pre) const {
    return mask[post * weights.cols + pre] ? weights(post, pre) : 0.0;
  }

  bool operator==(const WeightLayer&) const = default;
};

struct Network {
  NetworkConfig config;
  std::vector<WeightLayer> layers;

  /// Seeded uniform initialisation, all masks set to 1.
  static Network initialize(const NetworkConfig& config);

  /// Throws ContractError if the layers disagree with the config.
  void validate() const;

  std::size_t prunable_weight_count() const;
  std::size_t prunable_masked_count() const;
  /// Mask-zero fraction over prunable layers.
  double pruned_fraction() const;
  void apply_masks();

  bool operator==(const Network&) const = default;
};

/// Per-layer membrane potentials carried from one timestep to the next.
struct NeuronState {
  std::vector<std::vector<double>> membrane;
  std::size_t last_update_time = 0;

  bool operator==(const NeuronState&) const = default;
};

/// All-zero membranes sized for `net`.
NeuronState reset_state(const Network& net);

/// Everything the metrics need from one forward pass.
///
/// Activation layer 0 is the input spike train, layers 1..N are the outputs of
/// the weight layers (spikes for hidden layers, membranes for the readout).
struct ActivationRecord {
  std::vector<std::size_t> dims;
  std::size_t timesteps = 0;
  std::vector<std::vector<double>> values;  // values[layer][t * dims[layer] + i]

  std::span<const double> at(std::size_t layer, std::size_t t) const {
    return {values[layer].data() + t * dims[layer], dims[layer]};
  }
  std::size_t num_layers() const { return dims.size(); }
};

/// Masked synaptic current: sum of effective weights of active presynaptic
/// neurons, accumulated in ascending presynaptic order.
std::vector<double> synaptic_current(const WeightLayer& layer, std::span<const std::uint8_t> pre_spikes);

struct LayerOutput {
  std::vector<std::uint8_t> spikes;  // empty for non-spiking layers
  std::vector<double> membrane;      // post-reset state; doubles as readout when non-spiking
};

LayerOutput layer_forward(std::span<const std::uint8_t> pre_spikes, const WeightLayer& layer,
                          std::span<const double> membrane, const LifParams& params, bool spiking);

struct ForwardResult {
  Matrix prediction;  // [T x output_dim]
  ActivationRecord record;
};

/// Runs a zero-initialised network over a time-major spike train.
ForwardResult network_forward(const Network& net, const BinaryMatrix& spikes);

}  // namespace snnprune
