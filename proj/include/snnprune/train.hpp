#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "snnprune/dataset.hpp"
#include "snnprune/network.hpp"

namespace snnprune {

enum class OptimizerKind { GradientDescent, Adam };

/// Forward nonlinearity used while training.
///
/// `Heaviside` is the real spiking forward with a triangular surrogate in the
/// backward pass. `Sigmoid` replaces the spike by sigmoid((u - threshold) /
/// width) in both passes so analytic gradients can be checked against finite
/// differences; it is a test mode, not a training recipe.
enum class SpikeFunction { Heaviside, Sigmoid };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& s);

struct TrainConfig {
  double learning_rate = 2e-3;
  std::size_t max_epochs = 100;
  std::size_t batch_length = 100;  // timesteps per truncated-BPTT window
  double surrogate_width = 1.0;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::uint64_t seed = 0;
  bool shuffle = false;  // permute training sequences each epoch
  /// Stop pretraining after this many epochs without validation improvement; 0 disables.
  std::size_t early_stop_patience = 0;
  SpikeFunction spike_function = SpikeFunction::Heaviside;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

/// Triangular pseudo-derivative max(0, 1 - |u - threshold| / width) / width.
double surrogate_spike_grad(double u, const LifParams& params, double width);

/// Mean squared error over every timestep and velocity component.
double mse(const Matrix& pred, const Matrix& truth);

/// Forward-only MSE pooled over all sequences. Throws ContractError when empty.
double validate(const Network& net, std::span<const Sequence> data);

struct GradientResult {
  double loss = 0.0;
  std::vector<Matrix> grads;  // one per weight layer, zero where masked
};

/// Loss and gradient of one window covering the whole sequence, starting
/// from zero state.
GradientResult compute_gradients(const Network& net, const Sequence& seq, const TrainConfig& cfg);

/// Owns optimizer state across epochs.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  /// One pass over `data`; returns the epoch's training MSE. Masked weights
  /// are exactly zero after every update. A non-finite loss is returned as is.
  double train_epoch(Network& net, std::span<const Sequence> data);

  /// Drops adaptive-moment state (used after rollbacks).
  void reset_optimizer();

  const TrainConfig& config() const { return cfg_; }
  std::size_t epochs_run() const { return epochs_; }

 private:
  void apply_update(Network& net, const std::vector<Matrix>& grads);

  TrainConfig cfg_;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
  std::uint64_t steps_ = 0;
  std::size_t epochs_ = 0;
};

/// Single epoch with a fresh optimizer.
double train_epoch(Network& net, std::span<const Sequence> data, const TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

struct PretrainResult {
  Network net;
  double target_loss = 0.0;  // validation loss of the returned network
  std::vector<EpochLog> log;
};

/// Trains a freshly initialised dense network. Throws DivergenceError when a
/// loss becomes non-finite.
PretrainResult pretrain(const NetworkConfig& config, std::span<const Sequence> train,
                        std::span<const Sequence> val, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Same, starting from an existing network.
PretrainResult pretrain(Network net, std::span<const Sequence> train, std::span<const Sequence> val,
                        const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace snnprune
