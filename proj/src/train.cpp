#include "snnprune/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "snnprune/error.hpp"
#include "snnprune/random.hpp"

namespace snnprune {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sgd") return OptimizerKind::GradientDescent;
  throw ContractError("unknown optimizer '" + s + "' (expected adam or sgd)");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ContractError("TrainConfig: learning_rate must be finite and >= 0");
  }
  if (batch_length == 0) throw ContractError("TrainConfig: batch_length must be >= 1");
  if (!(surrogate_width > 0.0)) throw ContractError("TrainConfig: surrogate_width must be > 0");
}

double surrogate_spike_grad(double u, const LifParams& params, double width) {
  if (!(width > 0.0)) throw ContractError("surrogate_spike_grad: width must be > 0");
  return std::max(0.0, 1.0 - std::abs(u - params.threshold) / width) / width;
}

double mse(const Matrix& pred, const Matrix& truth) {
  if (pred.rows != truth.rows || pred.cols != truth.cols) throw ContractError("mse: shape mismatch");
  if (pred.size() == 0) throw ContractError("mse: empty input");
  double sq = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = pred.data[k] - truth.data[k];
    sq += d * d;
  }
  return sq / static_cast<double>(pred.size());
}

namespace {

void check_sequence(const Network& net, const Sequence& seq) {
  if (seq.spikes.cols != net.config.input_dim()) throw ContractError("sequence channel count does not match network");
  if (seq.velocity.rows != seq.spikes.rows || seq.velocity.cols != net.config.output_dim()) {
    throw ContractError("sequence labels do not match spike train / network output");
  }
}

// Recorded quantities of one truncated-BPTT window, flattened [step x dim].
struct LayerTape {
  std::vector<double> input;     // presynaptic activity
  std::vector<double> membrane;  // after integration, before reset
  std::vector<double> output;    // spikes (or sigmoid) for spiking layers, membrane for readout
};

class Window {
 public:
  Window(const Network& net, const TrainConfig& cfg) : net_(net), cfg_(cfg) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) decay_.push_back(net.config.lif[l].decay());
  }

  // Runs [begin, end) of `seq` from `state`, leaving the carried state in it.
  // Squared errors are added to `sq_acc` in (t, component) order.
  void forward(const Sequence& seq, std::size_t begin, std::size_t end, std::vector<std::vector<double>>& state,
               double& sq_acc, bool record) {
    const auto& cfg = net_.config;
    const std::size_t L = net_.layers.size();
    steps_ = end - begin;
    begin_ = begin;
    if (record) {
      tape_.assign(L, {});
      for (std::size_t l = 0; l < L; ++l) {
        tape_[l].input.assign(steps_ * cfg.layer_dims[l], 0.0);
        tape_[l].membrane.assign(steps_ * cfg.layer_dims[l + 1], 0.0);
        tape_[l].output.assign(steps_ * cfg.layer_dims[l + 1], 0.0);
      }
    }
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t t = begin; t < end; ++t) {
      const auto in = seq.spikes.row(t);
      x.assign(in.begin(), in.end());
      for (std::size_t l = 0; l < L; ++l) {
        const auto& layer = net_.layers[l];
        const auto& lif = cfg.lif[l];
        const std::size_t pre = layer.pre_dim();
        const std::size_t post = layer.post_dim();
        auto& v = state[l];
        y.assign(post, 0.0);
        double* u_rec = record ? tape_[l].membrane.data() + (t - begin) * post : nullptr;
        if (record) std::copy(x.begin(), x.end(), tape_[l].input.begin() + (t - begin) * pre);
        for (std::size_t i = 0; i < post; ++i) {
          const double* w = layer.weights.data.data() + i * pre;
          const std::uint8_t* m = layer.mask.data() + i * pre;
          double acc = 0.0;
          for (std::size_t j = 0; j < pre; ++j) {
            if (x[j] != 0.0 && m[j]) acc += w[j] * x[j];
          }
          const double u = v[i] * decay_[l] + acc;
          if (u_rec) u_rec[i] = u;
          if (!cfg.spiking[l]) {
            v[i] = u;
            y[i] = u;
          } else if (cfg_.spike_function == SpikeFunction::Heaviside) {
            const bool fired = u >= lif.threshold;
            y[i] = fired ? 1.0 : 0.0;
            v[i] = fired ? lif.reset_value : u;
          } else {
            const double s = 1.0 / (1.0 + std::exp(-(u - lif.threshold) / cfg_.surrogate_width));
            y[i] = s;
            v[i] = u * (1.0 - s) + lif.reset_value * s;
          }
        }
        if (record) std::copy(y.begin(), y.end(), tape_[l].output.begin() + (t - begin) * post);
        x.swap(y);
      }
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - seq.velocity(t, k);
        sq_acc += d * d;
      }
    }
  }

  // Gradient of (window squared error / norm) w.r.t. every weight.
  std::vector<Matrix> backward(const Sequence& seq, double norm) const {
    const auto& cfg = net_.config;
    const std::size_t L = net_.layers.size();
    std::vector<Matrix> grads;
    std::vector<std::vector<double>> carry(L);
    for (std::size_t l = 0; l < L; ++l) {
      grads.emplace_back(net_.layers[l].post_dim(), net_.layers[l].pre_dim());
      carry[l].assign(net_.layers[l].post_dim(), 0.0);
    }
    std::vector<double> g;
    std::vector<double> du;
    std::vector<double> g_prev;
    for (std::size_t step = steps_; step-- > 0;) {
      const std::size_t t = begin_ + step;
      const std::size_t out_dim = cfg.output_dim();
      g.assign(out_dim, 0.0);
      const double* y = tape_[L - 1].output.data() + step * out_dim;
      for (std::size_t k = 0; k < out_dim; ++k) g[k] = 2.0 * (y[k] - seq.velocity(t, k)) / norm;

      for (std::size_t l = L; l-- > 0;) {
        const auto& layer = net_.layers[l];
        const auto& lif = cfg.lif[l];
        const std::size_t pre = layer.pre_dim();
        const std::size_t post = layer.post_dim();
        const double* u = tape_[l].membrane.data() + step * post;
        const double* s = tape_[l].output.data() + step * post;
        const double* x = tape_[l].input.data() + step * pre;
        du.assign(post, 0.0);
        for (std::size_t i = 0; i < post; ++i) {
          if (!cfg.spiking[l]) {
            du[i] = g[i] + carry[l][i];
          } else if (cfg_.spike_function == SpikeFunction::Heaviside) {
            // Reset path detached: v = u where no spike, constant otherwise.
            du[i] = g[i] * surrogate_spike_grad(u[i], lif, cfg_.surrogate_width) + carry[l][i] * (1.0 - s[i]);
          } else {
            const double ds = s[i] * (1.0 - s[i]) / cfg_.surrogate_width;
            du[i] = g[i] * ds + carry[l][i] * ((1.0 - s[i]) + (lif.reset_value - u[i]) * ds);
          }
          carry[l][i] = decay_[l] * du[i];
        }
        auto& gw = grads[l];
        for (std::size_t j = 0; j < pre; ++j) {
          if (x[j] == 0.0) continue;
          for (std::size_t i = 0; i < post; ++i) gw.data[i * pre + j] += du[i] * x[j];
        }
        if (l > 0) {
          g_prev.assign(pre, 0.0);
          for (std::size_t i = 0; i < post; ++i) {
            if (du[i] == 0.0) continue;
            const double* w = layer.weights.data.data() + i * pre;
            const std::uint8_t* m = layer.mask.data() + i * pre;
            for (std::size_t j = 0; j < pre; ++j) {
              if (m[j]) g_prev[j] += w[j] * du[i];
            }
          }
          g.swap(g_prev);
        }
      }
    }
    for (std::size_t l = 0; l < L; ++l) {
      const auto& mask = net_.layers[l].mask;
      for (std::size_t k = 0; k < mask.size(); ++k) {
        if (!mask[k]) grads[l].data[k] = 0.0;
      }
    }
    return grads;
  }

 private:
  const Network& net_;
  const TrainConfig& cfg_;
  std::vector<double> decay_;
  std::vector<LayerTape> tape_;
  std::size_t steps_ = 0;
  std::size_t begin_ = 0;
};

std::vector<std::vector<double>> zero_state(const Network& net) {
  std::vector<std::vector<double>> state;
  for (const auto& layer : net.layers) state.emplace_back(layer.post_dim(), 0.0);
  return state;
}

}  // namespace

double validate(const Network& net, std::span<const Sequence> data) {
  net.validate();
  if (data.empty()) throw ContractError("validate: empty dataset");
  double sq = 0.0;
  std::size_t count = 0;
  for (const auto& seq : data) {
    check_sequence(net, seq);
    const auto result = network_forward(net, seq.spikes);
    for (std::size_t k = 0; k < result.prediction.size(); ++k) {
      const double d = result.prediction.data[k] - seq.velocity.data[k];
      sq += d * d;
    }
    count += result.prediction.size();
  }
  if (count == 0) throw ContractError("validate: dataset has no timesteps");
  return sq / static_cast<double>(count);
}

GradientResult compute_gradients(const Network& net, const Sequence& seq, const TrainConfig& cfg) {
  net.validate();
  cfg.validate();
  check_sequence(net, seq);
  if (seq.spikes.rows == 0) throw ContractError("compute_gradients: empty sequence");
  Window window(net, cfg);
  auto state = zero_state(net);
  double sq = 0.0;
  window.forward(seq, 0, seq.spikes.rows, state, sq, true);
  const double norm = static_cast<double>(seq.spikes.rows * net.config.output_dim());
  return {sq / norm, window.backward(seq, norm)};
}

Trainer::Trainer(TrainConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

void Trainer::reset_optimizer() {
  first_moment_.clear();
  second_moment_.clear();
  steps_ = 0;
}

void Trainer::apply_update(Network& net, const std::vector<Matrix>& grads) {
  const double lr = cfg_.learning_rate;
  if (cfg_.optimizer == OptimizerKind::GradientDescent) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto& w = net.layers[l].weights.data;
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * grads[l].data[k];
    }
  } else {
    if (first_moment_.size() != net.layers.size()) {
      first_moment_.clear();
      second_moment_.clear();
      for (const auto& layer : net.layers) {
        first_moment_.emplace_back(layer.post_dim(), layer.pre_dim());
        second_moment_.emplace_back(layer.post_dim(), layer.pre_dim());
      }
      steps_ = 0;
    }
    ++steps_;
    const double b1 = cfg_.adam_beta1;
    const double b2 = cfg_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto& w = net.layers[l].weights.data;
      auto& m = first_moment_[l].data;
      auto& v = second_moment_[l].data;
      const auto& g = grads[l].data;
      const auto& mask = net.layers[l].mask;
      for (std::size_t k = 0; k < w.size(); ++k) {
        if (!mask[k]) {
          m[k] = 0.0;
          v[k] = 0.0;
          continue;
        }
        m[k] = b1 * m[k] + (1.0 - b1) * g[k];
        v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
        w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.adam_epsilon);
      }
    }
  }
  net.apply_masks();
}

double Trainer::train_epoch(Network& net, std::span<const Sequence> data) {
  net.validate();
  if (data.empty()) throw ContractError("train_epoch: empty dataset");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (cfg_.shuffle) {
    Rng rng(cfg_.seed + 0x9E3779B97F4A7C15ULL * (epochs_ + 1));
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.next() % i);
      std::swap(order[i - 1], order[j]);
    }
  }
  net.apply_masks();

  double sq = 0.0;
  std::size_t count = 0;
  Window window(net, cfg_);
  for (std::size_t idx : order) {
    const auto& seq = data[idx];
    check_sequence(net, seq);
    auto state = zero_state(net);
    for (std::size_t begin = 0; begin < seq.spikes.rows; begin += cfg_.batch_length) {
      const std::size_t end = std::min(begin + cfg_.batch_length, seq.spikes.rows);
      double window_sq = 0.0;
      window.forward(seq, begin, end, state, window_sq, true);
      sq += window_sq;
      const std::size_t n = (end - begin) * net.config.output_dim();
      count += n;
      if (!std::isfinite(window_sq)) {
        ++epochs_;
        return std::numeric_limits<double>::quiet_NaN();
      }
      if (cfg_.learning_rate > 0.0) apply_update(net, window.backward(seq, static_cast<double>(n)));
    }
  }
  ++epochs_;
  if (count == 0) throw ContractError("train_epoch: dataset has no timesteps");
  return sq / static_cast<double>(count);
}

double train_epoch(Network& net, std::span<const Sequence> data, const TrainConfig& cfg) {
  Trainer trainer(cfg);
  return trainer.train_epoch(net, data);
}

PretrainResult pretrain(const NetworkConfig& config, std::span<const Sequence> train, std::span<const Sequence> val,
                        const TrainConfig& cfg, const EpochCallback& on_epoch) {
  return pretrain(Network::initialize(config), train, val, cfg, on_epoch);
}

PretrainResult pretrain(Network net, std::span<const Sequence> train, std::span<const Sequence> val,
                        const TrainConfig& cfg, const EpochCallback& on_epoch) {
  Trainer trainer(cfg);
  PretrainResult result;
  double val_loss = validate(net, val);
  if (!std::isfinite(val_loss)) throw DivergenceError("pretrain: initial validation loss is not finite");
  double best = val_loss;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double train_loss = trainer.train_epoch(net, train);
    if (!std::isfinite(train_loss)) {
      throw DivergenceError("pretrain: training loss became non-finite at epoch " + std::to_string(epoch));
    }
    val_loss = validate(net, val);
    if (!std::isfinite(val_loss)) {
      throw DivergenceError("pretrain: validation loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.log.push_back({epoch, train_loss, val_loss});
    if (on_epoch) on_epoch(result.log.back());
    if (val_loss < best) {
      best = val_loss;
      since_best = 0;
    } else if (cfg.early_stop_patience > 0 && ++since_best >= cfg.early_stop_patience) {
      break;
    }
  }
  result.net = std::move(net);
  result.target_loss = val_loss;
  return result;
}

}  // namespace snnprune
