#include "snnprune/metrics.hpp"

#include "snnprune/error.hpp"

namespace snnprune {

std::string to_string(OpsKind kind) { return kind == OpsKind::AC ? "AC" : "MAC"; }

double r_squared(const Matrix& pred, const Matrix& truth) {
  if (pred.rows != truth.rows || pred.cols != truth.cols) throw ContractError("r_squared: shape mismatch");
  if (truth.rows < 2 || truth.cols == 0) throw ContractError("r_squared: need at least 2 rows");
  double total = 0.0;
  for (std::size_t k = 0; k < truth.cols; ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < truth.rows; ++i) mean += truth(i, k);
    mean /= static_cast<double>(truth.rows);
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < truth.rows; ++i) {
      const double r = truth(i, k) - pred(i, k);
      const double d = truth(i, k) - mean;
      ss_res += r * r;
      ss_tot += d * d;
    }
    if (ss_tot == 0.0) {
      throw DegenerateInputError("r_squared: ground-truth component " + std::to_string(k) + " is constant");
    }
    total += 1.0 - ss_res / ss_tot;
  }
  return total / static_cast<double>(truth.cols);
}

namespace {

struct Counts {
  std::size_t zeros = 0;
  std::size_t total = 0;
};

Counts weight_zeros(const Network& net, bool prunable_only) {
  Counts c;
  for (const auto& layer : net.layers) {
    if (prunable_only && !layer.prunable) continue;
    for (std::size_t k = 0; k < layer.size(); ++k) {
      if (!layer.mask[k] || layer.weights.data[k] == 0.0) ++c.zeros;
    }
    c.total += layer.size();
  }
  return c;
}

std::size_t first_layer(ActivationOptions opts) { return opts.include_input ? 0 : 1; }

void check_records(std::span<const ActivationRecord> records) {
  if (records.empty()) throw ContractError("activation metrics: no records");
  std::size_t steps = 0;
  for (const auto& r : records) steps += r.timesteps;
  if (steps == 0) throw ContractError("activation metrics: records are empty");
}

}  // namespace

double connection_sparsity(const Network& net) {
  const auto c = weight_zeros(net, false);
  return c.total ? static_cast<double>(c.zeros) / static_cast<double>(c.total) : 0.0;
}

double prunable_connection_sparsity(const Network& net) {
  const auto c = weight_zeros(net, true);
  return c.total ? static_cast<double>(c.zeros) / static_cast<double>(c.total) : 0.0;
}

double activation_sparsity(std::span<const ActivationRecord> records, ActivationOptions opts) {
  check_records(records);
  Counts c;
  for (const auto& r : records) {
    for (std::size_t l = first_layer(opts); l < r.num_layers(); ++l) {
      for (double v : r.values[l]) c.zeros += (v == 0.0);
      c.total += r.values[l].size();
    }
  }
  return c.total ? static_cast<double>(c.zeros) / static_cast<double>(c.total) : 1.0;
}

double activation_sparsity(const ActivationRecord& record, ActivationOptions opts) {
  return activation_sparsity(std::span<const ActivationRecord>(&record, 1), opts);
}

double activation_sparsity_layer_mean(std::span<const ActivationRecord> records, ActivationOptions opts) {
  check_records(records);
  const std::size_t n_layers = records.front().num_layers();
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t l = first_layer(opts); l < n_layers; ++l) {
    Counts c;
    for (const auto& r : records) {
      if (r.num_layers() != n_layers) throw ContractError("activation metrics: records disagree on topology");
      for (double v : r.values[l]) c.zeros += (v == 0.0);
      c.total += r.values[l].size();
    }
    if (c.total) {
      sum += static_cast<double>(c.zeros) / static_cast<double>(c.total);
      ++used;
    }
  }
  return used ? sum / static_cast<double>(used) : 1.0;
}

double effective_ops(std::span<const ActivationRecord> records, const Network& net, OpsKind kind) {
  net.validate();
  std::size_t steps = 0;
  double ops = 0.0;

  // Nonzero effective weights per presynaptic column (AC) and in total (MAC).
  std::vector<std::vector<std::size_t>> fan_out(net.layers.size());
  std::size_t nonzero_total = 0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    fan_out[l].assign(layer.pre_dim(), 0);
    for (std::size_t i = 0; i < layer.post_dim(); ++i) {
      for (std::size_t j = 0; j < layer.pre_dim(); ++j) {
        if (layer.effective_weight(i, j) != 0.0) ++fan_out[l][j];
      }
    }
    for (auto n : fan_out[l]) nonzero_total += n;
  }

  for (const auto& r : records) {
    if (r.dims != net.config.layer_dims) throw ContractError("effective_ops: record topology does not match network");
    steps += r.timesteps;
    if (kind == OpsKind::MAC) {
      ops += static_cast<double>(nonzero_total) * static_cast<double>(r.timesteps);
      continue;
    }
    std::size_t count = 0;
    for (std::size_t t = 0; t < r.timesteps; ++t) {
      for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto act = r.at(l, t);
        for (std::size_t j = 0; j < act.size(); ++j) {
          if (act[j] != 0.0) count += fan_out[l][j];
        }
      }
    }
    ops += static_cast<double>(count);
  }
  return steps ? ops / static_cast<double>(steps) : 0.0;
}

double effective_ops(const ActivationRecord& record, const Network& net, OpsKind kind) {
  return effective_ops(std::span<const ActivationRecord>(&record, 1), net, kind);
}

}  // namespace snnprune
