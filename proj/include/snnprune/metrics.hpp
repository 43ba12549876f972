#pragma once

#include <span>
#include <string>

#include "snnprune/network.hpp"

namespace snnprune {

enum class OpsKind { AC, MAC };

std::string to_string(OpsKind kind);

struct MetricsReport {
  double r2 = 0.0;
  double connection_sparsity = 0.0;           // over all weight layers
  double prunable_connection_sparsity = 0.0;  // hidden (prunable) layers only
  double activation_sparsity = 0.0;           // pooled over layers
  double activation_sparsity_layer_mean = 0.0;
  double effective_ops = 0.0;                 // average per timestep
  OpsKind ops_kind = OpsKind::AC;
};

/// Coefficient of determination per output column, averaged over columns.
/// Throws DegenerateInputError when a truth column is constant.
double r_squared(const Matrix& pred, const Matrix& truth);

/// Zero-valued effective weights over all weights.
double connection_sparsity(const Network& net);
double prunable_connection_sparsity(const Network& net);

struct ActivationOptions {
  bool include_input = true;
};

/// Fraction of zero activations pooled over every included layer, timestep
/// and record.
double activation_sparsity(std::span<const ActivationRecord> records, ActivationOptions opts = {});
double activation_sparsity(const ActivationRecord& record, ActivationOptions opts = {});

/// Mean over included layers of each layer's zero fraction.
double activation_sparsity_layer_mean(std::span<const ActivationRecord> records, ActivationOptions opts = {});

/// Average synaptic operations per timestep. AC counts (nonzero presynaptic
/// activation, nonzero effective weight) pairs; MAC counts every nonzero
/// effective weight at every timestep.
double effective_ops(std::span<const ActivationRecord> records, const Network& net, OpsKind kind = OpsKind::AC);
double effective_ops(const ActivationRecord& record, const Network& net, OpsKind kind = OpsKind::AC);

}  // namespace snnprune
