#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace snnprune {

/// Leaky integrate-and-fire parameters for one layer.
///
/// `tau` and `dt` share a time unit (milliseconds by convention). An infinite
/// `tau` gives a perfect integrator (decay factor 1).
struct LifParams {
  double tau = 5.0;
  double threshold = 1.0;
  double reset_value = 0.0;
  double dt = 1.0;

  /// Per-step membrane retention exp(-dt / tau).
  double decay() const;

  /// Throws ContractError unless tau > 0 and dt > 0.
  void validate() const;

  bool operator==(const LifParams&) const = default;
};

/// u_prev * exp(-dt/tau) + input_current, elementwise.
std::vector<double> lif_membrane_update(std::span<const double> u_prev,
                                        std::span<const double> input_current,
                                        const LifParams& params);

struct SpikeResult {
  std::vector<std::uint8_t> spikes;
  std::vector<double> membrane;
};

/// Fires where u >= threshold and resets those entries to reset_value.
SpikeResult spike_and_reset(std::span<const double> u, const LifParams& params);

}  // namespace snnprune
