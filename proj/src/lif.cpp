#include "snnprune/lif.hpp"

#include <cmath>
#include <string>

#include "snnprune/error.hpp"

namespace snnprune {

double LifParams::decay() const { return std::exp(-dt / tau); }

void LifParams::validate() const {
  if (!(tau > 0.0)) throw ContractError("LifParams: tau must be > 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ContractError("LifParams: dt must be finite and > 0");
}

std::vector<double> lif_membrane_update(std::span<const double> u_prev,
                                        std::span<const double> input_current,
                                        const LifParams& params) {
  if (u_prev.size() != input_current.size()) {
    throw ContractError("lif_membrane_update: membrane has " + std::to_string(u_prev.size()) +
                        " entries but input current has " + std::to_string(input_current.size()));
  }
  const double decay = params.decay();
  std::vector<double> u(u_prev.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = u_prev[i] * decay + input_current[i];
  return u;
}

SpikeResult spike_and_reset(std::span<const double> u, const LifParams& params) {
  SpikeResult out{std::vector<std::uint8_t>(u.size(), 0), std::vector<double>(u.begin(), u.end())};
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] >= params.threshold) {
      out.spikes[i] = 1;
      out.membrane[i] = params.reset_value;
    }
  }
  return out;
}

}  // namespace snnprune
