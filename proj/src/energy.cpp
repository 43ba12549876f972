#include "snnprune/energy.hpp"

#include <cmath>

#include "snnprune/error.hpp"

namespace snnprune {

std::string to_string(UpdateCountMode mode) {
  return mode == UpdateCountMode::PaperConsistent ? "paper-consistent" : "per-neuron";
}

UpdateCountMode update_count_mode_from_string(const std::string& s) {
  if (s == "paper-consistent") return UpdateCountMode::PaperConsistent;
  if (s == "per-neuron") return UpdateCountMode::PerNeuron;
  throw ContractError("unknown update-count mode '" + s + "'");
}

void EnergyParams::validate() const {
  if (!(e_ac_pj >= 0.0) || !(e_update_pj >= 0.0)) throw ContractError("EnergyParams: energies must be >= 0");
  if (!(dt_ms > 0.0)) throw ContractError("EnergyParams: dt_ms must be > 0");
}

double energy_per_timestep(double avg_acs, std::size_t n_neurons, const EnergyParams& params) {
  params.validate();
  if (!(avg_acs >= 0.0)) throw ContractError("energy_per_timestep: avg_acs must be >= 0");
  const double updates = params.mode == UpdateCountMode::PaperConsistent ? 1.0 : static_cast<double>(n_neurons);
  return avg_acs * params.e_ac_pj + updates * params.e_update_pj;
}

double average_power(double energy_pj, double dt_ms) {
  if (!(dt_ms > 0.0)) throw ContractError("average_power: dt_ms must be > 0");
  return energy_pj / dt_ms / 1000.0;
}

EnergyReport energy_report(double avg_acs, std::size_t n_neurons, const EnergyParams& params) {
  EnergyReport r;
  r.energy_pj_per_timestep = energy_per_timestep(avg_acs, n_neurons, params);
  r.power_uw = average_power(r.energy_pj_per_timestep, params.dt_ms);
  r.mode = params.mode;
  r.params = params;
  return r;
}

}  // namespace snnprune
