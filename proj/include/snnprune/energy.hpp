#pragma once

#include <cstddef>
#include <string>

namespace snnprune {

/// How many neuron-update terms enter the per-timestep energy.
///
/// `PaperConsistent` charges a single update per timestep, which is what the
/// published SENECA table values add up to. `PerNeuron` charges one update per
/// neuron, which is what a LIF update per neuron per step physically implies.
enum class UpdateCountMode { PaperConsistent, PerNeuron };

std::string to_string(UpdateCountMode mode);
UpdateCountMode update_count_mode_from_string(const std::string& s);

struct EnergyParams {
  double e_ac_pj = 12.7;
  double e_update_pj = 14.6;
  double dt_ms = 4.0;
  UpdateCountMode mode = UpdateCountMode::PaperConsistent;

  void validate() const;
};

struct EnergyReport {
  double energy_pj_per_timestep = 0.0;
  double power_uw = 0.0;
  UpdateCountMode mode = UpdateCountMode::PaperConsistent;
  EnergyParams params;
};

double energy_per_timestep(double avg_acs, std::size_t n_neurons, const EnergyParams& params);

/// pJ per ms is nW; divide by 1000 for uW.
double average_power(double energy_pj, double dt_ms);

EnergyReport energy_report(double avg_acs, std::size_t n_neurons, const EnergyParams& params);

}  // namespace snnprune
