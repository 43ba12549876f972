#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "snnprune/dataset.hpp"
#include "snnprune/energy.hpp"
#include "snnprune/metrics.hpp"
#include "snnprune/network.hpp"
#include "snnprune/prune.hpp"
#include "snnprune/train.hpp"

namespace snnprune {

/// One declarative experiment document (JSON). See README for the schema.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;    // resolved
  std::filesystem::path dataset_path;  // resolved
  std::string output_dir_text;         // as written in the document
  std::string dataset_path_text;
  std::optional<SyntheticSpec> synthetic;
  SplitSpec split;
  NetworkConfig network;  // input_dim is filled from the dataset at run time
  std::vector<std::size_t> hidden{50, 50, 50};
  TrainConfig train;
  TrainConfig finetune;
  PruneHyperParams prune;
  EnergyParams energy;
  ActivationOptions activation;

  /// Canonical JSON of the effective configuration (after overrides).
  nlohmann::json to_json() const;
  /// SHA-256 hex digest of to_json().dump().
  std::string digest() const;

  /// Network topology for a dataset with `input_dim` channels.
  NetworkConfig network_for(std::size_t input_dim) const;
};

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Throws ConfigError on missing/invalid fields.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct SynthResult {
  std::filesystem::path session_path;
  double spike_rate = 0.0;
};

struct PretrainOutput {
  std::filesystem::path checkpoint_path;
  std::filesystem::path trace_path;
  double target_loss = 0.0;
  double val_r2 = 0.0;
  std::size_t epochs = 0;
};

struct PruneOutput {
  std::filesystem::path checkpoint_path;
  std::filesystem::path trace_path;
  std::filesystem::path report_path;
  PruneResult result;
};

struct EvalOutput {
  std::filesystem::path json_path;
  std::filesystem::path text_path;
  MetricsReport metrics;
  double mac_ops = 0.0;
  EnergyReport energy_paper;
  EnergyReport energy_per_neuron;
  nlohmann::json record;
};

SynthResult cmd_synth(const ExperimentConfig& cfg);
PretrainOutput cmd_pretrain(const ExperimentConfig& cfg);
/// `checkpoint` defaults to <output_dir>/pretrained.ckpt.
PruneOutput cmd_prune(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& checkpoint = {});
EvalOutput cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint);

/// Evaluates a network on sequences; energy fields use `cfg.energy`.
EvalOutput evaluate(const Network& net, std::span<const Sequence> data, const EnergyParams& energy,
                    ActivationOptions activation = {});

/// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& data);

}  // namespace snnprune
