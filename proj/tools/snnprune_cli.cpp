#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "snnprune/checkpoint.hpp"
#include "snnprune/error.hpp"
#include "snnprune/experiment.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kDataError = 3,
  kDivergence = 4,
};

struct Options {
  std::string config;
  std::string checkpoint;
  std::string out;
  std::string mode;
  std::string scope;
};

snnprune::ExperimentConfig load(const Options& opt) {
  auto cfg = snnprune::load_experiment_config(opt.config);
  if (!opt.out.empty()) {
    cfg.output_dir_text = opt.out;
    cfg.output_dir = opt.out;
  }
  try {
    if (!opt.mode.empty()) cfg.prune.mode = snnprune::prune_mode_from_string(opt.mode);
    if (!opt.scope.empty()) cfg.prune.scope = snnprune::prune_scope_from_string(opt.scope);
  } catch (const snnprune::ContractError& e) {
    throw snnprune::ConfigError(e.what());
  }
  return cfg;
}

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", opt.out, "Output directory (overrides output_dir)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train, prune and evaluate LIF spiking networks for velocity decoding"};
  app.require_subcommand(1);
  Options opt;

  auto* synth = app.add_subcommand("synth", "Generate the synthetic session described by the config");
  add_common(synth, opt);

  auto* pretrain = app.add_subcommand("pretrain", "Train the dense network and store its checkpoint");
  add_common(pretrain, opt);

  auto* prune = app.add_subcommand("prune", "Run the pruning controller on a pretrained checkpoint");
  add_common(prune, opt);
  prune->add_option("--checkpoint", opt.checkpoint, "Pretrained checkpoint (default: <out>/pretrained.ckpt)");
  prune->add_option("--mode", opt.mode, "full-adaptive | tolerance-only | fixed")
      ->check(CLI::IsMember({"full-adaptive", "tolerance-only", "fixed"}));
  prune->add_option("--scope", opt.scope, "per-layer | global")->check(CLI::IsMember({"per-layer", "global"}));

  auto* eval = app.add_subcommand("eval", "Report metrics and energy on the test split");
  add_common(eval, opt);
  eval->add_option("--checkpoint", opt.checkpoint, "Checkpoint to evaluate")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    const auto cfg = load(opt);
    if (synth->parsed()) {
      const auto r = snnprune::cmd_synth(cfg);
      std::cout << "wrote " << r.session_path.string() << " (spike rate " << r.spike_rate << ")\n";
    } else if (pretrain->parsed()) {
      const auto r = snnprune::cmd_pretrain(cfg);
      std::cout << "pretrained " << r.epochs << " epochs, target loss " << r.target_loss << ", val R2 " << r.val_r2
                << "\nwrote " << r.checkpoint_path.string() << "\n";
    } else if (prune->parsed()) {
      std::optional<std::filesystem::path> ckpt;
      if (!opt.checkpoint.empty()) ckpt = opt.checkpoint;
      const auto r = snnprune::cmd_prune(cfg, ckpt);
      std::cout << "pruned " << r.result.final_pruned << " of prunable weights in " << r.result.total_epochs
                << " epochs (" << r.result.termination << ")\nwrote " << r.checkpoint_path.string() << "\n";
    } else if (eval->parsed()) {
      const auto r = snnprune::cmd_eval(cfg, opt.checkpoint);
      std::cout << "R2 " << r.metrics.r2 << ", connection sparsity " << r.metrics.connection_sparsity
                << ", effective ops " << r.metrics.effective_ops << " ACs, " << r.energy_paper.power_uw
                << " uW\nwrote " << r.json_path.string() << "\n";
    }
  } catch (const snnprune::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const snnprune::DatasetError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const snnprune::CheckpointError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const snnprune::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
