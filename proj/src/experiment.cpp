#include "snnprune/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "snnprune/checkpoint.hpp"
#include "snnprune/error.hpp"

namespace snnprune {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: field '") + key + "': " + e.what());
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

std::string real_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(DatasetError::Kind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw DatasetError(DatasetError::Kind::Io, "write failed for " + path.string());
}

void ensure_output_dir(const ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw DatasetError(DatasetError::Kind::Io, "cannot create output directory " + cfg.output_dir.string());
}

SpikeSession load_dataset(const ExperimentConfig& cfg) {
  if (!fs::exists(cfg.dataset_path)) {
    throw ConfigError("config: dataset path " + cfg.dataset_path.string() + " does not exist");
  }
  return load_session(cfg.dataset_path);
}

struct Splits {
  std::vector<Sequence> train;
  std::vector<Sequence> val;
  std::vector<Sequence> test;
};

Splits split_dataset(const ExperimentConfig& cfg, const SpikeSession& session) {
  const auto split = split_session(session.timesteps(), cfg.split);
  Splits s{extract(session, split.train), extract(session, split.val), extract(session, split.test)};
  if (s.train.empty() || s.val.empty() || s.test.empty()) {
    throw DatasetError(DatasetError::Kind::TooShort, "session too short for a train/val/test split");
  }
  return s;
}

Matrix concat_predictions(const Network& net, std::span<const Sequence> data, std::vector<ActivationRecord>* records,
                          Matrix* truth) {
  std::size_t rows = 0;
  for (const auto& seq : data) rows += seq.spikes.rows;
  Matrix pred(rows, net.config.output_dim());
  if (truth) *truth = Matrix(rows, net.config.output_dim());
  std::size_t offset = 0;
  for (const auto& seq : data) {
    auto result = network_forward(net, seq.spikes);
    std::copy(result.prediction.data.begin(), result.prediction.data.end(),
              pred.data.begin() + static_cast<std::ptrdiff_t>(offset * pred.cols));
    if (truth) {
      std::copy(seq.velocity.data.begin(), seq.velocity.data.end(),
                truth->data.begin() + static_cast<std::ptrdiff_t>(offset * pred.cols));
    }
    offset += seq.spikes.rows;
    if (records) records->push_back(std::move(result.record));
  }
  return pred;
}

double r2_on(const Network& net, std::span<const Sequence> data) {
  Matrix truth;
  const Matrix pred = concat_predictions(net, data, nullptr, &truth);
  return r_squared(pred, truth);
}

class CsvTrace {
 public:
  CsvTrace(const fs::path& path, const std::string& digest) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw DatasetError(DatasetError::Kind::Io, "cannot write " + path.string());
    out_ << "# config_digest=" << digest << '\n' << kTraceCsvHeader << '\n';
    out_.flush();
  }
  void row(const std::string& line) {
    out_ << line << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

json train_to_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate},
          {"max_epochs", t.max_epochs},
          {"batch_length", t.batch_length},
          {"surrogate_width", t.surrogate_width},
          {"optimizer", to_string(t.optimizer)},
          {"shuffle", t.shuffle},
          {"early_stop_patience", t.early_stop_patience}};
}

TrainConfig train_from_json(const json& j, TrainConfig base) {
  base.learning_rate = get_or(j, "learning_rate", base.learning_rate);
  base.max_epochs = get_or(j, "max_epochs", base.max_epochs);
  base.batch_length = get_or(j, "batch_length", base.batch_length);
  base.surrogate_width = get_or(j, "surrogate_width", base.surrogate_width);
  base.shuffle = get_or(j, "shuffle", base.shuffle);
  base.early_stop_patience = get_or(j, "early_stop_patience", base.early_stop_patience);
  if (j.contains("optimizer")) {
    try {
      base.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
    } catch (const ContractError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  return base;
}

}  // namespace

NetworkConfig ExperimentConfig::network_for(std::size_t input_dim) const {
  NetworkConfig net = network;
  net.layer_dims.clear();
  net.layer_dims.push_back(input_dim);
  net.layer_dims.insert(net.layer_dims.end(), hidden.begin(), hidden.end());
  net.layer_dims.push_back(2);
  return net;
}

json ExperimentConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["output_dir"] = output_dir_text;
  j["dataset"]["path"] = dataset_path_text;
  if (synthetic) {
    const auto& s = *synthetic;
    j["dataset"]["synthetic"] = {{"seed", s.seed},
                                 {"channels", s.channels},
                                 {"timesteps", s.timesteps},
                                 {"rate", s.rate},
                                 {"mixing_density", s.mixing_density},
                                 {"label_tau_steps", s.label_tau_steps},
                                 {"dt_ms", s.dt_ms},
                                 {"session_id", s.session_id}};
  }
  j["dataset"]["split"] = {{"subsessions", split.n_subsessions},
                           {"train", split.train_fraction},
                           {"val", split.val_fraction},
                           {"test", split.test_fraction}};
  json taus = json::array();
  for (const auto& p : network.lif) taus.push_back(p.tau);
  j["network"] = {{"hidden", hidden},
                  {"tau", taus},
                  {"threshold", network.lif.front().threshold},
                  {"reset_value", network.lif.front().reset_value},
                  {"dt", network.lif.front().dt},
                  {"init_gain", network.init_gain}};
  j["train"] = train_to_json(train);
  j["finetune"] = train_to_json(finetune);
  j["prune"] = {{"mode", to_string(prune.mode)},
                {"scope", to_string(prune.scope)},
                {"p_start", prune.p_start},
                {"patience", prune.patience},
                {"tolerance", prune.tolerance},
                {"p_min", prune.p_min},
                {"pruned_max", prune.pruned_max}};
  j["energy"] = {{"e_ac_pj", energy.e_ac_pj}, {"e_update_pj", energy.e_update_pj}, {"dt_ms", energy.dt_ms}};
  j["metrics"] = {{"include_input_activations", activation.include_input}};
  return j;
}

std::string ExperimentConfig::digest() const { return sha256_hex(to_json().dump()); }

ExperimentConfig parse_experiment_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  ExperimentConfig cfg;
  if (!doc.contains("seed")) throw ConfigError("config: 'seed' is mandatory");
  cfg.seed = get_or<std::uint64_t>(doc, "seed", 0);
  cfg.output_dir_text = get_or<std::string>(doc, "output_dir", "out");
  cfg.output_dir = resolve(base_dir, cfg.output_dir_text);

  const json dataset = doc.value("dataset", json::object());
  if (!dataset.contains("path")) throw ConfigError("config: 'dataset.path' is mandatory");
  cfg.dataset_path_text = get_or<std::string>(dataset, "path", "");
  cfg.dataset_path = resolve(base_dir, cfg.dataset_path_text);
  if (dataset.contains("synthetic")) {
    const auto& s = dataset.at("synthetic");
    SyntheticSpec spec;
    spec.seed = get_or<std::uint64_t>(s, "seed", cfg.seed);
    spec.channels = get_or(s, "channels", spec.channels);
    spec.timesteps = get_or(s, "timesteps", spec.timesteps);
    spec.rate = get_or(s, "rate", spec.rate);
    spec.mixing_density = get_or(s, "mixing_density", spec.mixing_density);
    spec.label_tau_steps = get_or(s, "label_tau_steps", spec.label_tau_steps);
    spec.dt_ms = get_or(s, "dt_ms", spec.dt_ms);
    spec.session_id = get_or(s, "session_id", spec.session_id);
    cfg.synthetic = spec;
  }
  if (dataset.contains("split")) {
    const auto& s = dataset.at("split");
    cfg.split.n_subsessions = get_or(s, "subsessions", cfg.split.n_subsessions);
    cfg.split.train_fraction = get_or(s, "train", cfg.split.train_fraction);
    cfg.split.val_fraction = get_or(s, "val", cfg.split.val_fraction);
    cfg.split.test_fraction = get_or(s, "test", cfg.split.test_fraction);
  }

  const json net = doc.value("network", json::object());
  cfg.hidden = get_or(net, "hidden", cfg.hidden);
  if (cfg.hidden.empty()) throw ConfigError("config: network.hidden must list at least one layer");
  const std::size_t n_layers = cfg.hidden.size() + 1;
  LifParams lif;
  lif.threshold = get_or(net, "threshold", lif.threshold);
  lif.reset_value = get_or(net, "reset_value", lif.reset_value);
  lif.dt = get_or(net, "dt", lif.dt);
  lif.tau = 5.0 * lif.dt;
  std::vector<double> taus(n_layers, lif.tau);
  if (net.contains("tau")) {
    const auto& t = net.at("tau");
    if (t.is_number()) {
      taus.assign(n_layers, t.get<double>());
    } else if (t.is_array() && t.size() == n_layers) {
      taus = t.get<std::vector<double>>();
    } else {
      throw ConfigError("config: network.tau must be a number or one value per weight layer");
    }
  }
  cfg.network.spiking.assign(n_layers, true);
  cfg.network.spiking.back() = false;
  cfg.network.prunable.assign(n_layers, true);
  cfg.network.prunable.back() = false;
  for (double tau : taus) {
    LifParams p = lif;
    p.tau = tau;
    cfg.network.lif.push_back(p);
  }
  cfg.network.seed = cfg.seed;
  cfg.network.init_gain = get_or(net, "init_gain", cfg.network.init_gain);

  cfg.train.seed = cfg.seed;
  cfg.train = train_from_json(doc.value("train", json::object()), cfg.train);
  cfg.finetune = train_from_json(doc.value("finetune", json::object()), cfg.train);

  const json pr = doc.value("prune", json::object());
  try {
    if (pr.contains("mode")) cfg.prune.mode = prune_mode_from_string(pr.at("mode").get<std::string>());
    if (pr.contains("scope")) cfg.prune.scope = prune_scope_from_string(pr.at("scope").get<std::string>());
  } catch (const ContractError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.prune.p_start = get_or(pr, "p_start", cfg.prune.p_start);
  cfg.prune.patience = get_or(pr, "patience", cfg.prune.patience);
  cfg.prune.tolerance = get_or(pr, "tolerance", cfg.prune.tolerance);
  cfg.prune.p_min = get_or(pr, "p_min", cfg.prune.p_min);
  cfg.prune.pruned_max = get_or(pr, "pruned_max", cfg.prune.pruned_max);

  const json en = doc.value("energy", json::object());
  cfg.energy.e_ac_pj = get_or(en, "e_ac_pj", cfg.energy.e_ac_pj);
  cfg.energy.e_update_pj = get_or(en, "e_update_pj", cfg.energy.e_update_pj);
  cfg.energy.dt_ms = get_or(en, "dt_ms", cfg.energy.dt_ms);

  const json me = doc.value("metrics", json::object());
  cfg.activation.include_input = get_or(me, "include_input_activations", cfg.activation.include_input);

  try {
    cfg.network_for(1).validate();
    cfg.train.validate();
    cfg.finetune.validate();
    cfg.prune.validate();
    cfg.energy.validate();
  } catch (const ContractError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return parse_experiment_config(doc, path.parent_path());
}

SynthResult cmd_synth(const ExperimentConfig& cfg) {
  if (!cfg.synthetic) throw ConfigError("config: synth needs a 'dataset.synthetic' block");
  ensure_output_dir(cfg);
  if (cfg.dataset_path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(cfg.dataset_path.parent_path(), ec);
  }
  const auto session = generate_synthetic(*cfg.synthetic);
  save_session(cfg.dataset_path, session);

  std::size_t ones = 0;
  for (auto b : session.spikes.data) ones += b;
  SynthResult out{cfg.dataset_path, session.spikes.data.empty()
                                        ? 0.0
                                        : static_cast<double>(ones) / static_cast<double>(session.spikes.data.size())};
  json report = {{"config_digest", cfg.digest()},
                 {"session_id", session.session_id},
                 {"session_path", cfg.dataset_path_text},
                 {"channels", session.channels},
                 {"timesteps", session.timesteps()},
                 {"spike_rate", out.spike_rate}};
  write_text(cfg.output_dir / "synth_report.json", report.dump(2) + "\n");
  return out;
}

PretrainOutput cmd_pretrain(const ExperimentConfig& cfg) {
  const auto session = load_dataset(cfg);
  const auto data = split_dataset(cfg, session);
  ensure_output_dir(cfg);
  const std::string digest = cfg.digest();

  PretrainOutput out;
  out.trace_path = cfg.output_dir / "pretrain_trace.csv";
  CsvTrace trace(out.trace_path, digest);
  std::size_t index = 0;
  const auto log_epoch = [&](const EpochLog& e) {
    TraceEvent ev;
    ev.type = TraceEventType::Epoch;
    ev.epoch = e.epoch;
    ev.train_loss = e.train_loss;
    ev.val_loss = e.val_loss;
    trace.row(trace_csv_row(index++, ev));
  };
  auto result = pretrain(cfg.network_for(session.channels), data.train, data.val, cfg.train, log_epoch);

  out.target_loss = result.target_loss;
  out.val_r2 = r2_on(result.net, data.val);
  out.epochs = result.log.size();
  out.checkpoint_path = cfg.output_dir / "pretrained.ckpt";
  CheckpointFile file{result.net,
                      {{"stage", "pretrained"},
                       {"config_digest", digest},
                       {"target_loss", result.target_loss},
                       {"session_id", session.session_id}}};
  save_checkpoint(out.checkpoint_path, file);

  json report = {{"config_digest", digest},
                 {"session_id", session.session_id},
                 {"epochs", out.epochs},
                 {"target_loss", out.target_loss},
                 {"val_r2", out.val_r2},
                 {"checkpoint", out.checkpoint_path.filename().generic_string()}};
  write_text(cfg.output_dir / "pretrain_report.json", report.dump(2) + "\n");
  return out;
}

PruneOutput cmd_prune(const ExperimentConfig& cfg, const std::optional<fs::path>& checkpoint) {
  const fs::path ckpt_path = checkpoint.value_or(cfg.output_dir / "pretrained.ckpt");
  if (!fs::exists(ckpt_path)) throw ConfigError("prune: checkpoint " + ckpt_path.string() + " does not exist");
  const auto ckpt = load_checkpoint(ckpt_path);
  const auto session = load_dataset(cfg);
  if (ckpt.net.config.input_dim() != session.channels) {
    throw DatasetError(DatasetError::Kind::DimensionMismatch, "prune: checkpoint input dimension does not match dataset");
  }
  const auto data = split_dataset(cfg, session);
  ensure_output_dir(cfg);
  const std::string digest = cfg.digest();
  const std::string tag = to_string(cfg.prune.mode) + "_" + to_string(cfg.prune.scope);

  PruneOutput out;
  out.trace_path = cfg.output_dir / ("prune_trace_" + tag + ".csv");
  out.checkpoint_path = cfg.output_dir / ("pruned_" + tag + ".ckpt");
  out.report_path = cfg.output_dir / ("prune_report_" + tag + ".json");

  CsvTrace trace(out.trace_path, digest);
  const TraceCallback on_event = [&](std::size_t i, const TraceEvent& e) {
    if (e.type != TraceEventType::Terminated) trace.row(trace_csv_row(i, e));
  };
  // The target loss is recomputed so it always matches the loaded weights.
  const double target = validate(ckpt.net, data.val);
  DatasetFineTuner tuner(data.train, data.val, cfg.finetune);
  out.result = adaptive_prune(ckpt.net, target, cfg.prune, tuner, on_event);

  const auto& r = out.result;
  CheckpointFile file{r.net,
                      {{"stage", "pruned"},
                       {"config_digest", digest},
                       {"target_loss", r.target_loss},
                       {"mode", to_string(cfg.prune.mode)},
                       {"scope", to_string(cfg.prune.scope)},
                       {"pruned", r.final_pruned},
                       {"session_id", session.session_id}}};
  save_checkpoint(out.checkpoint_path, file);

  json report = {{"config_digest", digest},
                 {"session_id", session.session_id},
                 {"mode", to_string(cfg.prune.mode)},
                 {"scope", to_string(cfg.prune.scope)},
                 {"target_loss", r.target_loss},
                 {"termination", r.termination},
                 {"final_pruned", r.final_pruned},
                 {"connection_sparsity", connection_sparsity(r.net)},
                 {"prunable_connection_sparsity", prunable_connection_sparsity(r.net)},
                 {"total_epochs", r.total_epochs},
                 {"optimal_epochs", r.optimal_epochs},
                 {"prune_events", r.trace.count(TraceEventType::PruneApplied)},
                 {"rollbacks", r.trace.count(TraceEventType::Rollback)},
                 {"val_r2", r2_on(r.net, data.val)},
                 {"rollback_bookkeeping", "pruned is recomputed from the masks, so a rollback restores the checkpointed fraction"},
                 {"checkpoint", out.checkpoint_path.filename().generic_string()}};
  write_text(out.report_path, report.dump(2) + "\n");
  return out;
}

EvalOutput evaluate(const Network& net, std::span<const Sequence> data, const EnergyParams& energy,
                    ActivationOptions activation) {
  EvalOutput out;
  std::vector<ActivationRecord> records;
  Matrix truth;
  const Matrix pred = concat_predictions(net, data, &records, &truth);
  auto& m = out.metrics;
  m.r2 = r_squared(pred, truth);
  m.connection_sparsity = connection_sparsity(net);
  m.prunable_connection_sparsity = prunable_connection_sparsity(net);
  m.activation_sparsity = activation_sparsity(records, activation);
  m.activation_sparsity_layer_mean = activation_sparsity_layer_mean(records, activation);
  m.effective_ops = effective_ops(records, net, OpsKind::AC);
  m.ops_kind = OpsKind::AC;
  out.mac_ops = effective_ops(records, net, OpsKind::MAC);

  std::size_t neurons = 0;
  for (std::size_t l = 1; l < net.config.layer_dims.size(); ++l) neurons += net.config.layer_dims[l];
  EnergyParams paper = energy;
  paper.mode = UpdateCountMode::PaperConsistent;
  EnergyParams per_neuron = energy;
  per_neuron.mode = UpdateCountMode::PerNeuron;
  out.energy_paper = energy_report(m.effective_ops, neurons, paper);
  out.energy_per_neuron = energy_report(m.effective_ops, neurons, per_neuron);

  const auto energy_json = [](const EnergyReport& e) {
    return json{{"energy_pj_per_timestep", e.energy_pj_per_timestep},
                {"power_uw", e.power_uw},
                {"mode", to_string(e.mode)},
                {"params", {{"e_ac_pj", e.params.e_ac_pj}, {"e_update_pj", e.params.e_update_pj}, {"dt_ms", e.params.dt_ms}}}};
  };
  out.record = {{"r2", m.r2},
                {"connection_sparsity", m.connection_sparsity},
                {"prunable_connection_sparsity", m.prunable_connection_sparsity},
                {"activation_sparsity", m.activation_sparsity},
                {"activation_sparsity_layer_mean", m.activation_sparsity_layer_mean},
                {"effective_ops", m.effective_ops},
                {"ops_kind", to_string(m.ops_kind)},
                {"dense_equivalent_macs", out.mac_ops},
                {"neurons", neurons},
                {"energy", {energy_json(out.energy_paper), energy_json(out.energy_per_neuron)}},
                {"energy_note",
                 "paper-consistent charges one neuron update per timestep (matches the published table); "
                 "per-neuron charges one update per hidden/readout neuron"}};
  return out;
}

EvalOutput cmd_eval(const ExperimentConfig& cfg, const fs::path& checkpoint) {
  if (!fs::exists(checkpoint)) throw ConfigError("eval: checkpoint " + checkpoint.string() + " does not exist");
  const auto ckpt = load_checkpoint(checkpoint);
  const auto session = load_dataset(cfg);
  if (ckpt.net.config.input_dim() != session.channels) {
    throw DatasetError(DatasetError::Kind::DimensionMismatch, "eval: checkpoint input dimension does not match dataset");
  }
  const auto data = split_dataset(cfg, session);
  ensure_output_dir(cfg);
  const std::string digest = cfg.digest();

  auto out = evaluate(ckpt.net, data.test, cfg.energy, cfg.activation);
  out.record["session_id"] = session.session_id;
  out.record["checkpoint"] = checkpoint.filename().generic_string();
  out.record["checkpoint_stage"] = ckpt.metadata.value("stage", "");
  json doc = {{"config_digest", digest}, {"sessions", json::array({out.record})}};

  const std::string stem = "eval_" + checkpoint.stem().string();
  out.json_path = cfg.output_dir / (stem + ".json");
  out.text_path = cfg.output_dir / (stem + ".txt");
  write_text(out.json_path, doc.dump(2) + "\n");

  std::ostringstream text;
  const auto& m = out.metrics;
  text << "config_digest=" << digest << '\n'
       << "session_id=" << session.session_id << '\n'
       << "checkpoint=" << checkpoint.filename().generic_string() << '\n'
       << "r2=" << real_text(m.r2) << '\n'
       << "connection_sparsity=" << real_text(m.connection_sparsity) << '\n'
       << "prunable_connection_sparsity=" << real_text(m.prunable_connection_sparsity) << '\n'
       << "activation_sparsity=" << real_text(m.activation_sparsity) << '\n'
       << "activation_sparsity_layer_mean=" << real_text(m.activation_sparsity_layer_mean) << '\n'
       << "effective_ops=" << real_text(m.effective_ops) << '\n'
       << "ops_kind=" << to_string(m.ops_kind) << '\n'
       << "dense_equivalent_macs=" << real_text(out.mac_ops) << '\n';
  for (const auto* e : {&out.energy_paper, &out.energy_per_neuron}) {
    const std::string prefix = "energy." + to_string(e->mode) + ".";
    text << prefix << "pj_per_timestep=" << real_text(e->energy_pj_per_timestep) << '\n'
         << prefix << "power_uw=" << real_text(e->power_uw) << '\n';
  }
  write_text(out.text_path, text.str());
  return out;
}

}  // namespace snnprune
