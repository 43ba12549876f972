#include "snnprune/prune.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <tuple>

#include "snnprune/checkpoint.hpp"
#include "snnprune/error.hpp"

namespace snnprune {

std::string to_string(PruneScope s) { return s == PruneScope::PerLayer ? "per-layer" : "global"; }

std::string to_string(PruneMode m) {
  switch (m) {
    case PruneMode::FullAdaptive: return "full-adaptive";
    case PruneMode::ToleranceOnly: return "tolerance-only";
    case PruneMode::Fixed: return "fixed";
  }
  return "?";
}

PruneScope prune_scope_from_string(const std::string& s) {
  if (s == "per-layer") return PruneScope::PerLayer;
  if (s == "global") return PruneScope::Global;
  throw ContractError("unknown prune scope '" + s + "' (expected per-layer or global)");
}

PruneMode prune_mode_from_string(const std::string& s) {
  if (s == "full-adaptive") return PruneMode::FullAdaptive;
  if (s == "tolerance-only") return PruneMode::ToleranceOnly;
  if (s == "fixed") return PruneMode::Fixed;
  throw ContractError("unknown prune mode '" + s + "' (expected full-adaptive, tolerance-only or fixed)");
}

std::string to_string(TraceEventType t) {
  switch (t) {
    case TraceEventType::PruneApplied: return "prune";
    case TraceEventType::Epoch: return "epoch";
    case TraceEventType::Rollback: return "rollback";
    case TraceEventType::Terminated: return "terminated";
  }
  return "?";
}

void PruneHyperParams::validate() const {
  if (!(p_min > 0.0)) throw ContractError("PruneHyperParams: p_min must be > 0");
  if (!(p_start >= p_min) || !(p_start <= 100.0)) throw ContractError("PruneHyperParams: need p_min <= p_start <= 100");
  if (!(pruned_max > 0.0 && pruned_max < 1.0)) throw ContractError("PruneHyperParams: pruned_max must lie in (0,1)");
  if (!(tolerance >= 0.0)) throw ContractError("PruneHyperParams: tolerance must be >= 0");
}

std::size_t PruneTrace::count(TraceEventType t) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [t](const TraceEvent& e) { return e.type == t; }));
}

namespace {

std::size_t round_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

std::string fmt_real(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::size_t> select_prune_targets(const WeightLayer& layer, std::size_t count) {
  std::vector<std::size_t> candidates;
  for (std::size_t k = 0; k < layer.mask.size(); ++k) {
    if (layer.mask[k]) candidates.push_back(k);
  }
  count = std::min(count, candidates.size());
  const auto by_magnitude = [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(layer.weights.data[a]);
    const double mb = std::abs(layer.weights.data[b]);
    return ma != mb ? ma < mb : a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(count), candidates.end(),
                    by_magnitude);
  candidates.resize(count);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

bool prune_cap_reached(const Network& net, PruneScope scope, double pruned_max) {
  if (scope == PruneScope::Global) {
    const std::size_t total = net.prunable_weight_count();
    return net.prunable_masked_count() >= round_count(pruned_max, total);
  }
  for (const auto& layer : net.layers) {
    if (layer.prunable && layer.masked_count() < round_count(pruned_max, layer.size())) return false;
  }
  return true;
}

PruneStepResult prune_step(Network& net, double rate_pct, PruneScope scope, double pruned_max) {
  net.validate();
  if (!(rate_pct >= 0.0)) throw ContractError("prune_step: rate must be >= 0");
  const double rate = rate_pct / 100.0;
  PruneStepResult result;
  result.removed_per_layer.assign(net.layers.size(), 0);

  if (scope == PruneScope::PerLayer) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      auto& layer = net.layers[l];
      if (!layer.prunable) continue;
      const std::size_t nominal = round_count(rate, layer.size());
      const std::size_t masked = layer.masked_count();
      const std::size_t cap = round_count(pruned_max, layer.size());
      const std::size_t allowed = cap > masked ? cap - masked : 0;
      const auto targets = select_prune_targets(layer, std::min(nominal, allowed));
      for (auto k : targets) layer.mask[k] = 0;
      layer.apply_mask();
      result.removed_per_layer[l] = targets.size();
      result.removed += targets.size();
      result.clamped = result.clamped || targets.size() < nominal;
    }
    return result;
  }

  // Global: pool every unmasked prunable weight, order by (|w|, layer, index).
  struct Candidate {
    double magnitude;
    std::size_t layer;
    std::size_t index;
  };
  std::vector<Candidate> pool;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    if (!layer.prunable) continue;
    for (std::size_t k = 0; k < layer.size(); ++k) {
      if (layer.mask[k]) pool.push_back({std::abs(layer.weights.data[k]), l, k});
    }
  }
  const std::size_t total = net.prunable_weight_count();
  const std::size_t nominal = round_count(rate, total);
  const std::size_t masked = net.prunable_masked_count();
  const std::size_t cap = round_count(pruned_max, total);
  const std::size_t allowed = cap > masked ? cap - masked : 0;
  const std::size_t count = std::min({nominal, allowed, pool.size()});
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count), pool.end(),
                    [](const Candidate& a, const Candidate& b) {
                      return std::tie(a.magnitude, a.layer, a.index) < std::tie(b.magnitude, b.layer, b.index);
                    });
  for (std::size_t n = 0; n < count; ++n) {
    net.layers[pool[n].layer].mask[pool[n].index] = 0;
    ++result.removed_per_layer[pool[n].layer];
  }
  net.apply_masks();
  result.removed = count;
  result.clamped = count < nominal;
  return result;
}

std::string trace_csv_row(std::size_t index, const TraceEvent& e) {
  return std::to_string(index) + "," + to_string(e.type) + "," + std::to_string(e.epoch) + "," +
         fmt_real(e.train_loss) + "," + fmt_real(e.val_loss) + "," + fmt_real(e.p_curr) + "," + fmt_real(e.pruned);
}

void write_trace_csv(std::ostream& out, const PruneTrace& trace) {
  out << kTraceCsvHeader << '\n';
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    if (trace.events[i].type == TraceEventType::Terminated) continue;
    out << trace_csv_row(i, trace.events[i]) << '\n';
  }
}

DatasetFineTuner::DatasetFineTuner(std::span<const Sequence> train, std::span<const Sequence> val,
                                   const TrainConfig& cfg)
    : train_(train), val_(val), trainer_(cfg) {}

double DatasetFineTuner::train_epoch(Network& net) { return trainer_.train_epoch(net, train_); }
double DatasetFineTuner::validate(const Network& net) { return snnprune::validate(net, val_); }
void DatasetFineTuner::on_rollback(const Network&) { trainer_.reset_optimizer(); }

namespace {

class Controller {
 public:
  Controller(Network net, double target_loss, const PruneHyperParams& hp, FineTuner& tuner,
             const TraceCallback& on_event)
      : hp_(hp), tuner_(tuner), on_event_(on_event) {
    result_.net = std::move(net);
    result_.target_loss = target_loss;
  }

  PruneResult run() {
    if (hp_.mode == PruneMode::Fixed) {
      run_fixed();
    } else {
      run_adaptive();
    }
    result_.total_epochs = epochs_;
    result_.optimal_epochs = accepted_epoch_;
    result_.final_pruned = result_.net.pruned_fraction();
    TraceEvent done;
    done.type = TraceEventType::Terminated;
    done.epoch = epochs_;
    done.p_curr = p_curr_;
    done.pruned = result_.final_pruned;
    done.note = result_.termination;
    emit(std::move(done));
    return std::move(result_);
  }

 private:
  Network& net() { return result_.net; }

  void emit(TraceEvent e) {
    result_.trace.events.push_back(std::move(e));
    if (on_event_) on_event_(result_.trace.events.size() - 1, result_.trace.events.back());
  }

  void emit_simple(TraceEventType type, std::string note = {}) {
    TraceEvent e;
    e.type = type;
    e.epoch = epochs_;
    e.p_curr = p_curr_;
    e.pruned = net().pruned_fraction();
    e.note = std::move(note);
    emit(std::move(e));
  }

  // One fine-tune epoch; returns false when a loss is non-finite.
  bool fine_tune_epoch(double& val_loss) {
    const double train_loss = tuner_.train_epoch(net());
    val_loss = std::isfinite(train_loss) ? tuner_.validate(net()) : std::numeric_limits<double>::quiet_NaN();
    ++epochs_;
    TraceEvent e;
    e.type = TraceEventType::Epoch;
    e.epoch = epochs_;
    e.train_loss = train_loss;
    e.val_loss = val_loss;
    e.p_curr = p_curr_;
    e.pruned = net().pruned_fraction();
    emit(std::move(e));
    return std::isfinite(train_loss) && std::isfinite(val_loss);
  }

  bool apply_prune(double rate) {
    const auto step = prune_step(net(), rate, hp_.scope, hp_.pruned_max);
    if (step.removed == 0) return false;
    emit_simple(TraceEventType::PruneApplied, step.clamped ? "clamped" : "");
    return true;
  }

  void run_adaptive() {
    const double gate = result_.target_loss * (1.0 + hp_.tolerance);
    p_curr_ = hp_.p_start;
    while (p_curr_ >= hp_.p_min && !prune_cap_reached(net(), hp_.scope, hp_.pruned_max)) {
      const Snapshot snapshot = checkpoint(net());
      if (!apply_prune(p_curr_)) {
        result_.termination = "nothing-to-prune";
        return;
      }
      double loss = std::numeric_limits<double>::infinity();
      std::size_t tune_epochs = 0;
      bool diverged = false;
      bool accepted = false;
      for (;;) {
        if (loss <= gate) {
          accepted = true;
          break;
        }
        if (tune_epochs > hp_.patience || diverged) break;
        diverged = !fine_tune_epoch(loss);
        ++tune_epochs;
      }
      if (accepted) {
        accepted_epoch_ = epochs_;
        continue;
      }
      net() = restore(snapshot);
      tuner_.on_rollback(net());
      if (hp_.mode == PruneMode::ToleranceOnly) {
        emit_simple(TraceEventType::Rollback, "restored last accepted network");
        result_.termination = diverged ? "non-finite-loss" : "patience-exhausted";
        return;
      }
      p_curr_ /= 2.0;
      emit_simple(TraceEventType::Rollback, "pruned restored to checkpoint, rate halved");
    }
    result_.termination = p_curr_ < hp_.p_min ? "rate-below-minimum" : "pruned-max-reached";
  }

  void run_fixed() {
    p_curr_ = hp_.p_start;
    while (!prune_cap_reached(net(), hp_.scope, hp_.pruned_max)) {
      const Snapshot snapshot = checkpoint(net());
      if (!apply_prune(p_curr_)) {
        result_.termination = "nothing-to-prune";
        return;
      }
      for (std::size_t e = 0; e < hp_.patience; ++e) {
        double loss = 0.0;
        if (!fine_tune_epoch(loss)) {
          net() = restore(snapshot);
          tuner_.on_rollback(net());
          emit_simple(TraceEventType::Rollback, "non-finite loss");
          result_.termination = "non-finite-loss";
          return;
        }
      }
      accepted_epoch_ = epochs_;
    }
    result_.termination = "pruned-max-reached";
  }

  PruneHyperParams hp_;
  FineTuner& tuner_;
  const TraceCallback& on_event_;
  PruneResult result_;
  double p_curr_ = 0.0;
  std::size_t epochs_ = 0;
  std::size_t accepted_epoch_ = 0;
};

}  // namespace

PruneResult adaptive_prune(Network net, double target_loss, const PruneHyperParams& hp, FineTuner& tuner,
                           const TraceCallback& on_event) {
  hp.validate();
  net.validate();
  if (!std::isfinite(target_loss) || target_loss < 0.0) {
    throw ContractError("adaptive_prune: target loss must be finite and >= 0");
  }
  net.apply_masks();
  return Controller(std::move(net), target_loss, hp, tuner, on_event).run();
}

PruneResult adaptive_prune(Network net, std::span<const Sequence> train, std::span<const Sequence> val,
                           const PruneHyperParams& hp, const TrainConfig& tc, const TraceCallback& on_event) {
  const double target = validate(net, val);
  DatasetFineTuner tuner(train, val, tc);
  return adaptive_prune(std::move(net), target, hp, tuner, on_event);
}

}  // namespace snnprune
