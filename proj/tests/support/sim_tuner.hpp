#pragma once

// Scripted fine-tuner and trace checks shared by prune_test and acceptance.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "snnprune/prune.hpp"
#include "snnprune/random.hpp"

namespace snnprune::testing {

/// Pretends to train: jitters unmasked weights, re-applies masks and reports a
/// validation loss that passes the gate with probability `pass_prob`.
class SimulatedTuner : public FineTuner {
 public:
  SimulatedTuner(const Network& initial, double target_loss, double tolerance, double pass_prob, std::uint64_t seed)
      : gate_(target_loss * (1.0 + tolerance)), pass_prob_(pass_prob), rng_(seed), last_accepted_(initial) {}

  double train_epoch(Network& net) override {
    for (auto& layer : net.layers) {
      for (auto& w : layer.weights.data) w += 1e-3 * rng_.uniform(-1.0, 1.0);
    }
    net.apply_masks();
    observed_pruned.push_back(net.pruned_fraction());
    observed_masks.push_back(masks_of(net));
    for (const auto& layer : net.layers) {
      for (std::size_t k = 0; k < layer.size(); ++k) {
        if (!layer.mask[k] && layer.weights.data[k] != 0.0) ++nonzero_masked_weights;
      }
    }
    if (nan_every_ > 0 && ++calls_ % nan_every_ == 0) return std::numeric_limits<double>::quiet_NaN();
    return 0.5 * gate_;
  }

  double validate(const Network& net) override {
    const bool pass = rng_.bernoulli(pass_prob_);
    if (pass) last_accepted_ = net;
    return pass ? 0.5 * gate_ : 2.0 * gate_;
  }

  void on_rollback(const Network& restored) override {
    ++rollbacks;
    if (!(restored == last_accepted_)) ++rollback_mismatches;
    observed_masks.push_back(masks_of(restored));
    rollback_marks.push_back(observed_masks.size() - 1);
  }

  /// Return a NaN training loss on every n-th epoch (0 disables).
  void inject_nan_every(std::size_t n) { nan_every_ = n; }

  double gate() const { return gate_; }

  static std::vector<std::vector<std::uint8_t>> masks_of(const Network& net) {
    std::vector<std::vector<std::uint8_t>> m;
    for (const auto& layer : net.layers) m.push_back(layer.mask);
    return m;
  }

  std::vector<double> observed_pruned;
  std::vector<std::vector<std::vector<std::uint8_t>>> observed_masks;
  std::vector<std::size_t> rollback_marks;
  std::size_t rollbacks = 0;
  std::size_t rollback_mismatches = 0;
  std::size_t nonzero_masked_weights = 0;

 private:
  double gate_;
  double pass_prob_;
  Rng rng_;
  Network last_accepted_;
  std::size_t nan_every_ = 0;
  std::size_t calls_ = 0;
};

/// Checks the controller's trace invariants for the adaptive modes. Returns a
/// description of every violation (empty when the trace is consistent).
inline std::vector<std::string> check_adaptive_trace(const PruneResult& r, const PruneHyperParams& hp,
                                                     const SimulatedTuner& tuner, std::size_t total_prunable) {
  std::vector<std::string> bad;
  const auto& ev = r.trace.events;
  const double gate = tuner.gate();
  const double resolution = 1.0 / static_cast<double>(total_prunable) + 1e-12;

  double prev_p = hp.p_start;
  std::size_t epochs_since_prune = 0;
  std::size_t failing_since_prune = 0;
  std::size_t last_epoch = 0;
  std::size_t prune_events = 0;
  std::size_t epoch_events = 0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto& e = ev[i];
    const std::string at = "event " + std::to_string(i) + ": ";
    if (e.epoch < last_epoch) bad.push_back(at + "epoch counter went backwards");
    last_epoch = e.epoch;
    if (e.p_curr > prev_p) bad.push_back(at + "rate increased");

    switch (e.type) {
      case TraceEventType::PruneApplied: {
        if (prune_events > 0) {
          const auto& prev = ev[i - 1];
          const bool gated = prev.type == TraceEventType::Rollback ||
                             (prev.type == TraceEventType::Epoch && prev.val_loss <= gate);
          if (!gated) bad.push_back(at + "prune applied while validation loss above the gate");
          if (prev.type == TraceEventType::Epoch && epochs_since_prune > hp.patience + 1) {
            bad.push_back(at + "more than patience + 1 epochs before an accepted prune");
          }
        }
        if (e.p_curr != prev_p) bad.push_back(at + "prune rate differs from current rate");
        ++prune_events;
        epochs_since_prune = 0;
        failing_since_prune = 0;
        break;
      }
      case TraceEventType::Epoch: {
        ++epoch_events;
        if (e.epoch != epoch_events) bad.push_back(at + "epoch counter skipped");
        ++epochs_since_prune;
        if (!(e.val_loss <= gate)) ++failing_since_prune;
        if (epochs_since_prune > hp.patience + 1) bad.push_back(at + "fine-tuning exceeded patience + 1 epochs");
        if (epoch_events - 1 < tuner.observed_pruned.size() &&
            std::abs(e.pruned - tuner.observed_pruned[epoch_events - 1]) > resolution) {
          bad.push_back(at + "reported pruned fraction disagrees with the masks");
        }
        break;
      }
      case TraceEventType::Rollback: {
        const bool diverged = i > 0 && ev[i - 1].type == TraceEventType::Epoch && !std::isfinite(ev[i - 1].val_loss);
        if (!diverged && (epochs_since_prune != hp.patience + 1 || failing_since_prune != hp.patience + 1)) {
          bad.push_back(at + "rollback not preceded by exactly patience + 1 failing epochs");
        }
        if (hp.mode == PruneMode::FullAdaptive && e.p_curr != prev_p / 2.0) {
          bad.push_back(at + "rate not halved at rollback");
        }
        break;
      }
      case TraceEventType::Terminated:
        if (i + 1 != ev.size()) bad.push_back(at + "events after termination");
        break;
    }
    prev_p = e.p_curr;
  }
  if (ev.empty() || ev.back().type != TraceEventType::Terminated) bad.push_back("trace does not end in termination");
  if (tuner.rollback_mismatches) bad.push_back("a rollback did not restore the last accepted network bitwise");
  if (tuner.nonzero_masked_weights) bad.push_back("a masked weight was nonzero after fine-tuning");

  // Mask zeros only grow, except at rollbacks.
  std::size_t next_mark = 0;
  for (std::size_t k = 1; k < tuner.observed_masks.size(); ++k) {
    if (next_mark < tuner.rollback_marks.size() && tuner.rollback_marks[next_mark] == k) {
      ++next_mark;
      continue;
    }
    const auto& a = tuner.observed_masks[k - 1];
    const auto& b = tuner.observed_masks[k];
    for (std::size_t l = 0; l < a.size(); ++l) {
      for (std::size_t j = 0; j < a[l].size(); ++j) {
        if (a[l][j] == 0 && b[l][j] == 1) {
          bad.push_back("mask entry revived outside a rollback");
          l = a.size();
          break;
        }
      }
    }
  }

  if (r.termination == "rate-below-minimum" && !(ev.back().p_curr < hp.p_min)) {
    bad.push_back("terminated on rate with p_curr >= p_min");
  }
  if (r.final_pruned > hp.pruned_max + resolution) bad.push_back("pruned beyond pruned_max");
  return bad;
}

}  // namespace snnprune::testing
