#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "snnprune/network.hpp"
#include "snnprune/train.hpp"

namespace snnprune {

enum class PruneScope { PerLayer, Global };

/// FullAdaptive is the complete controller. ToleranceOnly keeps the loss gate
/// but stops at the first step that cannot recover within the patience
/// budget. Fixed prunes p_start every `patience` epochs regardless of loss.
enum class PruneMode { FullAdaptive, ToleranceOnly, Fixed };

std::string to_string(PruneScope s);
std::string to_string(PruneMode m);
PruneScope prune_scope_from_string(const std::string& s);
PruneMode prune_mode_from_string(const std::string& s);

/// Rates are percentage points of the original prunable weight count.
struct PruneHyperParams {
  double p_start = 10.0;
  std::size_t patience = 5;
  double tolerance = 0.1;
  double p_min = 0.1;
  double pruned_max = 0.95;
  PruneScope scope = PruneScope::PerLayer;
  PruneMode mode = PruneMode::FullAdaptive;

  void validate() const;
};

/// Flat (row-major) indices of the `count` smallest-magnitude unmasked
/// weights, ties broken by index. `count` is clamped to what is available.
std::vector<std::size_t> select_prune_targets(const WeightLayer& layer, std::size_t count);

struct PruneStepResult {
  std::vector<std::size_t> removed_per_layer;
  std::size_t removed = 0;
  bool clamped = false;  // fewer than the nominal count were removed
};

/// Masks the lowest-magnitude unmasked weights of the prunable layers:
/// round(rate% of each layer's size) per layer, or round(rate% of all
/// prunable weights) pooled across layers. No layer (per-layer) or the pool
/// (global) is pushed past round(pruned_max * size) masked entries.
PruneStepResult prune_step(Network& net, double rate_pct, PruneScope scope, double pruned_max = 1.0);

/// True once prune_step can no longer remove anything under `pruned_max`.
bool prune_cap_reached(const Network& net, PruneScope scope, double pruned_max);

enum class TraceEventType { PruneApplied, Epoch, Rollback, Terminated };

std::string to_string(TraceEventType t);

struct TraceEvent {
  TraceEventType type = TraceEventType::Epoch;
  std::size_t epoch = 0;  // fine-tune epochs completed when the event fired
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double p_curr = 0.0;
  double pruned = 0.0;  // mask-zero fraction of prunable weights
  std::string note;
};

struct PruneTrace {
  std::vector<TraceEvent> events;

  std::size_t count(TraceEventType t) const;
};

inline constexpr const char* kTraceCsvHeader = "event_index,event_type,epoch,train_loss,val_loss,p_curr,pruned";

/// One CSV row (no newline) in kTraceCsvHeader column order. Terminated
/// events have no row.
std::string trace_csv_row(std::size_t index, const TraceEvent& e);
void write_trace_csv(std::ostream& out, const PruneTrace& trace);

/// What the controller needs from a training loop.
class FineTuner {
 public:
  virtual ~FineTuner() = default;
  virtual double train_epoch(Network& net) = 0;
  virtual double validate(const Network& net) = 0;
  /// Called after a rollback restored an earlier network.
  virtual void on_rollback(const Network& restored) { (void)restored; }
};

/// Fine-tunes with a Trainer on fixed train/validation sequences.
class DatasetFineTuner : public FineTuner {
 public:
  DatasetFineTuner(std::span<const Sequence> train, std::span<const Sequence> val, const TrainConfig& cfg);

  double train_epoch(Network& net) override;
  double validate(const Network& net) override;
  void on_rollback(const Network& restored) override;

 private:
  std::span<const Sequence> train_;
  std::span<const Sequence> val_;
  Trainer trainer_;
};

struct PruneResult {
  Network net;
  PruneTrace trace;
  double target_loss = 0.0;
  std::string termination;
  std::size_t total_epochs = 0;
  std::size_t optimal_epochs = 0;  // epochs spent until the returned network was accepted
  double final_pruned = 0.0;
};

using TraceCallback = std::function<void(std::size_t index, const TraceEvent&)>;

/// Runs the pruning controller from a pretrained network whose validation
/// loss is `target_loss`.
PruneResult adaptive_prune(Network net, double target_loss, const PruneHyperParams& hp, FineTuner& tuner,
                           const TraceCallback& on_event = {});

/// Convenience overload: computes the target loss on `val` and fine-tunes
/// with a fresh Trainer.
PruneResult adaptive_prune(Network net, std::span<const Sequence> train, std::span<const Sequence> val,
                           const PruneHyperParams& hp, const TrainConfig& tc, const TraceCallback& on_event = {});

}  // namespace snnprune
