#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "snnprune/tensor.hpp"

namespace snnprune {

/// A binarised multichannel recording with its 2-D velocity labels.
struct SpikeSession {
  std::size_t channels = 0;
  BinaryMatrix spikes;  // [T x channels]
  Matrix velocity;      // [T x 2]
  double dt_ms = 4.0;
  std::string session_id;

  std::size_t timesteps() const { return spikes.rows; }

  bool operator==(const SpikeSession&) const = default;
};

class DatasetError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, UnsupportedVersion, Truncated, NonBinarySpike, DimensionMismatch, NonFinite, TooShort };

  DatasetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr char kSessionMagic[] = "SPKSES1\n";
inline constexpr std::uint32_t kSessionVersion = 1;

/// Throws DatasetError on non-binary spikes, non-finite labels or shape mismatch.
void validate_session(const SpikeSession& s);

std::vector<char> encode_session(const SpikeSession& s);
SpikeSession decode_session(const std::vector<char>& bytes);
void save_session(const std::filesystem::path& path, const SpikeSession& s);
SpikeSession load_session(const std::filesystem::path& path);

/// Contiguous slice [begin, end) of a session.
struct Segment {
  std::size_t subsession = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - begin; }
  bool operator==(const Segment&) const = default;
};

struct SplitSpec {
  std::size_t n_subsessions = 4;
  double train_fraction = 0.50;
  double val_fraction = 0.25;
  double test_fraction = 0.25;
};

struct SessionSplit {
  std::vector<Segment> train;
  std::vector<Segment> val;
  std::vector<Segment> test;
};

/// Equal contiguous sub-sessions, each cut train/val/test in time order.
/// Boundaries are floored; leftover timesteps go to the last test segment.
/// Zero-length segments are omitted.
SessionSplit split_session(std::size_t timesteps, const SplitSpec& spec = {});

/// A training/evaluation sequence; network state resets at its start.
struct Sequence {
  BinaryMatrix spikes;
  Matrix velocity;
};

Sequence extract(const SpikeSession& s, const Segment& seg);
std::vector<Sequence> extract(const SpikeSession& s, const std::vector<Segment>& segs);

struct SyntheticSpec {
  std::uint64_t seed = 0;
  std::size_t channels = 32;
  std::size_t timesteps = 20000;
  double rate = 0.1;              // per-channel spike probability per step
  double mixing_density = 0.25;   // fraction of channels driving each velocity component
  double label_tau_steps = 5.0;   // time constant of the label low-pass filter
  double dt_ms = 4.0;
  std::string session_id = "synthetic";
};

/// Bernoulli input spikes; labels are a low-pass filtered sparse linear
/// readout of the spikes. Pure function of `spec`.
SpikeSession generate_synthetic(const SyntheticSpec& spec);

}  // namespace snnprune
