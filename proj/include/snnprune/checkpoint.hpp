#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "snnprune/network.hpp"

namespace snnprune {

inline constexpr const char* kCheckpointVersion = "snnprune-checkpoint/1";

/// In-memory copy of everything a rollback must restore.
struct Snapshot {
  std::string version = kCheckpointVersion;
  Network net;
};

Snapshot checkpoint(const Network& net);

/// Throws CheckpointError when the snapshot was taken by another format version.
Network restore(const Snapshot& snapshot);

/// Serialised checkpoint with free-form metadata (target loss, config digest, ...).
struct CheckpointFile {
  Network net;
  nlohmann::json metadata = nlohmann::json::object();
};

/// File layout: the line "SNNCKPT\n", the version string and a newline, a
/// little-endian u64 byte count followed by that many bytes of JSON header
/// (config, LIF params, layer shapes, metadata), then for each layer the
/// row-major f64 weights and one mask byte per entry.
std::vector<char> encode_checkpoint(const CheckpointFile& file);
CheckpointFile decode_checkpoint(const std::vector<char>& bytes);

void save_checkpoint(const std::filesystem::path& path, const CheckpointFile& file);
CheckpointFile load_checkpoint(const std::filesystem::path& path);

nlohmann::json network_config_to_json(const NetworkConfig& cfg);
NetworkConfig network_config_from_json(const nlohmann::json& j);

}  // namespace snnprune
