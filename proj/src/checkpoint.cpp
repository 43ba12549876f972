#include "snnprune/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "snnprune/error.hpp"

namespace snnprune {

namespace {

constexpr const char kMagic[] = "SNNCKPT\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

nlohmann::json real_to_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double real_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw CheckpointError("checkpoint: bad real value '" + s + "'");
}

void append_bytes(std::vector<char>& out, const void* src, std::size_t n) {
  const auto* p = static_cast<const char*>(src);
  out.insert(out.end(), p, p + n);
}

class Reader {
 public:
  explicit Reader(const std::vector<char>& bytes) : bytes_(bytes) {}

  const char* take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw CheckpointError("checkpoint: truncated payload");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::string line() {
    std::string s;
    for (;;) {
      char c = *take(1);
      if (c == '\n') return s;
      s.push_back(c);
      if (s.size() > 256) throw CheckpointError("checkpoint: unterminated version line");
    }
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Snapshot checkpoint(const Network& net) { return Snapshot{kCheckpointVersion, net}; }

Network restore(const Snapshot& snapshot) {
  if (snapshot.version != kCheckpointVersion) {
    throw CheckpointError("restore: snapshot version '" + snapshot.version + "' is not '" + kCheckpointVersion + "'");
  }
  return snapshot.net;
}

nlohmann::json network_config_to_json(const NetworkConfig& cfg) {
  nlohmann::json j;
  j["layer_dims"] = cfg.layer_dims;
  j["spiking"] = cfg.spiking;
  j["prunable"] = cfg.prunable;
  j["seed"] = cfg.seed;
  j["init_gain"] = real_to_json(cfg.init_gain);
  auto& lif = j["lif"] = nlohmann::json::array();
  for (const auto& p : cfg.lif) {
    lif.push_back({{"tau", real_to_json(p.tau)},
                   {"threshold", real_to_json(p.threshold)},
                   {"reset_value", real_to_json(p.reset_value)},
                   {"dt", real_to_json(p.dt)}});
  }
  return j;
}

NetworkConfig network_config_from_json(const nlohmann::json& j) {
  NetworkConfig cfg;
  cfg.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
  cfg.spiking = j.at("spiking").get<std::vector<bool>>();
  cfg.prunable = j.at("prunable").get<std::vector<bool>>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.init_gain = real_from_json(j.at("init_gain"));
  for (const auto& p : j.at("lif")) {
    cfg.lif.push_back(LifParams{real_from_json(p.at("tau")), real_from_json(p.at("threshold")),
                                real_from_json(p.at("reset_value")), real_from_json(p.at("dt"))});
  }
  return cfg;
}

std::vector<char> encode_checkpoint(const CheckpointFile& file) {
  file.net.validate();
  nlohmann::json header;
  header["config"] = network_config_to_json(file.net.config);
  auto& shapes = header["layers"] = nlohmann::json::array();
  for (const auto& layer : file.net.layers) {
    shapes.push_back({{"rows", layer.weights.rows}, {"cols", layer.weights.cols}, {"prunable", layer.prunable}});
  }
  header["metadata"] = file.metadata;
  const std::string text = header.dump();

  std::vector<char> out;
  append_bytes(out, kMagic, kMagicLen);
  append_bytes(out, kCheckpointVersion, std::strlen(kCheckpointVersion));
  out.push_back('\n');
  const std::uint64_t len = text.size();
  append_bytes(out, &len, sizeof len);
  append_bytes(out, text.data(), text.size());
  for (const auto& layer : file.net.layers) {
    append_bytes(out, layer.weights.data.data(), layer.weights.data.size() * sizeof(double));
    append_bytes(out, layer.mask.data(), layer.mask.size());
  }
  return out;
}

CheckpointFile decode_checkpoint(const std::vector<char>& bytes) {
  Reader in(bytes);
  if (std::memcmp(in.take(kMagicLen), kMagic, kMagicLen) != 0) throw CheckpointError("checkpoint: bad magic");
  const std::string version = in.line();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: version '" + version + "' is not '" + kCheckpointVersion + "'");
  }
  std::uint64_t len = 0;
  std::memcpy(&len, in.take(sizeof len), sizeof len);
  const char* text = in.take(len);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text, text + len);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad header: ") + e.what());
  }

  CheckpointFile file;
  try {
    file.net.config = network_config_from_json(header.at("config"));
    file.metadata = header.value("metadata", nlohmann::json::object());
    for (const auto& shape : header.at("layers")) {
      WeightLayer layer;
      layer.weights = Matrix(shape.at("rows").get<std::size_t>(), shape.at("cols").get<std::size_t>());
      layer.prunable = shape.at("prunable").get<bool>();
      std::memcpy(layer.weights.data.data(), in.take(layer.weights.size() * sizeof(double)),
                  layer.weights.size() * sizeof(double));
      const char* m = in.take(layer.weights.size());
      layer.mask.assign(m, m + layer.weights.size());
      for (auto b : layer.mask) {
        if (b > 1) throw CheckpointError("checkpoint: mask byte outside {0,1}");
      }
      file.net.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (!in.done()) throw CheckpointError("checkpoint: trailing bytes after payload");
  try {
    file.net.validate();
  } catch (const ContractError& e) {
    throw CheckpointError(std::string("checkpoint: inconsistent network: ") + e.what());
  }
  return file;
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointFile& file) {
  const auto bytes = encode_checkpoint(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("checkpoint: cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("checkpoint: write failed for " + path.string());
}

CheckpointFile load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace snnprune
