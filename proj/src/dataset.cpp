#include "snnprune/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "snnprune/error.hpp"
#include "snnprune/random.hpp"

namespace snnprune {

static_assert(std::endian::native == std::endian::little, "session I/O assumes a little-endian host");

namespace {

constexpr std::size_t kMagicLen = sizeof(kSessionMagic) - 1;

template <typename T>
void put(std::vector<char>& out, T value) {
  const auto* p = reinterpret_cast<const char*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

class Cursor {
 public:
  explicit Cursor(const std::vector<char>& bytes) : bytes_(bytes) {}

  const char* take(std::size_t n, const char* what) {
    if (n > bytes_.size() - pos_) {
      throw DatasetError(DatasetError::Kind::Truncated, std::string("session: truncated while reading ") + what);
    }
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename T>
  T get(const char* what) {
    T v;
    std::memcpy(&v, take(sizeof(T), what), sizeof(T));
    return v;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void validate_session(const SpikeSession& s) {
  using K = DatasetError::Kind;
  if (s.spikes.cols != s.channels || s.spikes.data.size() != s.spikes.rows * s.spikes.cols) {
    throw DatasetError(K::DimensionMismatch, "session: spike matrix does not match channel count");
  }
  if (s.velocity.rows != s.spikes.rows || s.velocity.cols != 2 || s.velocity.data.size() != s.velocity.rows * 2) {
    throw DatasetError(K::DimensionMismatch, "session: velocity must be [T x 2] with the spike train's T");
  }
  for (auto b : s.spikes.data) {
    if (b > 1) throw DatasetError(K::NonBinarySpike, "session: spike value outside {0,1}");
  }
  for (double v : s.velocity.data) {
    if (!std::isfinite(v)) throw DatasetError(K::NonFinite, "session: non-finite velocity label");
  }
  if (!(s.dt_ms > 0.0) || !std::isfinite(s.dt_ms)) throw DatasetError(K::NonFinite, "session: dt_ms must be > 0");
}

std::vector<char> encode_session(const SpikeSession& s) {
  validate_session(s);
  std::vector<char> out(kSessionMagic, kSessionMagic + kMagicLen);
  put<std::uint32_t>(out, kSessionVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.channels));
  put<std::uint64_t>(out, s.timesteps());
  put<double>(out, s.dt_ms);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.session_id.size()));
  out.insert(out.end(), s.session_id.begin(), s.session_id.end());
  out.insert(out.end(), s.spikes.data.begin(), s.spikes.data.end());
  const auto* v = reinterpret_cast<const char*>(s.velocity.data.data());
  out.insert(out.end(), v, v + s.velocity.data.size() * sizeof(double));
  return out;
}

SpikeSession decode_session(const std::vector<char>& bytes) {
  using K = DatasetError::Kind;
  if (bytes.size() < kMagicLen || std::memcmp(bytes.data(), kSessionMagic, kMagicLen) != 0) {
    throw DatasetError(K::BadMagic, "session: bad magic");
  }
  Cursor in(bytes);
  in.take(kMagicLen, "magic");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kSessionVersion) {
    throw DatasetError(K::UnsupportedVersion, "session: unsupported version " + std::to_string(version));
  }
  SpikeSession s;
  s.channels = in.get<std::uint32_t>("channels");
  const auto T = in.get<std::uint64_t>("timesteps");
  s.dt_ms = in.get<double>("dt");
  const auto id_len = in.get<std::uint32_t>("id length");
  const char* id = in.take(id_len, "session id");
  s.session_id.assign(id, id + id_len);

  // Size check up front so a corrupt T cannot trigger a huge allocation.
  const std::size_t remaining = in.remaining();
  if (s.channels != 0 && T > remaining / s.channels) {
    throw DatasetError(K::Truncated, "session: truncated while reading spikes");
  }
  const std::size_t n_spikes = static_cast<std::size_t>(T) * s.channels;
  if (T > (remaining - n_spikes) / (2 * sizeof(double))) {
    throw DatasetError(K::Truncated, "session: truncated while reading velocity");
  }
  s.spikes = BinaryMatrix(T, s.channels);
  const char* sp = in.take(n_spikes, "spikes");
  std::memcpy(s.spikes.data.data(), sp, n_spikes);
  s.velocity = Matrix(T, 2);
  std::memcpy(s.velocity.data.data(), in.take(T * 2 * sizeof(double), "velocity"), T * 2 * sizeof(double));
  if (in.remaining() != 0) throw DatasetError(K::DimensionMismatch, "session: trailing bytes after payload");
  validate_session(s);
  return s;
}

void save_session(const std::filesystem::path& path, const SpikeSession& s) {
  const auto bytes = encode_session(s);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError(DatasetError::Kind::Io, "session: cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DatasetError(DatasetError::Kind::Io, "session: write failed for " + path.string());
}

SpikeSession load_session(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetError::Kind::Io, "session: cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_session(bytes);
}

SessionSplit split_session(std::size_t timesteps, const SplitSpec& spec) {
  const double sum = spec.train_fraction + spec.val_fraction + spec.test_fraction;
  if (spec.n_subsessions == 0 || std::abs(sum - 1.0) > 1e-12 || spec.train_fraction < 0 || spec.val_fraction < 0 ||
      spec.test_fraction < 0) {
    throw ContractError("split_session: fractions must be non-negative and sum to 1");
  }
  if (timesteps < spec.n_subsessions) {
    throw DatasetError(DatasetError::Kind::TooShort, "split_session: " + std::to_string(timesteps) +
                                                         " timesteps cannot form " +
                                                         std::to_string(spec.n_subsessions) + " sub-sessions");
  }
  SessionSplit split;
  const std::size_t sub_len = timesteps / spec.n_subsessions;
  for (std::size_t k = 0; k < spec.n_subsessions; ++k) {
    const std::size_t start = k * sub_len;
    const std::size_t stop = (k + 1 == spec.n_subsessions) ? timesteps : start + sub_len;
    const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(sub_len)));
    const auto n_val = static_cast<std::size_t>(std::floor(spec.val_fraction * static_cast<double>(sub_len)));
    const Segment train{k, start, start + n_train};
    const Segment val{k, train.end, train.end + n_val};
    const Segment test{k, val.end, stop};
    if (train.length()) split.train.push_back(train);
    if (val.length()) split.val.push_back(val);
    if (test.length()) split.test.push_back(test);
  }
  return split;
}

Sequence extract(const SpikeSession& s, const Segment& seg) {
  if (seg.end > s.timesteps() || seg.begin > seg.end) throw ContractError("extract: segment outside session");
  Sequence out{BinaryMatrix(seg.length(), s.channels), Matrix(seg.length(), 2)};
  std::copy(s.spikes.data.begin() + static_cast<std::ptrdiff_t>(seg.begin * s.channels),
            s.spikes.data.begin() + static_cast<std::ptrdiff_t>(seg.end * s.channels), out.spikes.data.begin());
  std::copy(s.velocity.data.begin() + static_cast<std::ptrdiff_t>(seg.begin * 2),
            s.velocity.data.begin() + static_cast<std::ptrdiff_t>(seg.end * 2), out.velocity.data.begin());
  return out;
}

std::vector<Sequence> extract(const SpikeSession& s, const std::vector<Segment>& segs) {
  std::vector<Sequence> out;
  out.reserve(segs.size());
  for (const auto& seg : segs) out.push_back(extract(s, seg));
  return out;
}

SpikeSession generate_synthetic(const SyntheticSpec& spec) {
  if (!(spec.rate > 0.0 && spec.rate < 1.0)) throw ContractError("generate_synthetic: rate must lie in (0,1)");
  if (!(spec.mixing_density > 0.0 && spec.mixing_density <= 1.0)) {
    throw ContractError("generate_synthetic: mixing_density must lie in (0,1]");
  }
  if (!(spec.label_tau_steps > 0.0)) throw ContractError("generate_synthetic: label_tau_steps must be > 0");
  if (spec.channels == 0) throw ContractError("generate_synthetic: channels must be > 0");

  Rng rng(spec.seed);
  // Mixing weights first so the hidden map does not depend on T.
  Matrix mixing(2, spec.channels);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t c = 0; c < spec.channels; ++c) {
      if (rng.bernoulli(spec.mixing_density)) {
        const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
        mixing(k, c) = sign * rng.uniform(0.5, 1.5);
      } else {
        rng.next();
        rng.next();
      }
    }
  }

  SpikeSession s;
  s.channels = spec.channels;
  s.dt_ms = spec.dt_ms;
  s.session_id = spec.session_id;
  s.spikes = BinaryMatrix(spec.timesteps, spec.channels);
  s.velocity = Matrix(spec.timesteps, 2);

  const double retain = std::exp(-1.0 / spec.label_tau_steps);
  // Unit stationary standard deviation of the filtered drive.
  double scale[2];
  for (std::size_t k = 0; k < 2; ++k) {
    double sq = 0.0;
    for (std::size_t c = 0; c < spec.channels; ++c) sq += mixing(k, c) * mixing(k, c);
    const double var = sq * spec.rate * (1.0 - spec.rate) / (1.0 - retain * retain);
    scale[k] = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
  }

  double state[2] = {0.0, 0.0};
  for (std::size_t t = 0; t < spec.timesteps; ++t) {
    double drive[2] = {0.0, 0.0};
    for (std::size_t c = 0; c < spec.channels; ++c) {
      if (rng.bernoulli(spec.rate)) {
        s.spikes(t, c) = 1;
        drive[0] += mixing(0, c);
        drive[1] += mixing(1, c);
      }
    }
    for (std::size_t k = 0; k < 2; ++k) {
      state[k] = retain * state[k] + drive[k];
      s.velocity(t, k) = scale[k] * state[k];
    }
  }
  return s;
}

}  // namespace snnprune
