#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "snnprune/error.hpp"
#include "snnprune/network.hpp"
#include "snnprune/random.hpp"

using namespace snnprune;

namespace {

NetworkConfig tiny_config(std::vector<std::size_t> dims, std::uint64_t seed = 3) {
  NetworkConfig cfg;
  cfg.layer_dims = std::move(dims);
  const std::size_t n = cfg.num_layers();
  cfg.spiking.assign(n, true);
  cfg.spiking.back() = false;
  cfg.prunable.assign(n, true);
  cfg.prunable.back() = false;
  cfg.lif.assign(n, LifParams{});
  cfg.seed = seed;
  return cfg;
}

BinaryMatrix random_spikes(std::size_t T, std::size_t channels, double rate, Rng& rng) {
  BinaryMatrix s(T, channels);
  for (auto& x : s.data) x = rng.bernoulli(rate) ? 1 : 0;
  return s;
}

}  // namespace

TEST(LayerForward, ZeroSpikesZeroStateGiveZeroOutput) {
  WeightLayer layer;
  layer.weights = Matrix(3, 2, 0.7);
  layer.mask.assign(6, 1);
  const std::vector<std::uint8_t> pre{0, 0};
  const std::vector<double> u(3, 0.0);
  const auto out = layer_forward(pre, layer, u, LifParams{}, true);
  EXPECT_EQ(out.spikes, (std::vector<std::uint8_t>{0, 0, 0}));
  EXPECT_EQ(out.membrane, (std::vector<double>{0, 0, 0}));
}

TEST(LayerForward, MaskedConnectionContributesNothing) {
  WeightLayer layer;
  layer.weights = Matrix(1, 1, 123.0);
  layer.mask = {0};
  const std::vector<std::uint8_t> pre{1};
  const std::vector<double> u{0.0};
  const auto out = layer_forward(pre, layer, u, LifParams{}, true);
  EXPECT_EQ(out.spikes[0], 0);
  EXPECT_EQ(out.membrane[0], 0.0);
  EXPECT_EQ(synaptic_current(layer, pre)[0], 0.0);
}

TEST(LayerForward, PerfectIntegratorHandExample) {
  WeightLayer layer;
  layer.weights = Matrix(1, 2);
  layer.weights.data = {0.6, 0.9};
  layer.mask = {1, 1};
  LifParams p;
  p.tau = std::numeric_limits<double>::infinity();
  const std::vector<std::uint8_t> pre{1, 1};
  const std::vector<double> u{0.0};
  EXPECT_DOUBLE_EQ(synaptic_current(layer, pre)[0], 1.5);
  const auto out = layer_forward(pre, layer, u, p, true);
  EXPECT_EQ(out.spikes[0], 1);
  EXPECT_EQ(out.membrane[0], 0.0);
}

TEST(LayerForward, NonSpikingReturnsRawMembrane) {
  WeightLayer layer;
  layer.weights = Matrix(1, 2);
  layer.weights.data = {0.6, 0.9};
  layer.mask = {1, 1};
  const std::vector<std::uint8_t> pre{1, 1};
  const std::vector<double> u{0.0};
  const auto out = layer_forward(pre, layer, u, LifParams{}, false);
  EXPECT_TRUE(out.spikes.empty());
  EXPECT_DOUBLE_EQ(out.membrane[0], 1.5);
}

TEST(LayerForward, DimensionMismatchThrows) {
  WeightLayer layer;
  layer.weights = Matrix(1, 2);
  layer.mask = {1, 1};
  const std::vector<std::uint8_t> pre{1, 1, 0};
  const std::vector<double> u{0.0};
  EXPECT_THROW(layer_forward(pre, layer, u, LifParams{}, true), ContractError);
}

TEST(NetworkForward, EmptySequence) {
  const auto net = Network::initialize(tiny_config({2, 3, 2}));
  const auto r = network_forward(net, BinaryMatrix(0, 2));
  EXPECT_EQ(r.prediction.rows, 0u);
  EXPECT_EQ(r.record.timesteps, 0u);
  for (const auto& v : r.record.values) EXPECT_TRUE(v.empty());
}

TEST(NetworkForward, ZeroInputIsFixedPoint) {
  const auto net = Network::initialize(make_snn3_config(8, 1));
  const auto r = network_forward(net, BinaryMatrix(37, 8));
  for (double v : r.prediction.data) EXPECT_EQ(v, 0.0);
}

TEST(NetworkForward, InputChannelMismatchThrows) {
  const auto net = Network::initialize(tiny_config({2, 3, 2}));
  EXPECT_THROW(network_forward(net, BinaryMatrix(4, 3)), ContractError);
}

// Independent scalar re-derivation of a 2-channel, 2-hidden, 1-output net over three steps.
TEST(NetworkForward, ToyNetMatchesScalarLoop) {
  auto cfg = tiny_config({2, 2, 1});
  cfg.lif[0].tau = 2.0;
  cfg.lif[1].tau = 4.0;
  auto net = Network::initialize(cfg);
  net.layers[0].weights.data = {0.8, 0.5, -0.3, 1.2};
  net.layers[1].weights.data = {0.7, -0.4};

  BinaryMatrix x(3, 2);
  x.data = {1, 1, 0, 1, 1, 0};

  const double a0 = std::exp(-0.5), a1 = std::exp(-0.25);
  double h[2] = {0, 0}, y = 0;
  double expected[3];
  const double W0[2][2] = {{0.8, 0.5}, {-0.3, 1.2}};
  const double W1[2] = {0.7, -0.4};
  for (int t = 0; t < 3; ++t) {
    int s[2];
    for (int i = 0; i < 2; ++i) {
      double cur = 0;
      for (int j = 0; j < 2; ++j) if (x(t, j)) cur += W0[i][j];
      h[i] = h[i] * a0 + cur;
      s[i] = h[i] >= 1.0;
      if (s[i]) h[i] = 0.0;
    }
    double cur = 0;
    for (int j = 0; j < 2; ++j) if (s[j]) cur += W1[j];
    y = y * a1 + cur;
    expected[t] = y;
  }
  // t0: h = [1.3, 0.9] -> s = [1, 0], y = 0.7
  // t1: h = [0.5, 0.9*e^-0.5 + 1.2] -> s = [0, 1], y = 0.7 e^-0.25 - 0.4
  EXPECT_NEAR(expected[0], 0.7, 1e-15);
  EXPECT_NEAR(expected[1], 0.7 * a1 - 0.4, 1e-15);

  const auto r = network_forward(net, x);
  for (int t = 0; t < 3; ++t) EXPECT_EQ(r.prediction(t, 0), expected[t]) << "t=" << t;
  EXPECT_EQ(r.record.at(1, 0)[0], 1.0);
  EXPECT_EQ(r.record.at(1, 0)[1], 0.0);
  EXPECT_EQ(r.record.at(1, 1)[1], 1.0);
}

TEST(NetworkProperties, MaskOpacity) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto net = Network::initialize(make_snn3_config(6, trial, {7, 5, 4}));
    for (auto& layer : net.layers) {
      for (auto& m : layer.mask) m = rng.bernoulli(0.6) ? 1 : 0;
    }
    const auto x = random_spikes(25, 6, 0.4, rng);
    const auto ref = network_forward(net, x);
    for (auto& layer : net.layers) {
      for (std::size_t k = 0; k < layer.size(); ++k) {
        if (!layer.mask[k]) layer.weights.data[k] = rng.uniform(-50.0, 50.0);
      }
    }
    const auto again = network_forward(net, x);
    EXPECT_EQ(ref.prediction, again.prediction);
    EXPECT_EQ(ref.record.values, again.record.values);
  }
}

TEST(NetworkProperties, DeterministicAndBinaryHiddenSpikes) {
  Rng rng(8);
  const auto net = Network::initialize(make_snn3_config(10, 4, {12, 12, 12}));
  EXPECT_EQ(net, Network::initialize(make_snn3_config(10, 4, {12, 12, 12})));
  const auto x = random_spikes(40, 10, 0.3, rng);
  const auto a = network_forward(net, x);
  const auto b = network_forward(net, x);
  EXPECT_EQ(a.prediction, b.prediction);
  for (std::size_t l = 1; l + 1 < a.record.num_layers(); ++l) {
    for (double v : a.record.values[l]) EXPECT_TRUE(v == 0.0 || v == 1.0);
  }
}

TEST(Network, InitializationRespectsGainAndMasks) {
  auto cfg = make_snn3_config(16, 9);
  cfg.init_gain = 2.0;
  const auto net = Network::initialize(cfg);
  ASSERT_EQ(net.layers.size(), 4u);
  EXPECT_EQ(net.prunable_weight_count(), 16u * 50 + 50 * 50 + 50 * 50);
  EXPECT_EQ(net.prunable_masked_count(), 0u);
  EXPECT_FALSE(net.layers.back().prunable);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const double bound = 2.0 / std::sqrt(static_cast<double>(cfg.layer_dims[l]));
    for (double w : net.layers[l].weights.data) EXPECT_LE(std::abs(w), bound);
    for (auto m : net.layers[l].mask) EXPECT_EQ(m, 1);
  }
}

TEST(Network, Snn3HasPaperSynapseCounts) {
  const auto indy = Network::initialize(make_snn3_config(96, 0));
  std::size_t total = 0;
  for (const auto& l : indy.layers) total += l.size();
  EXPECT_EQ(total, 9900u);
  const auto loco = Network::initialize(make_snn3_config(192, 0));
  total = 0;
  for (const auto& l : loco.layers) total += l.size();
  EXPECT_EQ(total, 14700u);
}

TEST(ResetState, ZeroSizedAndIdempotent) {
  auto net = Network::initialize(tiny_config({3, 4, 2}));
  const auto s = reset_state(net);
  ASSERT_EQ(s.membrane.size(), 2u);
  EXPECT_EQ(s.membrane[0], std::vector<double>(4, 0.0));
  EXPECT_EQ(s.membrane[1], std::vector<double>(2, 0.0));
  EXPECT_EQ(s, reset_state(net));
  net.layers[0].weights.data.assign(12, 9.0);
  EXPECT_EQ(s, reset_state(net));
}

TEST(NetworkConfig, ValidateRejectsInconsistentSizes) {
  auto cfg = tiny_config({2, 3, 2});
  cfg.spiking.pop_back();
  EXPECT_THROW(cfg.validate(), ContractError);
  auto zero = tiny_config({2, 0, 2});
  EXPECT_THROW(zero.validate(), ContractError);
}
