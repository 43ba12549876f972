#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "snnprune/error.hpp"
#include "snnprune/metrics.hpp"
#include "snnprune/prune.hpp"
#include "support/oracles.hpp"

using namespace snnprune;
namespace t = snnprune::testing;

namespace {

Matrix make(std::size_t rows, std::size_t cols, std::vector<double> values) {
  Matrix m(rows, cols);
  m.data = std::move(values);
  return m;
}

}  // namespace

TEST(RSquared, PerfectPrediction) {
  const auto truth = make(3, 2, {0, 0, 1, 1, 2, 2});
  EXPECT_EQ(r_squared(truth, truth), 1.0);
}

TEST(RSquared, MeanPredictorIsZero) {
  const auto truth = make(3, 2, {0, 3, 1, 5, 2, 7});
  const auto mean = make(3, 2, {1, 5, 1, 5, 1, 5});
  EXPECT_EQ(r_squared(mean, truth), 0.0);
}

TEST(RSquared, HandExample) {
  const auto truth = make(3, 2, {0, 0, 1, 1, 2, 2});
  const auto pred = make(3, 2, {0, 0, 1, 1, 1, 2});
  EXPECT_EQ(r_squared(pred, truth), 0.75);
}

TEST(RSquared, ConstantTruthIsDegenerate) {
  const auto truth = make(3, 2, {1, 0, 1, 1, 1, 2});
  EXPECT_THROW(r_squared(truth, truth), DegenerateInputError);
}

TEST(RSquared, ShapeErrors) {
  EXPECT_THROW(r_squared(Matrix(3, 2), Matrix(2, 2)), ContractError);
  EXPECT_THROW(r_squared(Matrix(1, 2), Matrix(1, 2)), ContractError);
}

TEST(RSquared, InvariantUnderRowShuffle) {
  Rng rng(3);
  Matrix pred(50, 2), truth(50, 2);
  for (auto& v : pred.data) v = rng.normal();
  for (auto& v : truth.data) v = rng.normal();
  const double base = r_squared(pred, truth);
  std::vector<std::size_t> perm(50);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.next() % i]);
  Matrix p2(50, 2), t2(50, 2);
  for (std::size_t i = 0; i < 50; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      p2(i, c) = pred(perm[i], c);
      t2(i, c) = truth(perm[i], c);
    }
  }
  EXPECT_NEAR(r_squared(p2, t2), base, 1e-12);
}

TEST(ConnectionSparsity, DenseIsZero) {
  const auto net = Network::initialize(make_snn3_config(96, 0));
  EXPECT_EQ(connection_sparsity(net), 0.0);
  EXPECT_EQ(prunable_connection_sparsity(net), 0.0);
}

TEST(ConnectionSparsity, AllPrunableMasked) {
  auto net = Network::initialize(make_snn3_config(96, 0));
  for (auto& l : net.layers) {
    if (l.prunable) std::fill(l.mask.begin(), l.mask.end(), 0);
  }
  net.apply_masks();
  EXPECT_EQ(prunable_connection_sparsity(net), 1.0);
  EXPECT_DOUBLE_EQ(connection_sparsity(net), 9800.0 / 9900.0);
  EXPECT_NEAR(connection_sparsity(net), 0.9899, 5e-5);
}

TEST(ConnectionSparsity, TenWeightToyNet) {
  NetworkConfig cfg;
  cfg.layer_dims = {5, 2};
  cfg.spiking = {false};
  cfg.prunable = {true};
  cfg.lif = {LifParams{}};
  auto net = Network::initialize(cfg);
  net.layers[0].weights.data = {0, 0, 0, 0, 0.3, 0, 0, 0, 0, 0};
  EXPECT_DOUBLE_EQ(connection_sparsity(net), 0.9);
}

TEST(ConnectionSparsity, CountsExactZerosAndMasks) {
  auto net = Network::initialize(make_snn3_config(4, 0, {2, 2, 2}));
  const double total = 8 + 4 + 4 + 4;
  net.layers[0].mask[0] = 0;
  net.layers[1].weights.data[1] = 0.0;
  EXPECT_DOUBLE_EQ(connection_sparsity(net), 2.0 / total);
  EXPECT_DOUBLE_EQ(prunable_connection_sparsity(net), 2.0 / 16.0);
}

TEST(ActivationSparsity, Examples) {
  ActivationRecord rec;
  rec.dims = {2, 2};
  rec.timesteps = 1;
  rec.values = {{1, 0}, {0, 0}};
  EXPECT_DOUBLE_EQ(activation_sparsity(rec), 0.75);
  EXPECT_DOUBLE_EQ(activation_sparsity(rec, {.include_input = false}), 1.0);
  const std::vector<ActivationRecord> recs{rec};
  EXPECT_DOUBLE_EQ(activation_sparsity_layer_mean(recs), 0.75);

  rec.values = {{0, 0}, {0, 0}};
  EXPECT_EQ(activation_sparsity(rec), 1.0);
  rec.values = {{1, 1}, {0.5, -2}};
  EXPECT_EQ(activation_sparsity(rec), 0.0);
}

TEST(ActivationSparsity, PooledVersusLayerMean) {
  ActivationRecord rec;
  rec.dims = {2, 4};
  rec.timesteps = 1;
  rec.values = {{1, 1}, {0, 0, 0, 1}};
  EXPECT_DOUBLE_EQ(activation_sparsity(rec), 3.0 / 6.0);
  const std::vector<ActivationRecord> recs{rec};
  EXPECT_DOUBLE_EQ(activation_sparsity_layer_mean(recs), (0.0 + 0.75) / 2.0);
}

TEST(ActivationSparsity, EmptyRecordThrows) {
  EXPECT_THROW(activation_sparsity(std::span<const ActivationRecord>{}), ContractError);
  ActivationRecord rec;
  rec.dims = {2};
  rec.values = {{}};
  EXPECT_THROW(activation_sparsity(rec), ContractError);
}

TEST(EffectiveOps, ZeroInputIsZero) {
  const auto net = Network::initialize(make_snn3_config(6, 1));
  const auto rec = network_forward(net, BinaryMatrix(10, 6)).record;
  EXPECT_EQ(effective_ops(rec, net), 0.0);
}

TEST(EffectiveOps, OneAcExample) {
  NetworkConfig cfg;
  cfg.layer_dims = {2, 1};
  cfg.spiking = {false};
  cfg.prunable = {true};
  cfg.lif = {LifParams{}};
  auto net = Network::initialize(cfg);
  net.layers[0].weights.data = {0.5, 0.0};
  BinaryMatrix x(1, 2);
  x.data = {1, 1};
  const auto rec = network_forward(net, x).record;
  EXPECT_EQ(effective_ops(rec, net), 1.0);
  EXPECT_EQ(effective_ops(rec, net, OpsKind::MAC), 1.0);
}

TEST(EffectiveOps, MatchesBruteForce) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto net = t::random_small_net(rng, 8, trial);
    const std::size_t T = 1 + rng.next() % 16;
    const auto x = t::random_input(rng, T, net.config.input_dim(), rng.uniform(0.1, 0.9));
    const auto rec = network_forward(net, x).record;
    EXPECT_EQ(effective_ops(rec, net), t::brute_force_acs(rec, net)) << "trial " << trial;
  }
}

TEST(EffectiveOps, PoolsRecordsByTimestep) {
  Rng rng(78);
  const auto net = t::random_small_net(rng, 6, 1);
  const auto a = network_forward(net, t::random_input(rng, 5, net.config.input_dim(), 0.5)).record;
  const auto b = network_forward(net, t::random_input(rng, 11, net.config.input_dim(), 0.5)).record;
  const std::vector<ActivationRecord> both{a, b};
  const double expected = (t::brute_force_acs(a, net) * 5 + t::brute_force_acs(b, net) * 11) / 16.0;
  EXPECT_NEAR(effective_ops(both, net), expected, 1e-12);
}

TEST(EffectiveOps, MacCountsEveryNonzeroWeight) {
  Rng rng(79);
  const auto net = t::random_small_net(rng, 6, 2);
  const auto rec = network_forward(net, t::random_input(rng, 7, net.config.input_dim(), 0.3)).record;
  double nonzero = 0;
  for (const auto& l : net.layers) {
    for (std::size_t k = 0; k < l.size(); ++k) nonzero += (l.mask[k] && l.weights.data[k] != 0.0);
  }
  EXPECT_EQ(effective_ops(rec, net, OpsKind::MAC), nonzero);
  EXPECT_LE(effective_ops(rec, net), effective_ops(rec, net, OpsKind::MAC));
}

TEST(EffectiveOps, MonotoneUnderPruning) {
  Rng rng(80);
  for (int trial = 0; trial < 20; ++trial) {
    auto net = Network::initialize(make_snn3_config(8, trial, {8, 8, 8}));
    const auto rec = network_forward(net, t::random_input(rng, 12, 8, 0.4)).record;
    double prev = effective_ops(rec, net);
    for (int step = 0; step < 5; ++step) {
      prune_step(net, 15.0, PruneScope::PerLayer);
      const double now = effective_ops(rec, net);
      EXPECT_LE(now, prev);
      prev = now;
    }
  }
}

TEST(EffectiveOps, TopologyMismatchThrows) {
  const auto net = Network::initialize(make_snn3_config(6, 1));
  const auto other = Network::initialize(make_snn3_config(5, 1));
  const auto rec = network_forward(other, BinaryMatrix(3, 5)).record;
  EXPECT_THROW(effective_ops(rec, net), ContractError);
}
