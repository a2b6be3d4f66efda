#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "spiketrain/adversary.hpp"
#include "spiketrain/decimation.hpp"
#include "spiketrain/sweep.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace spiketrain;

namespace {

AdversaryPair class_pair(std::size_t l, double h, std::uint64_t trial) {
  const auto g = random_cluster_geometry(l, 0.8 / static_cast<double>(l - 1), 31, trial);
  const auto [f0, spec] = place_cluster(g, 0.0, h);
  AdversaryOptions o;
  o.bounds = AmplitudeBounds(1.0, 2.0);
  return find_max_adversary(f0, spec, o);
}

DecimationConfig config_for(std::size_t d, double node_bound) {
  DecimationConfig c;
  c.model_order = d;
  c.node_bound = node_bound;
  return c;
}

}  // namespace

TEST(AdversarialOracle, IdenticalMembersHaveZeroEpsilon) {
  const auto f = table_signal_pair<double>(TableFamily::F5, 0.1, 0.05).first;
  const AdversaryPair p{f, f, span_cluster(f, 0, 3)};
  const auto oracle = make_adversarial_oracle(p, PairMember::f1, 0.4);
  EXPECT_EQ(oracle.epsilon(), 0.0);
}

TEST(AdversarialOracle, MembersSeeBitIdenticalMeasurements) {
  const auto p = class_pair(2, 0.02, 0);
  const auto a = make_adversarial_oracle(p, PairMember::f0, 5.0);
  const auto b = make_adversarial_oracle(p, PairMember::f1, 5.0);
  for (double s = -5.0; s <= 5.0; s += 0.37) {
    const auto x = a.measure(s);
    const auto y = b.measure(s);
    EXPECT_EQ(x.real(), y.real());
    EXPECT_EQ(x.imag(), y.imag());
  }
  EXPECT_EQ(a.base_signal(), p.f0);
  EXPECT_EQ(b.base_signal(), p.f1);
  EXPECT_EQ(a.epsilon(), b.epsilon());
}

TEST(AdversarialOracle, EpsilonWithinGapBound) {
  // N h = 0.1: epsilon <= C2 (hN)^{2l-1} with M = 2.
  for (std::size_t l : {2u, 3u}) {
    const double h = 0.05;
    const auto p = class_pair(l, h, 3);
    const double N = 0.1 / h;
    const auto oracle = make_adversarial_oracle(p, PairMember::f1, N);
    EXPECT_GT(oracle.epsilon(), 0.0);
    EXPECT_LE(oracle.epsilon(), gap_bound_constant(l, 2.0) * std::pow(h * N, 2.0 * l - 1.0) * (1 + 1e-9))
        << "l=" << l;
  }
}

TEST(AdversarialOracle, RangeErrors) {
  const auto p = class_pair(2, 0.02, 1);
  const double limit = 1.0 / (2.0 * std::numbers::pi * 0.02);
  EXPECT_THROW((void)make_adversarial_oracle(p, PairMember::f1, 1.01 * limit), RangeError);
  EXPECT_THROW((void)make_adversarial_oracle(p, PairMember::f1, 0.0), InvalidArgument);
  const auto oracle = make_adversarial_oracle(p, PairMember::f1, 5.0);
  EXPECT_THROW((void)oracle.measure(5.5), RangeError);
  EXPECT_NO_THROW((void)oracle.measure(-5.0));
}

TEST(RandomOracle, ExactAtZeroNoise) {
  const SpikeSignal f({1.0, -0.5}, {-0.2, 0.4});
  const auto oracle = make_random_oracle(f, 0.0, 3.0, 9);
  for (double s : {-3.0, -1.1, 0.0, 0.7, 3.0}) {
    const auto phi = oracle.measure(s);
    const auto ref = fourier_eval(f, s);
    EXPECT_EQ(phi.real(), ref.real());
    EXPECT_EQ(phi.imag(), ref.imag());
  }
}

TEST(RandomOracle, DeterministicInSeedAndFrequency) {
  const SpikeSignal f({1.0}, {0.1});
  const auto a = make_random_oracle(f, 1e-3, 3.0, 9);
  const auto b = make_random_oracle(f, 1e-3, 3.0, 9);
  const auto c = make_random_oracle(f, 1e-3, 3.0, 10);
  const auto late = a.measure(1.25);
  (void)b.measure(0.5);
  (void)b.measure(-2.0);
  EXPECT_EQ(b.measure(1.25), late);
  EXPECT_NE(c.measure(1.25), late);
  EXPECT_EQ(a.measure(0.0), a.measure(-0.0));
}

TEST(RandomOracleProperty, NoiseStaysInDiscAndFillsIt) {
  const SpikeSignal f({1.0, 1.0}, {-0.1, 0.1});
  const double eps = 1e-4;
  const auto oracle = make_random_oracle(f, eps, 10.0, 2024);
  constexpr int kQueries = 100000;
  double largest = 0.0;
  double mean_square = 0.0;
  for (int i = 0; i < kQueries; ++i) {
    const double s = -10.0 + 20.0 * i / (kQueries - 1.0);
    const double n = std::abs(oracle.noise(s));
    largest = std::max(largest, n);
    mean_square += n * n / kQueries;
  }
  EXPECT_LE(largest, eps);
  EXPECT_GT(largest, 0.99 * eps);
  // Uniform on the disc: E|z|^2 = eps^2 / 2.
  EXPECT_NEAR(mean_square / (eps * eps), 0.5, 0.01);
}

TEST(StrideLadder, RespectsAliasAndBand) {
  testgen::Gen gen(61);
  for (int trial = 0; trial < 100; ++trial) {
    DecimationConfig c = config_for(static_cast<std::size_t>(gen.integer(1, 5)), gen.uniform(0.01, 5.0));
    c.levels = static_cast<std::size_t>(gen.integer(1, 6));
    const double N = gen.uniform(0.1, 100.0);
    const auto ladder = stride_ladder(c, N);
    ASSERT_EQ(ladder.size(), c.levels);
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      EXPECT_LT(2.0 * ladder[i] * c.node_bound, 1.0);
      EXPECT_LE((2.0 * c.model_order - 1.0) * ladder[i], N * (1 + 1e-15));
      if (i > 0) EXPECT_EQ(ladder[i], ladder[i - 1] / 2);
    }
  }
}

TEST(DecimationConfig, Validation) {
  EXPECT_THROW(config_for(0, 1.0).validate(), InvalidArgument);
  EXPECT_THROW(config_for(1, 0.0).validate(), InvalidArgument);
  auto c = config_for(1, 1.0);
  c.levels = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(DecimatedProny, NoiselessPair) {
  const SpikeSignal f({1.0, 1.0}, {-0.3, 0.3});
  const auto r = decimated_prony(make_random_oracle(f, 0.0, 10.0, 1), config_for(2, 0.5), f);
  EXPECT_LE(r.node_error, 1e-10);
  EXPECT_LE(r.amplitude_error, 1e-10);
  EXPECT_GT(r.sample_count, 0u);
}

TEST(DecimatedProny, NoisyCloseTwoNodeCluster) {
  // N h = 0.2 and epsilon = (hN)^4 / 100.
  const double N = 10.0;
  const double h = 0.02;
  const SpikeSignal f({1.0, 1.0}, {-h / 2, h / 2});
  const double eps = std::pow(h * N, 4.0) / 100.0;
  const auto r = decimated_prony(make_random_oracle(f, eps, N, 5), config_for(2, 2 * h), f);
  EXPECT_LE(r.node_error, h / 20);
}

TEST(DecimatedProny, AdversarialPairForcesHalfDisplacement) {
  const auto p = class_pair(2, 0.02, 2);
  auto c = config_for(2, 0.04);
  const auto r0 = decimated_prony(make_adversarial_oracle(p, PairMember::f0, 5.0), c, p.f0);
  const auto r1 = decimated_prony(make_adversarial_oracle(p, PairMember::f1, 5.0), c, p.f1);
  EXPECT_EQ(r0.recovered, r1.recovered);
  EXPECT_GE(std::max(r0.node_error, r1.node_error), 0.5 * p.node_displacement * (1 - 1e-12));
}

TEST(DecimatedPronyProperty, NoiselessUpToFourSpikes) {
  testgen::Gen gen(62);
  for (int trial = 0; trial < 60; ++trial) {
    const auto d = static_cast<std::size_t>(gen.integer(1, 4));
    const auto f = gen.signal(d, -0.5, 0.5, 0.1, 0.5, 2.0);
    const auto r = decimated_prony(make_random_oracle(f, 0.0, 20.0, trial), config_for(d, 0.5), f);
    EXPECT_LE(r.node_error, 1e-8) << "trial " << trial;
  }
}

TEST(DecimatedPronyProperty, ResidualAndRefinementSoundness) {
  testgen::Gen gen(63);
  for (int trial = 0; trial < 40; ++trial) {
    const auto d = static_cast<std::size_t>(gen.integer(1, 3));
    const auto f = gen.signal(d, -0.5, 0.5, 0.15, 0.5, 2.0);
    const double eps = std::pow(10.0, gen.uniform(-10.0, -4.0));
    const auto oracle = make_random_oracle(f, eps, 20.0, 100 + trial);
    const auto r = decimated_prony(oracle, config_for(d, 0.5), f);
    EXPECT_LE(r.residual, std::max(10.0 * eps * std::sqrt(static_cast<double>(r.sample_count)),
                                   1e-9 * std::max(1.0, r.recovered.total_variation())));
    // The truth explains the data to within epsilon, so the fit cannot be worse
    // than the bound it was accepted under; refinement never raises the cost.
    ASSERT_FALSE(r.refinement_history.empty());
    for (std::size_t i = 1; i < r.refinement_history.size(); ++i) {
      EXPECT_LE(r.refinement_history[i], r.refinement_history[i - 1]) << "trial " << trial;
    }
    EXPECT_EQ(static_cast<int>(r.refinement_history.size()) - 1, r.refinement_iterations);
  }
}

TEST(DecimatedProny, OverstatedOrderIsModelOrderError) {
  const SpikeSignal f({1.0}, {0.2});
  EXPECT_THROW((void)decimated_prony(make_random_oracle(f, 0.0, 10.0, 1), config_for(2, 0.5)),
               ModelOrderError);
}

TEST(DecimatedProny, UnderstatedOrderIsReconstructionError) {
  const SpikeSignal f({1.0, -1.0, 0.8}, {-0.3, 0.0, 0.35});
  try {
    (void)decimated_prony(make_random_oracle(f, 0.0, 10.0, 1), config_for(1, 0.5));
    FAIL() << "expected ReconstructionError";
  } catch (const ReconstructionError& e) {
    EXPECT_EQ(e.best().recovered.size(), 1u);
    EXPECT_GT(e.best().residual, 1e-3);
  }
}

TEST(ScoreAgainst, RejectsOrderMismatch) {
  ReconstructionReport r{SpikeSignal({1.0}, {0.0})};
  EXPECT_THROW(score_against(r, SpikeSignal({1.0, 1.0}, {0.0, 0.5})), DimensionError);
  score_against(r, SpikeSignal({1.5}, {0.25}));
  EXPECT_DOUBLE_EQ(r.node_error, 0.25);
  EXPECT_DOUBLE_EQ(r.amplitude_error, 0.5);
}
