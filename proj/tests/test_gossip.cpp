#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dbandit/gossip.hpp"
#include "dbandit/rng.hpp"

using namespace dbandit;

namespace {

Matrix<double> averaging2() {
  Matrix<double> w(2, 2);
  w << 0.5, 0.5, 0.5, 0.5;
  return w;
}

GossipBuffer<double> two_agent_buffer() {
  Matrix<double> init(2, 1);
  init << 0.0, 2.0;
  return GossipBuffer<double>::from_initial(init);
}

}  // namespace

TEST_CASE("mixing coefficient formula") {
  CHECK(mixing_coefficient(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mixing_coefficient(0.8) == doctest::Approx(0.625).epsilon(1e-15));
  // 1/(1 + sqrt(1 - 0.99^2)) evaluated in high precision.
  CHECK(mixing_coefficient(0.99) == doctest::Approx(0.8763724519981034).epsilon(1e-14));
  CHECK_THROWS_AS(mixing_coefficient(-0.1), Error);
  CHECK_THROWS_AS(mixing_coefficient(1.0), Error);
}

TEST_CASE("block length formula") {
  // ln((KT)^6 sqrt(14 N)) / ((1 - 1/sqrt2) sqrt(1 - sigma2)), ceiled.
  const GossipParams a = block_length(2, 10000, 16, 0.0);
  CHECK(a.block_len_b == 213);
  CHECK(a.kappa == doctest::Approx(0.5));
  CHECK_FALSE(a.overridden);
  CHECK_FALSE(a.warn_b_exceeds_t);

  const GossipParams b = block_length(2, 10000, 16, 0.75);
  CHECK(b.block_len_b == 425);
  CHECK(b.block_len_b > a.block_len_b);  // monotone in sigma2

  const GossipParams c = block_length(2, 10000, 16, 0.0, 50);
  CHECK(c.block_len_b == 50);
  CHECK(c.overridden);

  const GossipParams d = block_length(2, 3, 2, 0.0);
  CHECK(d.warn_b_exceeds_t);

  CHECK_THROWS_AS(block_length(2, 10000, 16, 1.0), Error);
}

TEST_CASE("single standard gossip step on the averaging matrix") {
  GossipBuffer<double> buf = two_agent_buffer();
  gossip_step(buf, averaging2(), 0.0);
  CHECK(buf.curr(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(buf.curr(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(buf.step_index == 1);
}

TEST_CASE("accelerated step with kappa = 0.5") {
  GossipBuffer<double> buf = two_agent_buffer();
  gossip_step(buf, averaging2(), 0.5);
  // 1.5 * (1,1) - 0.5 * (0,2) = (1.5, 0.5)
  CHECK(buf.curr(0, 0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(buf.curr(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("dimension mismatch is rejected") {
  GossipBuffer<double> buf = two_agent_buffer();
  Matrix<double> w3 = Matrix<double>::Identity(3, 3);
  CHECK_THROWS_AS(gossip_step(buf, w3, 0.0), Error);
}

TEST_CASE("mean preservation over many steps") {
  TopologyParams er;
  er.edge_prob = 0.4;
  const GossipMatrix w = metropolis_weights(build_topology(TopologyKind::erdos_renyi, 9, er, 2));
  const double kappa = mixing_coefficient(spectral_gap(w).sigma2);
  Rng rng({42});
  Matrix<double> init(9, 3);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 3; ++j) init(i, j) = 10.0 * rng.uniform() - 5.0;
  GossipBuffer<double> buf = GossipBuffer<double>::from_initial(init);
  const Vector<double> mean0 = init.colwise().mean();
  for (int step = 0; step < 10000; ++step) gossip_step(buf, w.weights, kappa);
  const Vector<double> mean1 = buf.curr.colwise().mean();
  for (int j = 0; j < 3; ++j) CHECK(std::abs(mean1[j] - mean0[j]) <= 1e-10);
}

TEST_CASE("run_block_gossip with B = 0 leaves the buffer unchanged") {
  GossipBuffer<double> buf = two_agent_buffer();
  GossipParams params;
  params.block_len_b = 0;
  params.kappa = 0.5;
  run_block_gossip(buf, averaging2(), params);
  CHECK(buf.curr(0, 0) == 0.0);
  CHECK(buf.curr(1, 0) == 2.0);
}

TEST_CASE("complete graph with kappa = 0 reaches the average in one step") {
  const GossipMatrix w = metropolis_weights(build_topology(TopologyKind::complete, 5));
  Rng rng({7});
  Matrix<double> init(5, 2);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 2; ++j) init(i, j) = rng.uniform();
  GossipBuffer<double> buf = GossipBuffer<double>::from_initial(init);
  GossipParams params;
  params.block_len_b = 1;
  params.kappa = 0.0;
  run_block_gossip(buf, w.weights, params);
  CHECK(consensus_error(buf) <= 1e-15);
}

TEST_CASE("geometric decay certificate on ring and grid") {
  TopologyParams grid;
  grid.grid_rows = 4;
  grid.grid_cols = 4;
  const GossipMatrix ws[] = {metropolis_weights(build_topology(TopologyKind::ring, 8)),
                             metropolis_weights(build_topology(TopologyKind::grid, 16, grid))};
  for (const GossipMatrix& w : ws) {
    const double sigma2 = spectral_gap(w).sigma2;
    const double kappa = mixing_coefficient(sigma2);
    Rng rng({13, static_cast<std::uint64_t>(w.n())});
    for (int b : {10, 25, 50}) {
      for (int trial = 0; trial < 5; ++trial) {
        Matrix<double> init(w.n(), 4);
        for (int i = 0; i < w.n(); ++i)
          for (int j = 0; j < 4; ++j) init(i, j) = 2.0 * rng.uniform() - 1.0;
        GossipBuffer<double> buf = GossipBuffer<double>::from_initial(init);
        const double gap0 = frobenius_gap(init);
        for (int s = 0; s < b; ++s) gossip_step(buf, w.weights, kappa);
        CHECK(frobenius_gap(buf.curr) <= gossip_decay_factor(sigma2, b) * gap0 + 1e-12);
      }
    }
  }
}

TEST_CASE("consensus error") {
  Matrix<double> same(3, 2);
  same << 1, 2, 1, 2, 1, 2;
  CHECK(consensus_error(GossipBuffer<double>::from_initial(same)) == 0.0);

  CHECK(consensus_error(two_agent_buffer()) == doctest::Approx(1.0).epsilon(1e-15));

  // Brute force with independent (reversed) summation order.
  Rng rng({77});
  Matrix<double> init(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) init(i, j) = rng.uniform() * 4 - 2;
  const GossipBuffer<double> buf = GossipBuffer<double>::from_initial(init);
  double mean[3] = {0, 0, 0};
  for (int j = 2; j >= 0; --j)
    for (int i = 5; i >= 0; --i) mean[j] += init(i, j) / 6.0;
  double worst = 0;
  for (int i = 5; i >= 0; --i) {
    double sq = 0;
    for (int j = 2; j >= 0; --j) sq += (init(i, j) - mean[j]) * (init(i, j) - mean[j]);
    worst = std::max(worst, std::sqrt(sq));
  }
  CHECK(consensus_error(buf) == doctest::Approx(worst).epsilon(1e-12));
}
