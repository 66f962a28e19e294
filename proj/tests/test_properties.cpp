// Randomized invariant checks over many generated inputs.

#include "rotcon/metrics.hpp"
#include "rotcon/optimize.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rotcon;

namespace {

Constellation random_case(std::mt19937_64& rng, std::size_t max_log_m = 6) {
  std::uniform_int_distribution<std::size_t> log_m(1, max_log_m);
  std::uniform_int_distribution<int> dim(1, 4);
  return oracle::random_constellation(std::size_t{1} << log_m(rng), dim(rng), rng);
}

double random_n0(std::mt19937_64& rng) {
  return std::pow(10.0, std::uniform_real_distribution<double>(-3, 2)(rng));
}

RotationMatrix with_planted_zero(Eigen::Index n, std::mt19937_64& rng) {
  // A rotation fixing the last axis has zeros in its last row and column.
  Matrix m = Matrix::Identity(n, n);
  m.topLeftCorner(n - 1, n - 1) = oracle::random_rotation(n - 1, rng).matrix();
  // Permuting rows keeps the zeros.
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + n, rng);
  Matrix q = perm * m;
  if (q.determinant() < 0) q.row(0) *= -1;
  return RotationMatrix(q);
}

}  // namespace

TEST(Property, CutoffRateBetweenZeroAndBits) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = random_case(rng);
    const double r = cutoff_rate(x, ChannelSpec(random_n0(rng)));
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, x.bits());
  }
}

TEST(Property, LocalRateNonIncreasingInRadius) {
  std::mt19937_64 rng(102);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_case(rng);
    const ChannelSpec ch(random_n0(rng));
    double prev = INFINITY;
    int prev_div = x.dim() + 1;
    double prev_dp = INFINITY;
    for (double r : {0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 100.0}) {
      const Radius rad = Radius::finite(r);
      const double v = local_cutoff_rate(x, rad, ch);
      EXPECT_LE(v, prev + 1e-12);
      prev = v;
      const auto d = diversity_order(x, rad);
      if (!d.empty_ball) {
        EXPECT_LE(d.order, prev_div);
        prev_div = d.order;
        const double dp = min_product_distance(x, rad).value;
        EXPECT_LE(dp, prev_dp);
        prev_dp = dp;
      }
    }
    EXPECT_EQ(local_cutoff_rate(x, Radius::infinite(), ch), cutoff_rate(x, ch));
  }
}

TEST(Property, CutoffRateInvariantUnderSignFlipsAndPermutations) {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_case(rng);
    const Eigen::Index n = x.dim();
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + n, rng);
    Matrix t = Matrix(perm);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (rng() & 1) t.row(i) *= -1;
    }
    const Constellation y(PointMatrix(x.points() * t.transpose()));
    const ChannelSpec ch(random_n0(rng));
    EXPECT_NEAR(cutoff_rate(y, ch), cutoff_rate(x, ch), 1e-13);
  }
}

TEST(Property, PairMetricsMatchNaiveOracle) {
  std::mt19937_64 rng(104);
  for (int trial = 0; trial < 60; ++trial) {
    const auto x = random_case(rng);
    const auto p = oracle::rows(x);
    const double n0 = random_n0(rng);
    const ChannelSpec ch(n0);
    EXPECT_NEAR(cutoff_rate(x, ch), oracle::cutoff_rate(p, n0), 1e-12);
    const double s0 = oracle::high_snr_sum(p, n0);
    EXPECT_NEAR(high_snr_sum(x, ch), s0, 1e-12 * s0);
    for (double r : {1.0, 3.0, double(INFINITY)}) {
      const Radius rad = std::isinf(r) ? Radius::infinite() : Radius::finite(r);
      EXPECT_NEAR(local_cutoff_rate(x, rad, ch), oracle::cutoff_rate(p, n0, r), 1e-12);
      const auto d = diversity_order(x, rad);
      if (!d.empty_ball) {
        EXPECT_EQ(d.order, oracle::diversity(p, r));
        EXPECT_NEAR(min_product_distance(x, rad).value, oracle::product_distance(p, r), 1e-12);
      }
    }
  }
}

TEST(Property, LocalFullDiversityEquivalence) {
  std::mt19937_64 rng(105);
  for (int trial = 0; trial < 40; ++trial) {
    const int half = 1 + trial % 2;
    const auto x = make_qam_product(trial % 3 == 0 ? 16 : 4, half);
    const Eigen::Index n = x.dim();
    const RotationMatrix q = trial % 2 ? oracle::random_rotation(n, rng) : with_planted_zero(n, rng);
    const bool full = is_locally_fully_diverse(q);
    EXPECT_EQ(full, trial % 2 == 1);
    EXPECT_EQ(diversity_order(rotate(x, q), Radius::finite(2)).order == n, full) << "trial " << trial;
  }
}

TEST(Property, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(106);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = trial % 2 ? 4 : 2;
    const std::size_t m = std::size_t{1} << (1 + trial % 6);
    const auto x = oracle::random_constellation(m, n, rng);
    const auto q = oracle::random_rotation(n, rng);
    const double n0 = x.energy() * std::pow(10.0, std::uniform_real_distribution<double>(-1.5, 0.5)(rng));
    const auto p = oracle::rows(x);
    auto f = [&](const Matrix& qq) {
      oracle::Points rotated(p.size(), std::vector<double>(static_cast<std::size_t>(n)));
      for (std::size_t a = 0; a < p.size(); ++a) {
        for (Eigen::Index i = 0; i < n; ++i) {
          double s = 0;
          for (Eigen::Index j = 0; j < n; ++j) s += qq(i, j) * p[a][static_cast<std::size_t>(j)];
          rotated[a][static_cast<std::size_t>(i)] = s;
        }
      }
      return oracle::cutoff_rate(rotated, n0);
    };
    const Matrix fd = oracle::fd_gradient(f, q.matrix());
    const Matrix g = cutoff_rate_gradient(x, ChannelSpec(n0), q);
    const double rel = (g - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff();
    worst = std::max(worst, rel);
    EXPECT_LE(rel, 1e-5) << "trial " << trial;
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Property, RotationNeverChosenWhenHarmful) {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = oracle::random_constellation(16, trial % 2 ? 2 : 4, rng);
    const ChannelSpec ch(random_n0(rng));
    const auto r = grid_search_t(x, ch, 1e-2);
    EXPECT_GE(r.objective, cutoff_rate(x, ch) - 1e-12);
  }
}

TEST(Property, DescentMonotone) {
  std::mt19937_64 rng(108);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = oracle::random_constellation(16, 4, rng);
    const ChannelSpec ch(x.energy() * 0.1);
    RotationSearchOptions opts;
    opts.descent.max_iters = 200;
    const auto trace = optimize_rotation_full(x, ch, oracle::random_rotation(4, rng), opts);
    for (std::size_t i = 1; i < trace.iterates.size(); ++i) {
      EXPECT_LE(trace.iterates[i].objective, trace.iterates[i - 1].objective);
    }
  }
}

TEST(Property, RotationPreservesEnergy) {
  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_case(rng);
    const auto y = rotate(x, oracle::random_rotation(x.dim(), rng));
    EXPECT_NEAR(y.energy(), x.energy(), 1e-10 * std::max(1.0, x.energy()));
  }
}
