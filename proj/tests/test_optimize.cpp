#include "rotcon/error.hpp"
#include "rotcon/optimize.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace rotcon;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

TEST(DifferenceSet, WeightsCountOrderedPairs) {
  const auto x = make_qam_product(16, 2);
  const DifferenceSet d(x);
  EXPECT_DOUBLE_EQ(d.weights().sum(), 256.0 * 255.0);
  // Differences per axis lie in {0, ±2, ±4, ±6}: 7^4 - 1 nonzero vectors, halved by sign.
  EXPECT_EQ(d.size(), (7 * 7 * 7 * 7 - 1) / 2);
}

TEST(DifferenceSet, NoCollapseForGenericPoints) {
  std::mt19937_64 rng(31);
  const auto x = rotate(oracle::random_constellation(16, 3, rng), oracle::random_rotation(3, rng));
  const DifferenceSet d(x);
  EXPECT_DOUBLE_EQ(d.weights().sum(), 16.0 * 15.0);
  EXPECT_LE(d.size(), 120);
}

TEST(Objective, MatchesDirectCutoffRate) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = trial % 2 ? make_qam_product(16, 2) : oracle::random_constellation(32, 4, rng);
    const auto q = oracle::random_rotation(4, rng);
    const ChannelSpec ch(0.1 + 0.2 * trial);
    EXPECT_NEAR(CutoffRateObjective(x, ch).value(q.matrix()), cutoff_rate(rotate(x, q), ch), 1e-12);
  }
}

TEST(Gradient, TwoPointClosedForm) {
  // z = x - y = (2, 0); u = Qz; S = 2 prod 1/(1 + u_i^2/c); R = 1 - log2(1 + S/2).
  PointMatrix p(2, 2);
  p << 1, 0, -1, 0;
  const Constellation x(p);
  const double n0 = 0.4;
  const double c = 8 * n0;
  const auto q = rotation_at(skew_family(1), 0.3);
  const Vector z = Vector::Unit(2, 0) * 2.0;
  const Vector u = q.matrix() * z;
  const double t0 = 1 / (1 + u(0) * u(0) / c);
  const double t1 = 1 / (1 + u(1) * u(1) / c);
  const double s = 2 * t0 * t1;
  Matrix expected(2, 2);
  for (int i = 0; i < 2; ++i) {
    const double ti = i == 0 ? t0 : t1;
    for (int j = 0; j < 2; ++j) {
      const double ds = 2 * t0 * t1 * (-2 * u(i) * ti / c) * z(j);
      expected(i, j) = -ds / 2 / (std::numbers::ln2 * (1 + s / 2));
    }
  }
  EXPECT_LE((cutoff_rate_gradient(x, ChannelSpec(n0), q) - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Gradient, MatchesFiniteDifferencesAtIdentity) {
  const auto x = make_qam_product(4, 2);
  const ChannelSpec ch = ChannelSpec::from_ebn0_db(10);
  const CutoffRateObjective obj(x, ch);
  const Matrix g = cutoff_rate_gradient(x, ch, RotationMatrix::identity(4));
  const Matrix fd = oracle::fd_gradient([&](const Matrix& q) { return obj.value(q); }, Matrix::Identity(4, 4));
  EXPECT_LE((g - fd).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
  const Matrix field = gradient_field(g, RotationMatrix::identity(4)).matrix();
  EXPECT_LE((field - (fd - fd.transpose())).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Gradient, FlatObjectiveHasTinyGradient) {
  const auto x = make_qam_product(4, 2);
  std::mt19937_64 rng(33);
  EXPECT_LT(cutoff_rate_gradient(x, ChannelSpec(1e8), oracle::random_rotation(4, rng)).norm(), 1e-7);
}

TEST(GridSearch, ObjectiveIsDirectEvaluationAtOptimum) {
  const auto x = make_qam_product(4, 2);
  const ChannelSpec ch = ChannelSpec::from_ebn0_db(10);
  const auto r = grid_search_t(x, ch, 1e-3, {true, 1});
  EXPECT_NEAR(r.objective, cutoff_rate(rotate(x, rotation_at(skew_family(2), r.t_opt)), ch), 1e-12);
  EXPECT_NEAR(std::remainder(r.t_opt, r.grid_step), 0.0, 1e-12);
  EXPECT_GE(r.objective, cutoff_rate(x, ch));
  EXPECT_EQ(r.profile.size(), static_cast<std::size_t>(std::floor(std::numbers::pi / 2 / 1e-3)) + 1);
  EXPECT_EQ(r.profile.front().t, 0.0);
}

TEST(GridSearch, WorkerCountDoesNotChangeResult) {
  const auto x = make_qam_product(16, 2);
  const ChannelSpec ch = ChannelSpec::for_constellation(x, 8);
  const auto a = grid_search_t(x, ch, 1e-2, {true, 1});
  const auto b = grid_search_t(x, ch, 1e-2, {true, 3});
  EXPECT_EQ(a.t_opt, b.t_opt);
  for (std::size_t i = 0; i < a.profile.size(); ++i) EXPECT_EQ(a.profile[i].objective, b.profile[i].objective);
}

TEST(GridSearch, EightDimensionalLowSnr) {
  const auto x = make_qam_product(4, 4);
  const auto r = grid_search_t(x, ChannelSpec::for_constellation(x, 5.0), 1e-3);
  EXPECT_NEAR(r.t_opt, 69.2952 * kDeg, 1e-3);
}

TEST(GridSearch, JointScalingLeavesArgmaxUnchanged) {
  const auto x = make_qam_product(16, 2);
  const auto y = normalize_energy(x, 3.7);
  const double n0 = 0.4;
  const double scale = 3.7 / x.energy();
  EXPECT_EQ(grid_search_t(x, ChannelSpec(n0), 1e-2).t_opt,
            grid_search_t(y, ChannelSpec(n0 * scale), 1e-2).t_opt);
}

TEST(GridSearch, Guards) {
  EXPECT_THROW(grid_search_t(make_qam_product(4, 3), ChannelSpec(1), 1e-2), Error);
  EXPECT_THROW(grid_search_t(make_qam_product(4, 2), ChannelSpec(1), 1.0), Error);
  EXPECT_THROW(grid_search_t(make_qam_product(4, 2), ChannelSpec(1), 0.0), Error);
  PointMatrix one(1, 2);
  one << 0, 0;
  EXPECT_THROW(grid_search_t(Constellation(one), ChannelSpec(1), 1e-2), Error);
}

TEST(LowSnr, ClosedForm) {
  EXPECT_NEAR(low_snr_optimal_t(2), 45 * kDeg, 1e-15);
  EXPECT_NEAR(low_snr_optimal_t(4), 60 * kDeg, 1e-15);
  EXPECT_NEAR(low_snr_optimal_t(8) / kDeg, 69.2952, 1e-4);
  EXPECT_THROW(low_snr_optimal_t(6), Error);
}

TEST(LowSnr, GAtZero) {
  const ChannelSpec ch(0.3);
  EXPECT_NEAR(g_of_t(4, ch, 0.0), 1 + 1 / 0.6, 1e-15);
}

TEST(LowSnr, GArgmaxOnFineGrid) {
  for (Eigen::Index n : {4, 8, 16}) {
    const ChannelSpec ch(0.7);
    double best_t = 0;
    double best = -1;
    for (int k = 0; k * 1e-5 <= std::numbers::pi / 2; ++k) {
      const double v = g_of_t(n, ch, k * 1e-5);
      if (v > best) {
        best = v;
        best_t = k * 1e-5;
      }
    }
    EXPECT_NEAR(best_t, low_snr_optimal_t(n), 1e-4) << "n=" << n;
  }
}

TEST(LowSnr, LocalRateOrderingFollowsG) {
  // Within radius 2 every rotated neighbor pair of 4D 4-QAM has the same
  // coordinate profile, so R(Q(t)X, 2) is a decreasing function of S = cn/g(t).
  const auto x = make_qam_product(4, 2);
  const auto family = skew_family(2);
  const ChannelSpec ch = ChannelSpec::from_ebn0_db(0.0);
  std::vector<std::pair<double, double>> samples;
  for (int k = 1; k <= 50; ++k) {
    const double t = k * (std::numbers::pi / 2) / 51;
    samples.emplace_back(g_of_t(4, ch, t),
                         local_cutoff_rate(rotate(x, rotation_at(family, t)), Radius::finite(2), ch));
  }
  for (const auto& a : samples) {
    for (const auto& b : samples) {
      if (a.first < b.first - 1e-12) {
        EXPECT_LT(a.second, b.second + 1e-12);
      }
    }
  }
}

TEST(RotationDescent, MonotoneAndNeverWorseThanStart) {
  const auto x = make_qam_product(4, 2);
  const ChannelSpec ch = ChannelSpec::from_ebn0_db(10);
  const auto start = rotation_at(skew_family(2), 0.8);
  const auto trace = optimize_rotation_full(x, ch, start);
  ASSERT_FALSE(trace.iterates.empty());
  for (std::size_t i = 1; i < trace.iterates.size(); ++i) {
    EXPECT_LE(trace.iterates[i].objective, trace.iterates[i - 1].objective);
  }
  EXPECT_GE(-trace.last().objective, cutoff_rate(rotate(x, start), ch));
}

TEST(RotationDescent, StartingAtFamilyOptimumDoesNotDecrease) {
  const auto x = make_qam_product(4, 2);
  const ChannelSpec ch = ChannelSpec::from_ebn0_db(10);
  const auto grid = grid_search_t(x, ch, 1e-3);
  const auto trace = optimize_rotation_full(x, ch, rotation_at(skew_family(2), grid.t_opt));
  EXPECT_GE(-trace.last().objective, grid.objective - 1e-12);
}

TEST(RotationDescent, MultistartReachesFamilyMaximum) {
  const auto x = make_qam_product(4, 2);
  const ChannelSpec ch = ChannelSpec::from_ebn0_db(10);
  RotationSearchOptions opts;
  opts.multistart = kDefaultMultistart;
  const auto trace = optimize_rotation_full(x, ch, default_initial_rotation(4), opts);
  const auto grid = grid_search_t(x, ch, 1e-4);
  EXPECT_NEAR(-trace.last().objective, grid.objective, 1e-6);
}

TEST(Nuqam, FactorizedObjectiveMatchesDirect) {
  for (const auto& a : {std::vector<double>{1, 3}, {0.9, 3.1}, {0.5, 1.5, 2.7, 4.0}}) {
    const NuqamParams alpha(a);
    const auto bits = static_cast<double>(make_nuqam(alpha).bits());
    const ChannelSpec ch = ChannelSpec::from_ebn0_db(8);
    EXPECT_NEAR(nuqam_objective(alpha, ch), cutoff_rate(normalize_energy(make_nuqam(alpha), bits), ch), 1e-13);
  }
}

TEST(Nuqam, ResultIsReproducibleFromAlpha) {
  const ChannelSpec ch = ChannelSpec::from_ebn0_db(8);
  const auto r = optimize_nuqam(4, ch, NuqamParams({1, 3}));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.objective, cutoff_rate(normalize_energy(make_nuqam(r.alpha), 4), ch), 1e-14);
  EXPECT_NEAR(nuqam_objective(r.alpha, ch), r.objective, 1e-13);
  EXPECT_GT(r.objective, nuqam_objective(NuqamParams({1, 3}), ch));
}

TEST(Nuqam, InvariantToInitialScale) {
  const ChannelSpec ch = ChannelSpec::from_ebn0_db(12);
  const auto a = optimize_nuqam(6, ch, NuqamParams({1, 3, 5, 7}));
  const auto b = optimize_nuqam(6, ch, NuqamParams({0.01, 0.03, 0.05, 0.07}));
  const auto ra = alpha_ratios(a.alpha);
  const auto rb = alpha_ratios(b.alpha);
  for (std::size_t i = 0; i < ra.size(); ++i) EXPECT_NEAR(ra[i], rb[i], 1e-6);
}

TEST(Nuqam, OptimalInitIsFixedPoint) {
  const ChannelSpec ch = ChannelSpec::from_ebn0_db(8);
  const auto first = optimize_nuqam(4, ch, NuqamParams({1, 3}));
  const auto second = optimize_nuqam(4, ch, first.alpha);
  EXPECT_LE(second.iterations, 3);
  EXPECT_NEAR(second.objective, first.objective, 1e-9);
}

TEST(Nuqam, Guards) {
  const ChannelSpec ch(1);
  EXPECT_THROW(optimize_nuqam(5, ch, NuqamParams({1, 3})), Error);
  EXPECT_THROW(optimize_nuqam(6, ch, NuqamParams({1, 3})), Error);
}

TEST(Nuqam, QamEnergyRescaling) {
  const auto a = alpha_at_qam_energy(NuqamParams({2, 6}));
  EXPECT_NEAR(a.values()[0], 1.0, 1e-15);
  EXPECT_NEAR(a.values()[1], 3.0, 1e-15);
  const auto r = alpha_ratios(NuqamParams({2, 6}));
  EXPECT_EQ(r, (std::vector<double>{1, 3}));
}
