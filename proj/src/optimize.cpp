#include "rotcon/optimize.hpp"

#include "rotcon/error.hpp"
#include "rotcon/random.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <thread>

namespace rotcon {

namespace {

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

int log2_dim(Eigen::Index n) {
  if (n < 2 || !is_power_of_two(n)) {
    fail(ErrorKind::InvalidArgument,
         "dimension " + std::to_string(n) + " is not a power of two >= 2");
  }
  return std::countr_zero(static_cast<std::uint64_t>(n));
}

std::uint64_t hash_row(const double* v, Eigen::Index n) {
  std::uint64_t h = 0x51ed270b27a3c1f5ULL;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &v[i], sizeof bits);
    h = splitmix64(h ^ bits);
  }
  return h;
}

double rate_from_sum(int q, double sum) { return q - std::log2(1.0 + std::ldexp(sum, -q)); }

}  // namespace

DifferenceSet::DifferenceSet(const Constellation& x) : bits_(x.bits()) {
  const auto& p = x.points();
  const Eigen::Index m = x.size();
  const Eigen::Index n = x.dim();

  std::vector<double> coords;
  std::vector<double> weights;
  std::vector<std::int64_t> table(1024, -1);
  std::size_t mask = table.size() - 1;
  std::vector<double> z(static_cast<std::size_t>(n));

  auto rehash = [&] {
    table.assign(table.size() * 2, -1);
    mask = table.size() - 1;
    const auto count = static_cast<std::int64_t>(weights.size());
    for (std::int64_t k = 0; k < count; ++k) {
      std::size_t slot = hash_row(&coords[static_cast<std::size_t>(k * n)], n) & mask;
      while (table[slot] >= 0) slot = (slot + 1) & mask;
      table[slot] = k;
    }
  };

  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a + 1; b < m; ++b) {
      bool negate = false;
      bool decided = false;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = p(a, i) - p(b, i);
        if (!decided && d != 0.0) {
          negate = d < 0.0;
          decided = true;
        }
        z[static_cast<std::size_t>(i)] = d;
      }
      for (auto& v : z) v = (negate ? -v : v) + 0.0;

      std::size_t slot = hash_row(z.data(), n) & mask;
      while (true) {
        const std::int64_t k = table[slot];
        if (k < 0) {
          table[slot] = static_cast<std::int64_t>(weights.size());
          coords.insert(coords.end(), z.begin(), z.end());
          weights.push_back(2.0);
          if (2 * weights.size() > table.size()) rehash();
          break;
        }
        if (std::equal(z.begin(), z.end(), coords.begin() + k * n)) {
          weights[static_cast<std::size_t>(k)] += 2.0;
          break;
        }
        slot = (slot + 1) & mask;
      }
    }
  }

  const auto count = static_cast<Eigen::Index>(weights.size());
  diffs_ = Eigen::Map<const PointMatrix>(coords.data(), count, n);
  weights_ = Eigen::Map<const Vector>(weights.data(), count);
}

CutoffRateObjective::CutoffRateObjective(const Constellation& x, const ChannelSpec& ch)
    : diffs_(x), c_(8.0 * ch.n0()) {}

double CutoffRateObjective::value(const Matrix& q) const {
  const PointMatrix u = diffs_.differences() * q.transpose();
  const Vector prod = (1.0 + u.array().square() / c_).inverse().rowwise().prod();
  return rate_from_sum(diffs_.bits(), diffs_.weights().dot(prod));
}

Matrix CutoffRateObjective::gradient(const Matrix& q) const {
  const auto& z = diffs_.differences();
  const PointMatrix u = z * q.transpose();
  const Eigen::ArrayXXd t = (1.0 + u.array().square() / c_).inverse();
  const Vector prod = t.rowwise().prod();
  const double sum = diffs_.weights().dot(prod);
  const double m = std::ldexp(1.0, diffs_.bits());
  // dS/dq_ij = sum_p w_p prod_p (-2 u_pi t_pi / c) z_pj
  const Eigen::ArrayXXd coef =
      (-2.0 / c_) * u.array() * t * (diffs_.weights().array() * prod.array()).replicate(1, u.cols());
  const Matrix ds = coef.matrix().transpose() * z;
  return (-1.0 / (std::numbers::ln2 * (m + sum))) * ds;
}

TSearchResult grid_search_t(const Constellation& x, const ChannelSpec& ch, double grid_step,
                            const GridSearchOptions& options) {
  const int k = log2_dim(x.dim());
  require(x.size() >= 2, "grid search needs at least two points");
  require(std::isfinite(grid_step) && grid_step > 0 && grid_step <= std::numbers::pi / 4,
          "grid step must lie in (0, pi/4]");
  require(options.workers > 0, "need at least one worker");

  const RotationFamily family = skew_family(k);
  const CutoffRateObjective objective(x, ch);
  const auto points = static_cast<std::size_t>(std::floor(std::numbers::pi / 2 / grid_step)) + 1;
  std::vector<double> values(points);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < points; i = next++) {
      values[i] = objective.value(rotation_at(family, static_cast<double>(i) * grid_step).matrix());
    }
  };
  std::vector<std::thread> pool;
  const auto nthreads = std::min<std::size_t>(options.workers, points);
  for (std::size_t w = 1; w < nthreads; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  std::size_t best = 0;
  for (std::size_t i = 1; i < points; ++i) {
    if (values[i] > values[best]) best = i;
  }
  if (!std::isfinite(values[best])) fail(ErrorKind::Numerical, "cutoff rate is not finite");

  TSearchResult result;
  result.grid_step = grid_step;
  result.t_opt = static_cast<double>(best) * grid_step;
  result.objective = cutoff_rate(rotate(x, rotation_at(family, result.t_opt)), ch);
  if (options.keep_profile) {
    result.profile.reserve(points);
    for (std::size_t i = 0; i < points; ++i) {
      result.profile.push_back({static_cast<double>(i) * grid_step, values[i]});
    }
  }
  return result;
}

double low_snr_optimal_t(Eigen::Index n) {
  log2_dim(n);
  return std::acos(1.0 / std::sqrt(static_cast<double>(n)));
}

double g_of_t(Eigen::Index n, const ChannelSpec& ch, double t) {
  log2_dim(n);
  const double c = std::cos(t);
  const double s = std::sin(t);
  const double nm1 = static_cast<double>(n - 1);
  return (1.0 + c * c / (2.0 * ch.n0())) * std::pow(1.0 + s * s / (nm1 * 2.0 * ch.n0()), nm1);
}

Matrix cutoff_rate_gradient(const Constellation& x, const ChannelSpec& ch,
                            const RotationMatrix& q) {
  require(q.dim() == x.dim(), "rotation and constellation dimensions differ");
  return CutoffRateObjective(x, ch).gradient(q.matrix());
}

RotationMatrix default_initial_rotation(Eigen::Index n, double h) {
  require(n >= 1, "dimension must be positive");
  Matrix s = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      s(i, j) = h;
      s(j, i) = -h;
    }
  }
  return expm_skew(SkewMatrix(std::move(s)));
}

DescentTrace optimize_rotation_full(const Constellation& x, const ChannelSpec& ch,
                                    const RotationMatrix& q0,
                                    const RotationSearchOptions& options) {
  require(q0.dim() == x.dim(), "rotation and constellation dimensions differ");
  require(options.multistart >= 0, "multistart count must be non-negative");
  const CutoffRateObjective objective(x, ch);
  const RotationObjective f = [&](const RotationMatrix& q) { return -objective.value(q.matrix()); };
  const RotationGradient grad = [&](const RotationMatrix& q) {
    return Matrix(-objective.gradient(q.matrix()));
  };

  DescentTrace best = geodesic_descent(f, grad, q0, options.descent);
  Rng rng = substream(options.seed, 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index n = x.dim();
  for (int s = 0; s < options.multistart; ++s) {
    Matrix r(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) r(i, j) = normal(rng);
    }
    SkewMatrix skew = SkewMatrix::antisymmetrize(r);
    const double norm = skew.matrix().norm();
    if (norm > 0) skew = skew * (options.perturbation / norm);
    const RotationMatrix start = expm_skew(skew) * q0;
    DescentTrace trace = geodesic_descent(f, grad, start, options.descent);
    if (trace.last().objective < best.last().objective) best = std::move(trace);
  }
  return best;
}

namespace {

double qam_energy(std::size_t params) {
  const double side = 2.0 * static_cast<double>(params);
  return 2.0 * (side * side - 1.0) / 3.0;
}

double nuqam_energy(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return 2.0 * s / static_cast<double>(a.size());
}

std::vector<double> scaled_to(const std::vector<double>& a, double energy) {
  const double f = std::sqrt(energy / nuqam_energy(a));
  std::vector<double> out(a);
  for (auto& v : out) v *= f;
  return out;
}

// Per-axis factorization: the pair sum over the product grid is A^2 - m with
// A = sum over ordered level pairs of 1 / (1 + (l_a - l_b)^2 / c).
double nuqam_rate(const std::vector<double>& alpha, int q, double n0) {
  const std::vector<double> a = scaled_to(alpha, q);
  std::vector<double> levels;
  for (auto it = a.rbegin(); it != a.rend(); ++it) levels.push_back(-*it);
  levels.insert(levels.end(), a.begin(), a.end());
  const double c = 8.0 * n0;
  double axis = 0.0;
  for (double la : levels) {
    for (double lb : levels) {
      const double d = la - lb;
      axis += 1.0 / (1.0 + d * d / c);
    }
  }
  const double m = std::ldexp(1.0, q);
  return rate_from_sum(q, axis * axis - m);
}

int nuqam_bits(std::size_t params) {
  const auto levels = 2 * params;
  if ((levels & (levels - 1)) != 0) {
    fail(ErrorKind::InvalidArgument, "NUQAM needs a power-of-two number of levels per axis");
  }
  return 2 * std::countr_zero(levels);
}

std::vector<double> project_alpha(std::vector<double> a, int q) {
  for (double v : a) {
    if (!std::isfinite(v)) fail(ErrorKind::Numerical, "NUQAM parameters became non-finite");
  }
  const double top = *std::max_element(a.begin(), a.end());
  if (!(top > 0)) fail(ErrorKind::Numerical, "NUQAM projection failed: no positive parameter");
  const double floor = 1e-9 * top;
  for (auto& v : a) v = std::max(v, floor);
  std::sort(a.begin(), a.end());
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (a[i] <= a[i - 1]) a[i] = std::nextafter(a[i - 1], INFINITY) * (1.0 + 1e-12);
  }
  return scaled_to(a, q);
}

}  // namespace

double nuqam_objective(const NuqamParams& alpha, const ChannelSpec& ch) {
  return nuqam_rate(alpha.values(), nuqam_bits(alpha.size()), ch.n0());
}

AlphaDescentResult optimize_nuqam(int q_bits, const ChannelSpec& ch, const NuqamParams& init,
                                  const AlphaDescentOptions& options) {
  require(q_bits == 4 || q_bits == 6 || q_bits == 8 || q_bits == 10,
          "NUQAM optimization supports q in {4, 6, 8, 10}");
  require(nuqam_bits(init.size()) == q_bits,
          "initial NUQAM has " + std::to_string(init.size()) + " parameters, q = " +
              std::to_string(q_bits) + " needs " + std::to_string(1 << (q_bits / 2 - 1)));
  require(options.fd_step > 0 && options.step > 0 && options.max_iters >= 0,
          "invalid NUQAM descent options");

  const double n0 = ch.n0();
  auto value = [&](const std::vector<double>& a) {
    const double v = nuqam_rate(a, q_bits, n0);
    if (!std::isfinite(v)) fail(ErrorKind::Numerical, "NUQAM objective is not finite");
    return v;
  };

  std::vector<double> a = project_alpha(init.values(), q_bits);
  double f = value(a);
  double step = options.step;
  int iter = 0;
  bool converged = false;
  std::vector<double> g(a.size());
  for (; iter < options.max_iters; ++iter) {
    double gnorm2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double h = options.fd_step * a[i];
      std::vector<double> up(a), down(a);
      up[i] += h;
      down[i] -= h;
      g[i] = (value(up) - value(down)) / (2.0 * h);
      gnorm2 += g[i] * g[i];
    }
    if (std::sqrt(gnorm2) < options.grad_tol) {
      converged = true;
      break;
    }
    bool accepted = false;
    while (step >= options.min_step) {
      std::vector<double> cand(a);
      for (std::size_t i = 0; i < a.size(); ++i) cand[i] += step * g[i];
      cand = project_alpha(std::move(cand), q_bits);
      const double fc = value(cand);
      if (fc > f) {
        a = std::move(cand);
        f = fc;
        step *= 2.0;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }

  NuqamParams alpha(a);
  const double objective =
      cutoff_rate(normalize_energy(make_nuqam(alpha), static_cast<double>(q_bits)), ch);
  return AlphaDescentResult{std::move(alpha), objective, iter, converged};
}

NuqamParams alpha_at_qam_energy(const NuqamParams& alpha) {
  return NuqamParams(scaled_to(alpha.values(), qam_energy(alpha.size())));
}

std::vector<double> alpha_ratios(const NuqamParams& alpha) {
  std::vector<double> out(alpha.values());
  const double first = out.front();
  for (auto& v : out) v /= first;
  return out;
}

}  // namespace rotcon
