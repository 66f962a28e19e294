#pragma once

#include "rotcon/constellation.hpp"
#include "rotcon/liegroup.hpp"
#include "rotcon/metrics.hpp"

#include <cstdint>
#include <vector>

namespace rotcon {

/// Distinct nonzero differences x - y over ordered pairs, identified up to
/// sign (first nonzero coordinate positive). Weights count ordered pairs,
/// so they sum to m(m - 1). Structured constellations collapse heavily:
/// 4D 64-QAM has 16.7M ordered pairs but about 25k classes.
class DifferenceSet {
 public:
  explicit DifferenceSet(const Constellation& x);

  const PointMatrix& differences() const { return diffs_; }
  const Vector& weights() const { return weights_; }
  Eigen::Index size() const { return diffs_.rows(); }
  Eigen::Index dim() const { return diffs_.cols(); }
  int bits() const { return bits_; }

 private:
  PointMatrix diffs_;
  Vector weights_;
  int bits_;
};

/// R(Q X) and its Euclidean gradient in Q, evaluated on a DifferenceSet.
class CutoffRateObjective {
 public:
  CutoffRateObjective(const Constellation& x, const ChannelSpec& ch);

  double value(const Matrix& q) const;
  /// dR(QX)/dq_ij
  Matrix gradient(const Matrix& q) const;

  const DifferenceSet& differences() const { return diffs_; }

 private:
  DifferenceSet diffs_;
  double c_;
};

struct TSample {
  double t;
  double objective;
};

struct TSearchResult {
  double t_opt = 0.0;      // radians
  double objective = 0.0;  // cutoff_rate(rotate(X, Q_n(t_opt)), ch)
  double grid_step = 0.0;
  std::vector<TSample> profile;
};

struct GridSearchOptions {
  bool keep_profile = false;
  unsigned workers = 1;
};

inline constexpr double kDefaultGridStep = 1e-4;
inline constexpr double kSweepGridStep = 1e-3;

/// Exhaustive search of R(Q_n(t) X) over t = k * grid_step in [0, pi/2].
/// Ties go to the smaller t.
TSearchResult grid_search_t(const Constellation& x, const ChannelSpec& ch,
                            double grid_step = kDefaultGridStep,
                            const GridSearchOptions& options = {});

/// arccos(1 / sqrt(n))
double low_snr_optimal_t(Eigen::Index n);

/// (1 + cos^2 t / (2 N0)) (1 + sin^2 t / ((n - 1) 2 N0))^(n - 1)
double g_of_t(Eigen::Index n, const ChannelSpec& ch, double t);

Matrix cutoff_rate_gradient(const Constellation& x, const ChannelSpec& ch,
                            const RotationMatrix& q);

/// exp(H) with every entry of the skew matrix H equal to `h` above the
/// diagonal.
RotationMatrix default_initial_rotation(Eigen::Index n, double h = 1e-4);

struct RotationSearchOptions {
  DescentOptions descent;
  /// Extra starts from exp(S) Q0 with S a random skew matrix of Frobenius
  /// norm `perturbation`; the best final objective wins.
  int multistart = 0;
  double perturbation = 0.5;
  std::uint64_t seed = 1;
};

inline constexpr int kDefaultMultistart = 4;

/// geodesic_descent on f(Q) = -R(Q X). Trace objectives are therefore
/// negated cutoff rates.
DescentTrace optimize_rotation_full(const Constellation& x, const ChannelSpec& ch,
                                    const RotationMatrix& q0,
                                    const RotationSearchOptions& options = {});

struct AlphaDescentOptions {
  int max_iters = 10000;
  double grad_tol = 1e-7;
  double fd_step = 1e-6;  // relative
  double step = 1.0;
  double min_step = 1e-14;
};

struct AlphaDescentResult {
  NuqamParams alpha;  // scaled so the constellation has energy q
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Steepest ascent on alpha -> R(normalize_energy(make_nuqam(alpha), q), ch).
AlphaDescentResult optimize_nuqam(int q_bits, const ChannelSpec& ch, const NuqamParams& init,
                                  const AlphaDescentOptions& options = {});

/// The NUQAM objective itself, evaluated per axis; equal to the cutoff rate
/// of normalize_energy(make_nuqam(alpha), q).
double nuqam_objective(const NuqamParams& alpha, const ChannelSpec& ch);

/// Rescale alpha so the NUQAM has the energy of the square QAM of the same
/// size with odd-integer levels, 2(M - 1)/3.
NuqamParams alpha_at_qam_energy(const NuqamParams& alpha);

/// Divide by alpha_1.
std::vector<double> alpha_ratios(const NuqamParams& alpha);

}  // namespace rotcon
