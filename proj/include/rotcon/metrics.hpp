#pragma once

#include "rotcon/constellation.hpp"
#include "rotcon/liegroup.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rotcon {

/// Real-valued noise variance per dimension.
class ChannelSpec {
 public:
  explicit ChannelSpec(double n0, std::optional<double> ebn0_db = std::nullopt);

  /// N0 = E_b * 10^(-dB/10). With E_b = 1 this is the convention P = q used
  /// throughout (average energy per bit equal to one).
  static ChannelSpec from_ebn0_db(double ebn0_db, double energy_per_bit = 1.0);

  /// Same E_b/N0 calibration applied to `x` as given, without rescaling its
  /// points: E_b is taken from x.energy() / x.bits(). Every rate metric is
  /// invariant under joint scaling of points and sqrt(N0), so this matches
  /// evaluating normalize_energy(x, q) at N0 = 10^(-dB/10).
  static ChannelSpec for_constellation(const Constellation& x, double ebn0_db);

  double n0() const { return n0_; }
  std::optional<double> ebn0_db() const { return ebn0_db_; }

 private:
  double n0_;
  std::optional<double> ebn0_db_;
};

/// Ball radius; `infinite()` is an explicit sentinel, not a large number.
class Radius {
 public:
  static Radius finite(double r);
  static Radius infinite() { return Radius(); }

  bool is_infinite() const { return !value_.has_value(); }
  double value() const;
  std::string to_string() const;

  /// Closed ball test on a squared distance. A relative slack of 1e-9 keeps
  /// rotated lattice neighbors at exactly distance r inside the ball.
  bool contains_squared(double distance_squared) const;

 private:
  Radius() = default;
  explicit Radius(double r) : value_(r) {}
  std::optional<double> value_;
};

inline constexpr double kCoordinateTol = 1e-9;

/// q - log2[1 + 2^-q sum_{x != y} prod_i 1 / (1 + (x_i - y_i)^2 / (8 N0))]
/// over ordered pairs.
double cutoff_rate(const Constellation& x, const ChannelSpec& ch);

/// As cutoff_rate, with y restricted to the closed ball B(x, r).
/// local_cutoff_rate(x, Radius::infinite(), ch) == cutoff_rate(x, ch) bit for bit.
double local_cutoff_rate(const Constellation& x, const Radius& r, const ChannelSpec& ch);

/// R0(X; h) for one fade realization h (n non-negative entries).
double r0_conditional(const Constellation& x, const Vector& h, const ChannelSpec& ch);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

/// Mean of r0_conditional over `num_channels` Rayleigh fades drawn in order
/// from substream(seed, 0).
MonteCarloEstimate r0_expected_mc(const Constellation& x, const ChannelSpec& ch,
                                  int num_channels, std::uint64_t seed);

struct DiversityResult {
  int order = 0;
  bool empty_ball = false;  // no pair within r; order reported as n
};

/// min over x, y in B(x, r) \ {x} of #{i : |x_i - y_i| > coordinate_tol}
DiversityResult diversity_order(const Constellation& x, const Radius& r,
                                double coordinate_tol = kCoordinateTol);

struct ProductDistanceResult {
  double value = 0.0;       // NaN when empty_ball
  double normalized = 0.0;  // value^(1/n)
  bool empty_ball = false;
};

ProductDistanceResult min_product_distance(const Constellation& x, const Radius& r,
                                           double coordinate_tol = kCoordinateTol);

/// S0 = sum_{x != y} prod_{i : x_i != y_i} 8 N0 / (x_i - y_i)^2
double high_snr_sum(const Constellation& x, const ChannelSpec& ch,
                    double coordinate_tol = kCoordinateTol);

/// True iff every |q_ij| > tol. For a QAM constellation X this is equivalent
/// to diversity_order(rotate(X, Q), 2) == n.
bool is_locally_fully_diverse(const RotationMatrix& q, double tol = kCoordinateTol);

struct RadiusMetrics {
  Radius radius;
  double local_cutoff_rate;
  DiversityResult diversity;
  ProductDistanceResult product_distance;
};

struct MetricsReport {
  Eigen::Index dim = 0;
  int bits = 0;
  double n0 = 0.0;
  std::optional<double> ebn0_db;
  double cutoff_rate = 0.0;
  double high_snr_sum = 0.0;
  std::vector<RadiusMetrics> per_radius;
};

MetricsReport metrics_report(const Constellation& x, const ChannelSpec& ch,
                             const std::vector<Radius>& radii,
                             double coordinate_tol = kCoordinateTol);

std::string to_json(const MetricsReport& report);

}  // namespace rotcon
