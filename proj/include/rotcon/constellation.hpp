#pragma once

#include "rotcon/liegroup.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rotcon {

/// m x n point storage, one signal point per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Finite signal set in R^n with m = 2^q distinct points and optional q-bit
/// labels. Immutable after construction.
class Constellation {
 public:
  explicit Constellation(PointMatrix points, std::vector<std::string> labels = {});

  Eigen::Index dim() const { return points_.cols(); }
  Eigen::Index size() const { return points_.rows(); }
  int bits() const { return bits_; }

  const PointMatrix& points() const { return points_; }
  auto point(Eigen::Index i) const { return points_.row(i); }

  bool has_labels() const { return !labels_.empty(); }
  const std::vector<std::string>& labels() const { return labels_; }

  /// (1/m) sum ||x||^2
  double energy() const { return energy_; }
  double energy_per_bit() const { return energy_ / bits_; }

 private:
  PointMatrix points_;
  std::vector<std::string> labels_;
  int bits_ = 0;
  double energy_ = 0.0;
};

/// Positive, strictly increasing per-axis amplitudes (alpha_1 < ... < alpha_k).
class NuqamParams {
 public:
  explicit NuqamParams(std::vector<double> alpha);

  const std::vector<double>& values() const { return alpha_; }
  std::size_t size() const { return alpha_.size(); }

 private:
  std::vector<double> alpha_;
};

/// Reflected binary Gray code of `index` written with `width` bits, MSB first.
std::string gray_label(unsigned index, int width);

/// Product of `half_dims` copies of square M-QAM with odd-integer levels
/// {+-1, +-3, ...}; n = 2 * half_dims, Gray labels concatenated per axis.
Constellation make_qam_product(int M, int half_dims);

/// 2-D product of {-alpha_k, ..., -alpha_1, alpha_1, ..., alpha_k} with itself.
/// Levels are Gray-labeled in ascending order.
Constellation make_nuqam(const NuqamParams& params);

Constellation normalize_energy(const Constellation& x, double target_energy);

Constellation rotate(const Constellation& x, const RotationMatrix& q);

std::string to_json(const Constellation& x);
Constellation constellation_from_json(std::string_view text);
void save(const Constellation& x, const std::filesystem::path& path);
Constellation load(const std::filesystem::path& path);

/// One point per row: x1,...,xn[,label]
std::string to_csv(const Constellation& x);

}  // namespace rotcon
