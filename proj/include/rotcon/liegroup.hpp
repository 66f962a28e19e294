#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace rotcon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Element of so(n): a real matrix with entries(i,j) == -entries(j,i),
/// checked bit-for-bit on construction.
class SkewMatrix {
 public:
  explicit SkewMatrix(Matrix entries);

  /// (M - M^t) / 2, exactly antisymmetric as stored.
  static SkewMatrix antisymmetrize(const Matrix& m);
  static SkewMatrix zero(Eigen::Index n);

  const Matrix& matrix() const { return entries_; }
  Eigen::Index dim() const { return entries_.rows(); }

  SkewMatrix operator*(double s) const;

 private:
  struct Unchecked {};
  SkewMatrix(Matrix entries, Unchecked) : entries_(std::move(entries)) {}

  Matrix entries_;
};

inline SkewMatrix operator*(double s, const SkewMatrix& a) { return a * s; }

/// Element of SO(n). Construction validates ||QQ^t - I||_max and |det Q - 1|
/// against `tol` (default 1e-10).
class RotationMatrix {
 public:
  static constexpr double kDefaultTolerance = 1e-10;

  explicit RotationMatrix(Matrix entries, double tol = kDefaultTolerance);

  static RotationMatrix identity(Eigen::Index n);
  /// Nearest orthogonal matrix U V^t from the SVD of `m` (polar factor).
  /// Throws if the result has determinant -1.
  static RotationMatrix project(const Matrix& m);

  const Matrix& matrix() const { return entries_; }
  Eigen::Index dim() const { return entries_.rows(); }
  RotationMatrix transpose() const;

  /// max(||QQ^t - I||_max, |det Q - 1|)
  static double orthogonality_defect(const Matrix& m);

 private:
  Matrix entries_;
};

RotationMatrix operator*(const RotationMatrix& a, const RotationMatrix& b);

/// Skew generator A with A^2 = -I, so that exp(tA) = cos(t) I + sin(t) A.
class RotationFamily {
 public:
  explicit RotationFamily(SkewMatrix generator);

  const SkewMatrix& generator() const { return generator_; }
  Eigen::Index dim() const { return generator_.dim(); }

 private:
  SkewMatrix generator_;
};

inline constexpr int kMaxHadamardOrder = 12;

/// Sylvester-Hadamard matrix H_{2^k}: H_1 = [1], H_2n = [[H, H], [H, -H]].
Matrix hadamard(int k);

/// B_{2^k} = [[B, H], [-H, B]] built on H_{2^(k-1)}; the returned family
/// has generator A = B / sqrt(2^k - 1).
Matrix skew_family_unnormalized(int k);
RotationFamily skew_family(int k);

RotationMatrix rotation_at(const RotationFamily& family, double t);

/// exp(A) by scaling and squaring on a degree-12 Taylor polynomial.
RotationMatrix expm_skew(const SkewMatrix& a);

/// Principal logarithm by inverse scaling and squaring. Throws a Numerical
/// error when an eigenvalue lies within 1e-8 of -1.
SkewMatrix logm_rotation(const RotationMatrix& q);

/// X_f(Q) = G Q^t - Q G^t for the Euclidean gradient G of f at Q.
SkewMatrix gradient_field(const Matrix& euclidean_gradient,
                          const RotationMatrix& q);

/// Riemannian pairing on so(n) used by the descent: <X, Y> = tr(X^t Y) / 2.
double skew_inner(const SkewMatrix& x, const SkewMatrix& y);

using RotationObjective = std::function<double(const RotationMatrix&)>;
using RotationGradient = std::function<Matrix(const RotationMatrix&)>;

struct DescentOptions {
  double step = 0.1;
  int max_iters = 5000;
  double grad_tol = 1e-8;
  double min_step = 1e-12;
  int reorthonormalize_every = 50;
  double armijo = 1e-4;
};

enum class StopReason { GradientTolerance, MaxIterations, StepUnderflow };

std::string to_string(StopReason reason);

struct DescentIterate {
  int iteration;
  RotationMatrix rotation;
  double objective;
  double gradient_norm;  // ||X_f(Q)||_F
};

struct DescentTrace {
  std::vector<DescentIterate> iterates;
  bool converged = false;
  StopReason reason = StopReason::MaxIterations;

  const DescentIterate& last() const { return iterates.back(); }
};

/// Minimizes f over SO(n) with Q_{k+1} = exp(-h X_f(Q_k)) Q_k. Each
/// iteration starts from options.step and halves h until the Armijo
/// condition f(Q_{k+1}) <= f(Q_k) - armijo * h * <X_f, X_f> holds.
DescentTrace geodesic_descent(const RotationObjective& f,
                              const RotationGradient& grad_f,
                              const RotationMatrix& q0,
                              const DescentOptions& options = {});

/// Row-major CSV, one matrix row per line, entries printed with %.17g.
std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(std::string_view text);

void save_rotation_csv(const RotationMatrix& q,
                       const std::filesystem::path& path);
/// Matrices passing the 1e-10 rotation check load bit-identically. Matrices
/// printed at lower precision (external catalogs) are polar-projected onto
/// SO(n) when their defect is below `projection_tol`.
RotationMatrix load_rotation_csv(const std::filesystem::path& path,
                                 double projection_tol = 1e-3);

}  // namespace rotcon
