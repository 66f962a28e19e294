#include "rotcon/liegroup.hpp"

#include "rotcon/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rotcon {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

double norm1(const Matrix& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------
// SkewMatrix

SkewMatrix::SkewMatrix(Matrix entries) : entries_(std::move(entries)) {
  require(entries_.rows() == entries_.cols(), "skew matrix must be square");
  require(all_finite(entries_), "skew matrix has non-finite entries");
  const Eigen::Index n = entries_.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      if (entries_(i, j) != -entries_(j, i)) {
        fail(ErrorKind::InvalidArgument,
             "matrix is not skew-symmetric at (" + std::to_string(i) + ", " +
                 std::to_string(j) + ")");
      }
    }
  }
}

SkewMatrix SkewMatrix::antisymmetrize(const Matrix& m) {
  require(m.rows() == m.cols(), "skew matrix must be square");
  const Eigen::Index n = m.rows();
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = 0.5 * (m(i, j) - m(j, i));
      out(i, j) = v;
      out(j, i) = -v;
    }
  }
  return SkewMatrix(std::move(out), Unchecked{});
}

SkewMatrix SkewMatrix::zero(Eigen::Index n) {
  return SkewMatrix(Matrix::Zero(n, n), Unchecked{});
}

SkewMatrix SkewMatrix::operator*(double s) const {
  // (-a) * s == -(a * s) in IEEE arithmetic, so antisymmetry survives.
  return SkewMatrix(Matrix(entries_ * s), Unchecked{});
}

// ---------------------------------------------------------------------------
// RotationMatrix

double RotationMatrix::orthogonality_defect(const Matrix& m) {
  const Eigen::Index n = m.rows();
  const double ortho =
      (m * m.transpose() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(m.determinant() - 1.0));
}

RotationMatrix::RotationMatrix(Matrix entries, double tol)
    : entries_(std::move(entries)) {
  require(entries_.rows() == entries_.cols() && entries_.rows() > 0,
          "rotation matrix must be square and non-empty");
  require(all_finite(entries_), "rotation matrix has non-finite entries");
  const double defect = orthogonality_defect(entries_);
  if (!(defect <= tol)) {
    fail(ErrorKind::InvalidArgument,
         "matrix is not in SO(n): defect " + std::to_string(defect));
  }
}

RotationMatrix RotationMatrix::identity(Eigen::Index n) {
  return RotationMatrix(Matrix::Identity(n, n));
}

RotationMatrix RotationMatrix::project(const Matrix& m) {
  require(m.rows() == m.cols(), "rotation matrix must be square");
  if (!all_finite(m)) fail(ErrorKind::Numerical, "cannot project non-finite matrix");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix polar = svd.matrixU() * svd.matrixV().transpose();
  if (polar.determinant() < 0) {
    fail(ErrorKind::Numerical, "polar factor has determinant -1");
  }
  return RotationMatrix(std::move(polar));
}

RotationMatrix RotationMatrix::transpose() const {
  return RotationMatrix(Matrix(entries_.transpose()));
}

RotationMatrix operator*(const RotationMatrix& a, const RotationMatrix& b) {
  require(a.dim() == b.dim(), "rotation dimensions differ");
  Matrix p = a.matrix() * b.matrix();
  if (RotationMatrix::orthogonality_defect(p) > RotationMatrix::kDefaultTolerance) {
    return RotationMatrix::project(p);
  }
  return RotationMatrix(std::move(p));
}

// ---------------------------------------------------------------------------
// RotationFamily

RotationFamily::RotationFamily(SkewMatrix generator)
    : generator_(std::move(generator)) {
  const Matrix& a = generator_.matrix();
  const Eigen::Index n = a.rows();
  const double defect = (a * a + Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (!(defect <= 1e-10)) {
    fail(ErrorKind::InvalidArgument,
         "family generator does not square to -I: defect " +
             std::to_string(defect));
  }
}

Matrix hadamard(int k) {
  require(k >= 0 && k <= kMaxHadamardOrder,
          "Hadamard order k must lie in [0, " +
              std::to_string(kMaxHadamardOrder) + "]");
  Matrix h = Matrix::Ones(1, 1);
  for (int level = 0; level < k; ++level) {
    const Eigen::Index s = h.rows();
    Matrix next(2 * s, 2 * s);
    next << h, h, h, -h;
    h = std::move(next);
  }
  return h;
}

Matrix skew_family_unnormalized(int k) {
  require(k >= 1 && k <= kMaxHadamardOrder,
          "family order k must lie in [1, " +
              std::to_string(kMaxHadamardOrder) + "]");
  Matrix b = Matrix::Zero(1, 1);
  for (int level = 0; level < k; ++level) {
    const Matrix h = hadamard(level);
    const Eigen::Index s = b.rows();
    Matrix next(2 * s, 2 * s);
    next << b, h, -h, b;
    b = std::move(next);
  }
  return b;
}

RotationFamily skew_family(int k) {
  const Matrix b = skew_family_unnormalized(k);
  const double scale = 1.0 / std::sqrt(std::ldexp(1.0, k) - 1.0);
  return RotationFamily(SkewMatrix(b * scale));
}

RotationMatrix rotation_at(const RotationFamily& family, double t) {
  const Eigen::Index n = family.dim();
  Matrix q = std::cos(t) * Matrix::Identity(n, n) +
             std::sin(t) * family.generator().matrix();
  return RotationMatrix(std::move(q));
}

// ---------------------------------------------------------------------------
// exp / log

RotationMatrix expm_skew(const SkewMatrix& a) {
  constexpr int kOrder = 12;
  const Eigen::Index n = a.dim();
  const double norm = norm1(a.matrix());
  int squarings = 0;
  if (norm > 0.25) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  }
  if (squarings > 60) {
    fail(ErrorKind::Numerical, "matrix exponential argument too large");
  }
  const Matrix scaled = a.matrix() * std::ldexp(1.0, -squarings);
  const Matrix id = Matrix::Identity(n, n);

  // Horner form of sum_{j<=12} A^j / j!
  Matrix p = id;
  for (int j = kOrder; j >= 1; --j) {
    p = id + (scaled * p) / static_cast<double>(j);
  }
  for (int s = 0; s < squarings; ++s) p = p * p;

  if (!all_finite(p)) fail(ErrorKind::Numerical, "matrix exponential overflowed");
  const double defect = RotationMatrix::orthogonality_defect(p);
  if (!(defect <= RotationMatrix::kDefaultTolerance)) {
    fail(ErrorKind::Numerical,
         "matrix exponential lost orthogonality: defect " + std::to_string(defect));
  }
  return RotationMatrix(std::move(p));
}

namespace {

// Denman-Beavers square root, re-projected onto SO(n) since the principal
// root of a rotation is a rotation.
Matrix sqrt_rotation(const Matrix& q) {
  const Eigen::Index n = q.rows();
  Matrix y = q;
  Matrix z = Matrix::Identity(n, n);
  for (int it = 0; it < 100; ++it) {
    const Matrix y_inv = y.partialPivLu().inverse();
    const Matrix z_inv = z.partialPivLu().inverse();
    Matrix y_next = 0.5 * (y + z_inv);
    Matrix z_next = 0.5 * (z + y_inv);
    const double change = norm1(y_next - y);
    y = std::move(y_next);
    z = std::move(z_next);
    if (change <= 1e-15 * norm1(y)) break;
  }
  if (!all_finite(y)) fail(ErrorKind::Numerical, "square root iteration diverged");
  return RotationMatrix::project(y).matrix();
}

}  // namespace

SkewMatrix logm_rotation(const RotationMatrix& q) {
  const Eigen::Index n = q.dim();
  const Matrix id = Matrix::Identity(n, n);

  Eigen::EigenSolver<Matrix> eig(q.matrix(), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(eig.eigenvalues()(i) + 1.0) < 1e-8) {
      fail(ErrorKind::Numerical,
           "rotation has an eigenvalue at -1; principal logarithm undefined");
    }
  }

  Matrix y = q.matrix();
  int roots = 0;
  while (norm1(y - id) > 0.25) {
    if (++roots > 60) fail(ErrorKind::Numerical, "logarithm failed to converge");
    y = sqrt_rotation(y);
  }

  // log(Y) = 2 atanh(Z), Z = (Y + I)^{-1}(Y - I); the factors commute.
  const Matrix z = (y + id).partialPivLu().solve(y - id);
  const Matrix z2 = z * z;
  Matrix term = z;
  Matrix sum = z;
  for (int j = 3; j < 200; j += 2) {
    term = term * z2;
    const Matrix contribution = term / static_cast<double>(j);
    sum += contribution;
    if (norm1(contribution) < 1e-18) break;
  }
  const Matrix log_q = sum * std::ldexp(2.0, roots);
  if (!all_finite(log_q)) fail(ErrorKind::Numerical, "logarithm is non-finite");
  return SkewMatrix::antisymmetrize(log_q);
}

// ---------------------------------------------------------------------------
// gradient field and descent

SkewMatrix gradient_field(const Matrix& euclidean_gradient,
                          const RotationMatrix& q) {
  require(euclidean_gradient.rows() == q.dim() &&
              euclidean_gradient.cols() == q.dim(),
          "gradient dimension does not match rotation");
  const Matrix m = euclidean_gradient * q.matrix().transpose();
  // M - M^t is antisymmetric bit-for-bit, unlike G Q^t - Q G^t evaluated as
  // two separate products.
  return SkewMatrix(Matrix(m - m.transpose()));
}

double skew_inner(const SkewMatrix& x, const SkewMatrix& y) {
  require(x.dim() == y.dim(), "skew matrix dimensions differ");
  return 0.5 * x.matrix().cwiseProduct(y.matrix()).sum();
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::GradientTolerance: return "gradient-tolerance";
    case StopReason::MaxIterations: return "max-iterations";
    case StopReason::StepUnderflow: return "step-underflow";
  }
  return "unknown";
}

DescentTrace geodesic_descent(const RotationObjective& f,
                              const RotationGradient& grad_f,
                              const RotationMatrix& q0,
                              const DescentOptions& options) {
  require(options.step > 0, "descent step must be positive");
  require(options.max_iters >= 0, "max_iters must be non-negative");
  require(options.grad_tol > 0, "grad_tol must be positive");

  DescentTrace trace;
  RotationMatrix q = q0;
  double value = f(q);
  if (!std::isfinite(value)) {
    fail(ErrorKind::Numerical, "objective is not finite at the initial rotation");
  }

  for (int iter = 0;; ++iter) {
    const SkewMatrix field = gradient_field(grad_f(q), q);
    const double gnorm = field.matrix().norm();
    if (!std::isfinite(gnorm)) {
      fail(ErrorKind::Numerical, "gradient is not finite at iteration " + std::to_string(iter));
    }
    trace.iterates.push_back({iter, q, value, gnorm});

    if (gnorm <= options.grad_tol) {
      trace.converged = true;
      trace.reason = StopReason::GradientTolerance;
      return trace;
    }
    if (iter >= options.max_iters) {
      trace.reason = StopReason::MaxIterations;
      return trace;
    }

    const double slope = skew_inner(field, field);
    double h = options.step;
    for (;;) {
      if (h < options.min_step) {
        trace.reason = StopReason::StepUnderflow;
        return trace;
      }
      Matrix raw = expm_skew(field * (-h)).matrix() * q.matrix();
      const bool scheduled = options.reorthonormalize_every > 0 &&
                             (iter + 1) % options.reorthonormalize_every == 0;
      RotationMatrix candidate =
          (scheduled || RotationMatrix::orthogonality_defect(raw) >
                            RotationMatrix::kDefaultTolerance)
              ? RotationMatrix::project(raw)
              : RotationMatrix(std::move(raw));
      const double next = f(candidate);
      if (!std::isfinite(next)) {
        fail(ErrorKind::Numerical,
             "objective became non-finite at iteration " + std::to_string(iter + 1));
      }
      if (next <= value - options.armijo * h * slope) {
        q = std::move(candidate);
        value = next;
        break;
      }
      h *= 0.5;
    }
  }
}

// ---------------------------------------------------------------------------
// CSV

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j > 0) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Matrix matrix_from_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      while (end && (*end == ' ' || *end == '\t')) ++end;
      if (end == cell.c_str() || (end && *end != '\0')) {
        fail(ErrorKind::InputData, "malformed number '" + cell + "' on line " +
                                       std::to_string(line_no));
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::InputData, "CSV matrix is empty");
  const std::size_t cols = rows.front().size();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) fail(ErrorKind::InputData, "CSV matrix rows have unequal length");
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

void save_rotation_csv(const RotationMatrix& q, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::InputData, "cannot write " + path.string());
  out << matrix_to_csv(q.matrix());
}

RotationMatrix load_rotation_csv(const std::filesystem::path& path, double projection_tol) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InputData, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Matrix m = matrix_from_csv(buf.str());
  if (m.rows() != m.cols()) fail(ErrorKind::InputData, "rotation CSV is not square");
  if (!m.allFinite()) fail(ErrorKind::InputData, "rotation CSV has non-finite entries");
  const double defect = RotationMatrix::orthogonality_defect(m);
  if (defect <= RotationMatrix::kDefaultTolerance) return RotationMatrix(std::move(m));
  if (defect <= projection_tol) return RotationMatrix::project(m);
  fail(ErrorKind::InputData, path.string() + " is not a rotation matrix (defect " +
                                 std::to_string(defect) + ")");
}

}  // namespace rotcon
