#include "rotcon/constellation.hpp"

#include "rotcon/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace rotcon {

namespace {

constexpr int kMaxBits = 24;

bool is_power_of_two(std::size_t v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

Constellation::Constellation(PointMatrix points, std::vector<std::string> labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  const auto m = static_cast<std::size_t>(points_.rows());
  if (m == 0 || points_.cols() == 0) {
    fail(ErrorKind::InvalidArgument, "constellation must have at least one point and dimension");
  }
  if (!is_power_of_two(m)) {
    fail(ErrorKind::InvalidArgument,
         "constellation size " + std::to_string(m) + " is not a power of two");
  }
  if (!points_.allFinite()) fail(ErrorKind::InvalidArgument, "constellation has non-finite coordinates");
  bits_ = std::countr_zero(m);

  // Exact distinctness: sort row indices lexicographically, compare neighbors.
  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::Index n = points_.cols();
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (points_(a, i) != points_(b, i)) return points_(a, i) < points_(b, i);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t k = 1; k < m; ++k) {
    if (!less(order[k - 1], order[k])) {
      fail(ErrorKind::InvalidArgument,
           "constellation points " + std::to_string(order[k - 1]) + " and " +
               std::to_string(order[k]) + " coincide");
    }
  }

  if (!labels_.empty()) {
    if (labels_.size() != m) {
      fail(ErrorKind::InvalidArgument, "label count does not match point count");
    }
    std::set<std::string_view> seen;
    for (const auto& label : labels_) {
      if (static_cast<int>(label.size()) != bits_ ||
          label.find_first_not_of("01") != std::string::npos) {
        fail(ErrorKind::InvalidArgument,
             "label '" + label + "' is not a " + std::to_string(bits_) + "-bit string");
      }
      if (!seen.insert(label).second) {
        fail(ErrorKind::InvalidArgument, "duplicate label '" + label + "'");
      }
    }
  }

  energy_ = points_.rowwise().squaredNorm().sum() / static_cast<double>(m);
}

NuqamParams::NuqamParams(std::vector<double> alpha) : alpha_(std::move(alpha)) {
  require(!alpha_.empty(), "NUQAM parameters must be non-empty");
  for (std::size_t i = 0; i < alpha_.size(); ++i) {
    require(std::isfinite(alpha_[i]) && alpha_[i] > 0,
            "NUQAM parameters must be positive");
    if (i > 0) require(alpha_[i] > alpha_[i - 1], "NUQAM parameters must be strictly increasing");
  }
}

std::string gray_label(unsigned index, int width) {
  const unsigned g = index ^ (index >> 1);
  std::string out(static_cast<std::size_t>(width), '0');
  for (int b = 0; b < width; ++b) {
    if ((g >> (width - 1 - b)) & 1u) out[static_cast<std::size_t>(b)] = '1';
  }
  return out;
}

namespace {

// Cartesian product of `axes` copies of `levels` (ascending), first axis most
// significant; labels are per-axis Gray codes concatenated in axis order.
Constellation product_constellation(const std::vector<double>& levels, int axes) {
  const auto per_axis = levels.size();
  const int axis_bits = std::countr_zero(per_axis);
  const int total_bits = axis_bits * axes;
  require(total_bits <= kMaxBits, "constellation would exceed 2^" + std::to_string(kMaxBits) + " points");

  const std::size_t m = std::size_t{1} << total_bits;
  PointMatrix points(static_cast<Eigen::Index>(m), axes);
  std::vector<std::string> labels(m);
  std::vector<std::string> axis_labels(per_axis);
  for (std::size_t l = 0; l < per_axis; ++l) {
    axis_labels[l] = gray_label(static_cast<unsigned>(l), axis_bits);
  }
  for (std::size_t p = 0; p < m; ++p) {
    std::size_t rest = p;
    std::string label;
    label.reserve(static_cast<std::size_t>(total_bits));
    std::vector<std::size_t> digits(static_cast<std::size_t>(axes));
    for (int a = axes - 1; a >= 0; --a) {
      digits[static_cast<std::size_t>(a)] = rest % per_axis;
      rest /= per_axis;
    }
    for (int a = 0; a < axes; ++a) {
      const std::size_t d = digits[static_cast<std::size_t>(a)];
      points(static_cast<Eigen::Index>(p), a) = levels[d];
      label += axis_labels[d];
    }
    labels[p] = std::move(label);
  }
  return Constellation(std::move(points), std::move(labels));
}

}  // namespace

Constellation make_qam_product(int M, int half_dims) {
  require(M == 4 || M == 16 || M == 64 || M == 256 || M == 1024,
          "unsupported QAM order " + std::to_string(M));
  require(half_dims >= 1, "half_dims must be at least 1");
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(M))));
  std::vector<double> levels;
  for (int l = 0; l < side; ++l) levels.push_back(2.0 * l - (side - 1));
  return product_constellation(levels, 2 * half_dims);
}

Constellation make_nuqam(const NuqamParams& params) {
  const auto& a = params.values();
  require(is_power_of_two(2 * a.size()),
          "NUQAM needs 2^(q/2 - 1) parameters, got " + std::to_string(a.size()));
  std::vector<double> levels;
  for (auto it = a.rbegin(); it != a.rend(); ++it) levels.push_back(-*it);
  for (double v : a) levels.push_back(v);
  return product_constellation(levels, 2);
}

Constellation normalize_energy(const Constellation& x, double target_energy) {
  require(target_energy > 0 && std::isfinite(target_energy), "target energy must be positive");
  if (!(x.energy() > 0)) {
    fail(ErrorKind::InvalidArgument, "cannot normalize an all-zero constellation");
  }
  const double scale = std::sqrt(target_energy / x.energy());
  return Constellation(PointMatrix(x.points() * scale), x.labels());
}

Constellation rotate(const Constellation& x, const RotationMatrix& q) {
  if (q.dim() != x.dim()) {
    fail(ErrorKind::InvalidArgument, "rotation dimension " + std::to_string(q.dim()) +
                                         " does not match constellation dimension " +
                                         std::to_string(x.dim()));
  }
  return Constellation(PointMatrix(x.points() * q.matrix().transpose()), x.labels());
}

std::string to_json(const Constellation& x) {
  nlohmann::json j;
  j["n"] = x.dim();
  nlohmann::json pts = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < x.dim(); ++k) row.push_back(x.points()(i, k));
    pts.push_back(std::move(row));
  }
  j["points"] = std::move(pts);
  if (x.has_labels()) j["labels"] = x.labels();
  return j.dump();
}

Constellation constellation_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InputData, std::string("malformed constellation JSON: ") + e.what());
  }
  try {
    const auto n = j.at("n").get<Eigen::Index>();
    const auto& pts = j.at("points");
    if (!pts.is_array() || pts.empty() || n <= 0) {
      fail(ErrorKind::InputData, "constellation JSON needs n > 0 and a non-empty points array");
    }
    PointMatrix points(static_cast<Eigen::Index>(pts.size()), n);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& row = pts[i];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
        fail(ErrorKind::InputData, "point " + std::to_string(i) + " does not have n coordinates");
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        points(static_cast<Eigen::Index>(i), k) = row[static_cast<std::size_t>(k)].get<double>();
      }
    }
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
    return Constellation(std::move(points), std::move(labels));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InputData, std::string("invalid constellation JSON: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InputData) throw;
    fail(ErrorKind::InputData, std::string("invalid constellation: ") + e.what());
  }
}

void save(const Constellation& x, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::InputData, "cannot write " + path.string());
  out << to_json(x) << '\n';
}

Constellation load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InputData, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return constellation_from_json(buf.str());
}

std::string to_csv(const Constellation& x) {
  std::string out;
  for (Eigen::Index k = 0; k < x.dim(); ++k) {
    if (k > 0) out += ',';
    out += "x" + std::to_string(k + 1);
  }
  if (x.has_labels()) out += ",label";
  out += '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    for (Eigen::Index k = 0; k < x.dim(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", x.points()(i, k));
      if (k > 0) out += ',';
      out += buf;
    }
    if (x.has_labels()) out += "," + x.labels()[static_cast<std::size_t>(i)];
    out += '\n';
  }
  return out;
}

}  // namespace rotcon
