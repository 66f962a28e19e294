#include "rotcon/metrics.hpp"

#include "rotcon/channel.hpp"
#include "rotcon/error.hpp"
#include "rotcon/random.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>

namespace rotcon {

namespace {

constexpr double kBallSlack = 1e-9;

// sum over ordered pairs x != y with y in B(x, r) of prod_i 1 / (1 + d_i^2 / c)
double pair_sum(const Constellation& x, const Radius& r, double c) {
  const auto& p = x.points();
  const Eigen::Index m = x.size();
  const Eigen::Index n = x.dim();
  const bool bounded = !r.is_infinite();
  double total = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      if (a == b) continue;
      if (bounded) {
        const double d2 = (p.row(a) - p.row(b)).squaredNorm();
        if (!r.contains_squared(d2)) continue;
      }
      double prod = 1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = p(a, i) - p(b, i);
        prod /= 1.0 + d * d / c;
      }
      total += prod;
    }
  }
  return total;
}

double rate_from_sum(int q, double sum) {
  return q - std::log2(1.0 + std::ldexp(sum, -q));
}

}  // namespace

ChannelSpec::ChannelSpec(double n0, std::optional<double> ebn0_db)
    : n0_(n0), ebn0_db_(ebn0_db) {
  require(std::isfinite(n0) && n0 > 0, "noise variance N0 must be positive and finite");
}

ChannelSpec ChannelSpec::from_ebn0_db(double ebn0_db, double energy_per_bit) {
  require(std::isfinite(ebn0_db), "Eb/N0 must be finite");
  require(std::isfinite(energy_per_bit) && energy_per_bit > 0, "energy per bit must be positive");
  return ChannelSpec(energy_per_bit * std::pow(10.0, -ebn0_db / 10.0), ebn0_db);
}

ChannelSpec ChannelSpec::for_constellation(const Constellation& x, double ebn0_db) {
  require(x.bits() > 0, "a single-point constellation carries no bits");
  require(x.energy() > 0, "constellation has zero energy");
  return from_ebn0_db(ebn0_db, x.energy_per_bit());
}

Radius Radius::finite(double r) {
  require(std::isfinite(r) && r > 0, "radius must be positive and finite");
  return Radius(r);
}

double Radius::value() const {
  if (!value_) fail(ErrorKind::InvalidArgument, "infinite radius has no finite value");
  return *value_;
}

std::string Radius::to_string() const {
  if (!value_) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", *value_);
  return buf;
}

bool Radius::contains_squared(double distance_squared) const {
  if (!value_) return true;
  const double r = *value_ * (1.0 + kBallSlack);
  return distance_squared <= r * r;
}

double cutoff_rate(const Constellation& x, const ChannelSpec& ch) {
  return local_cutoff_rate(x, Radius::infinite(), ch);
}

double local_cutoff_rate(const Constellation& x, const Radius& r, const ChannelSpec& ch) {
  return rate_from_sum(x.bits(), pair_sum(x, r, 8.0 * ch.n0()));
}

double r0_conditional(const Constellation& x, const Vector& h, const ChannelSpec& ch) {
  require(h.size() == x.dim(), "fade vector dimension does not match constellation");
  require(h.allFinite() && (h.array() >= 0).all(), "fade entries must be non-negative");
  const auto& p = x.points();
  const Eigen::Index m = x.size();
  const Eigen::Index n = x.dim();
  const double c = 8.0 * ch.n0();
  const Vector h2 = h.array().square();
  double total = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      if (a == b) continue;
      double e = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = p(a, i) - p(b, i);
        e += h2(i) * d * d;
      }
      total += std::exp(-e / c);
    }
  }
  return rate_from_sum(x.bits(), total);
}

MonteCarloEstimate r0_expected_mc(const Constellation& x, const ChannelSpec& ch,
                                  int num_channels, std::uint64_t seed) {
  require(num_channels >= 1, "need at least one channel realization");
  Rng rng = substream(seed, 0);
  double mean = 0.0;
  double m2 = 0.0;
  for (int k = 0; k < num_channels; ++k) {
    const FadeVector h = sample_fade(x.dim(), rng);
    const double v = r0_conditional(x, h.values(), ch);
    const double delta = v - mean;
    mean += delta / (k + 1);
    m2 += delta * (v - mean);
  }
  MonteCarloEstimate est;
  est.mean = mean;
  est.samples = num_channels;
  est.std_error = num_channels > 1 ? std::sqrt(m2 / (num_channels - 1) / num_channels) : 0.0;
  return est;
}

DiversityResult diversity_order(const Constellation& x, const Radius& r, double coordinate_tol) {
  const auto& p = x.points();
  const Eigen::Index m = x.size();
  const Eigen::Index n = x.dim();
  DiversityResult out{static_cast<int>(n), true};
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a + 1; b < m; ++b) {
      if (!r.contains_squared((p.row(a) - p.row(b)).squaredNorm())) continue;
      out.empty_ball = false;
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(p(a, i) - p(b, i)) > coordinate_tol) ++count;
      }
      if (count < out.order) out.order = count;
    }
  }
  return out;
}

ProductDistanceResult min_product_distance(const Constellation& x, const Radius& r,
                                           double coordinate_tol) {
  const auto& p = x.points();
  const Eigen::Index m = x.size();
  const Eigen::Index n = x.dim();
  double best = std::numeric_limits<double>::infinity();
  bool empty = true;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a + 1; b < m; ++b) {
      if (!r.contains_squared((p.row(a) - p.row(b)).squaredNorm())) continue;
      empty = false;
      double prod = 1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = std::abs(p(a, i) - p(b, i));
        if (d > coordinate_tol) prod *= d;
      }
      if (prod < best) best = prod;
    }
  }
  ProductDistanceResult out;
  out.empty_ball = empty;
  if (empty) {
    out.value = std::numeric_limits<double>::quiet_NaN();
    out.normalized = out.value;
  } else {
    out.value = best;
    out.normalized = std::pow(best, 1.0 / static_cast<double>(n));
  }
  return out;
}

double high_snr_sum(const Constellation& x, const ChannelSpec& ch, double coordinate_tol) {
  const auto& p = x.points();
  const Eigen::Index m = x.size();
  const Eigen::Index n = x.dim();
  const double c = 8.0 * ch.n0();
  double total = 0.0;
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a + 1; b < m; ++b) {
      double prod = 1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = p(a, i) - p(b, i);
        if (std::abs(d) > coordinate_tol) prod *= c / (d * d);
      }
      total += prod;
    }
  }
  return 2.0 * total;
}

bool is_locally_fully_diverse(const RotationMatrix& q, double tol) {
  return (q.matrix().array().abs() > tol).all();
}

MetricsReport metrics_report(const Constellation& x, const ChannelSpec& ch,
                             const std::vector<Radius>& radii, double coordinate_tol) {
  MetricsReport report;
  report.dim = x.dim();
  report.bits = x.bits();
  report.n0 = ch.n0();
  report.ebn0_db = ch.ebn0_db();
  report.cutoff_rate = cutoff_rate(x, ch);
  report.high_snr_sum = high_snr_sum(x, ch, coordinate_tol);
  for (const auto& r : radii) {
    report.per_radius.push_back(RadiusMetrics{r, local_cutoff_rate(x, r, ch),
                                              diversity_order(x, r, coordinate_tol),
                                              min_product_distance(x, r, coordinate_tol)});
  }
  return report;
}

std::string to_json(const MetricsReport& report) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json j;
  j["n"] = report.dim;
  j["q"] = report.bits;
  j["n0"] = report.n0;
  j["ebn0_db"] = report.ebn0_db ? nlohmann::json(*report.ebn0_db) : nlohmann::json(nullptr);
  j["cutoff_rate"] = report.cutoff_rate;
  j["high_snr_sum"] = num(report.high_snr_sum);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.per_radius) {
    nlohmann::json row;
    row["radius"] = r.radius.to_string();
    row["local_cutoff_rate"] = r.local_cutoff_rate;
    row["diversity_order"] = r.diversity.order;
    row["min_product_distance"] = num(r.product_distance.value);
    row["normalized_product_distance"] = num(r.product_distance.normalized);
    row["empty_ball"] = r.diversity.empty_ball;
    rows.push_back(std::move(row));
  }
  j["radii"] = std::move(rows);
  return j.dump(2);
}

}  // namespace rotcon
