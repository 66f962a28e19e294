#pragma once

#include "rotcon/constellation.hpp"
#include "rotcon/metrics.hpp"
#include "rotcon/random.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rotcon {

/// Diagonal of the fade matrix; all entries non-negative.
class FadeVector {
 public:
  explicit FadeVector(Vector h);

  const Vector& values() const { return h_; }
  Eigen::Index dim() const { return h_.size(); }

 private:
  Vector h_;
};

/// h_i = sqrt(g1^2 + g2^2), g1, g2 ~ N(0, 1/2) independent, so E[h_i^2] = 1.
FadeVector sample_fade(Eigen::Index n, Rng& rng);

/// y = h o x + z, z_i ~ N(0, N0).
Vector transmit(const Vector& x, const FadeVector& h, const ChannelSpec& ch, Rng& rng);

/// argmin_k ||y - h o x_k||^2; ties go to the lowest index.
Eigen::Index ml_decode(const Constellation& x, const Vector& y, const FadeVector& h);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for a binomial proportion (z = 1.96 by default).
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                         double z = 1.959963984540054);

struct BerRow {
  double ebn0_db = 0.0;
  std::uint64_t bits = 0;
  std::uint64_t bit_errors = 0;
  double ber = 0.0;
  Interval ber_interval;
  std::uint64_t symbols = 0;
  std::uint64_t symbol_errors = 0;
  double ser = 0.0;
  std::uint64_t seed = 0;
};

struct BerReport {
  std::vector<BerRow> rows;
  std::string rng_algorithm;
};

struct BerOptions {
  std::uint64_t min_bits = 1'000'000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::uint64_t block_symbols = 4096;
};

/// Uniform symbols through transmit + ml_decode at each channel point; bit
/// errors are label Hamming distances, so `x` must be labeled. min_bits >= 10^4.
/// Point p, block b draws from substream(seed, p, b), so the report is
/// bit-identical for any worker count.
BerReport ber_monte_carlo(const Constellation& x, const std::vector<ChannelSpec>& points,
                          const BerOptions& options = {});

/// ebn0_db,bits,bit_errors,ber,ber_lo,ber_hi,symbol_errors,ser,seed
std::string to_csv(const BerReport& report);

}  // namespace rotcon
