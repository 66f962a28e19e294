#include "rotcon/channel.hpp"

#include "rotcon/error.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

namespace rotcon {

FadeVector::FadeVector(Vector h) : h_(std::move(h)) {
  require(h_.size() > 0, "fade vector must be non-empty");
  require(h_.allFinite() && (h_.array() >= 0).all(), "fade entries must be non-negative");
}

FadeVector sample_fade(Eigen::Index n, Rng& rng) {
  require(n > 0, "fade dimension must be positive");
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  Vector h(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = g(rng);
    const double b = g(rng);
    h(i) = std::sqrt(a * a + b * b);
  }
  return FadeVector(std::move(h));
}

Vector transmit(const Vector& x, const FadeVector& h, const ChannelSpec& ch, Rng& rng) {
  require(x.size() == h.dim(), "symbol and fade dimensions differ");
  std::normal_distribution<double> z(0.0, std::sqrt(ch.n0()));
  Vector y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) y(i) = h.values()(i) * x(i) + z(rng);
  return y;
}

Eigen::Index ml_decode(const Constellation& x, const Vector& y, const FadeVector& h) {
  require(y.size() == x.dim() && h.dim() == x.dim(), "received vector dimension mismatch");
  const auto& p = x.points();
  const auto& hv = h.values();
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < x.dim(); ++i) {
      const double e = y(i) - hv(i) * p(k, i);
      d += e * e;
    }
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  require(trials > 0, "Wilson interval needs at least one trial");
  require(successes <= trials, "more successes than trials");
  const double nt = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nt;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nt;
  const double centre = (p + z2 / (2.0 * nt)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nt + z2 / (4.0 * nt * nt)) / denom;
  const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

namespace {

struct BlockCount {
  std::uint64_t bit_errors = 0;
  std::uint64_t symbol_errors = 0;
};

std::vector<std::uint32_t> label_words(const Constellation& x) {
  std::vector<std::uint32_t> words(static_cast<std::size_t>(x.size()));
  for (std::size_t k = 0; k < words.size(); ++k) {
    std::uint32_t w = 0;
    for (char c : x.labels()[k]) w = (w << 1) | (c == '1' ? 1u : 0u);
    words[k] = w;
  }
  return words;
}

}  // namespace

BerReport ber_monte_carlo(const Constellation& x, const std::vector<ChannelSpec>& points,
                          const BerOptions& options) {
  require(x.bits() > 0, "a single-point constellation carries no bits");
  require(x.has_labels(), "BER simulation needs a labeled constellation");
  require(options.min_bits >= 10'000, "min_bits must be at least 10^4");
  require(options.block_symbols > 0, "block size must be positive");
  require(options.workers > 0, "need at least one worker");

  const auto words = label_words(x);
  const auto q = static_cast<std::uint64_t>(x.bits());
  const std::uint64_t symbols = (options.min_bits + q - 1) / q;
  const std::uint64_t blocks = (symbols + options.block_symbols - 1) / options.block_symbols;
  const std::uint64_t m = static_cast<std::uint64_t>(x.size());

  BerReport report;
  report.rng_algorithm = std::string(kRngAlgorithm);
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const ChannelSpec& ch = points[pi];
    std::vector<BlockCount> counts(blocks);
    std::atomic<std::uint64_t> next{0};
    auto work = [&] {
      for (std::uint64_t b = next++; b < blocks; b = next++) {
        Rng rng = substream(options.seed, pi, b);
        std::uniform_int_distribution<std::uint64_t> pick(0, m - 1);
        const std::uint64_t begin = b * options.block_symbols;
        const std::uint64_t end = std::min(symbols, begin + options.block_symbols);
        BlockCount c;
        for (std::uint64_t s = begin; s < end; ++s) {
          const auto k = static_cast<Eigen::Index>(pick(rng));
          const FadeVector h = sample_fade(x.dim(), rng);
          const Vector y = transmit(x.points().row(k).transpose(), h, ch, rng);
          const Eigen::Index d = ml_decode(x, y, h);
          if (d != k) {
            ++c.symbol_errors;
            c.bit_errors += static_cast<std::uint64_t>(
                std::popcount(words[static_cast<std::size_t>(k)] ^ words[static_cast<std::size_t>(d)]));
          }
        }
        counts[b] = c;
      }
    };
    const unsigned nthreads =
        static_cast<unsigned>(std::min<std::uint64_t>(options.workers, blocks));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < nthreads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    BerRow row;
    row.ebn0_db = ch.ebn0_db().value_or(std::numeric_limits<double>::quiet_NaN());
    row.symbols = symbols;
    row.bits = symbols * q;
    for (const auto& c : counts) {
      row.bit_errors += c.bit_errors;
      row.symbol_errors += c.symbol_errors;
    }
    row.ber = static_cast<double>(row.bit_errors) / static_cast<double>(row.bits);
    row.ber_interval = wilson_interval(row.bit_errors, row.bits);
    row.ser = static_cast<double>(row.symbol_errors) / static_cast<double>(row.symbols);
    row.seed = options.seed;
    report.rows.push_back(row);
  }
  return report;
}

std::string to_csv(const BerReport& report) {
  std::string out = "ebn0_db,bits,bit_errors,ber,ber_lo,ber_hi,symbol_errors,ser,seed\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%g,%llu,%llu,%.10g,%.10g,%.10g,%llu,%.10g,%llu\n", r.ebn0_db,
                  static_cast<unsigned long long>(r.bits),
                  static_cast<unsigned long long>(r.bit_errors), r.ber, r.ber_interval.lo,
                  r.ber_interval.hi, static_cast<unsigned long long>(r.symbol_errors), r.ser,
                  static_cast<unsigned long long>(r.seed));
    out += buf;
  }
  return out;
}

}  // namespace rotcon
