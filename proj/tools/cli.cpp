#include "cli.hpp"

#include "rotcon/channel.hpp"
#include "rotcon/constellation.hpp"
#include "rotcon/error.hpp"
#include "rotcon/liegroup.hpp"
#include "rotcon/metrics.hpp"
#include "rotcon/optimize.hpp"
#include "rotcon/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>

namespace rotcon::cli {

namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

struct Options {
  // global
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
  std::vector<double> ebn0_db;
  std::optional<double> grid_step_deg;
  std::vector<std::string> radius;
  std::string compare;

  // constellation source
  std::optional<int> qam;
  int half_dims = 1;
  std::vector<double> nuqam;
  std::string input;
  std::optional<double> energy;
  std::optional<double> rotate_t_deg;
  std::string rotation;

  // family
  int k = 2;
  double t_deg = 0.0;
  std::optional<double> t_rad;

  // opt-rotation
  std::string mode = "grid";
  bool profile = false;
  std::string rotation_out;
  double init_h = 1e-4;
  double step = 0.1;
  int max_iters = 5000;
  double grad_tol = 1e-8;
  int multistart = 0;

  // opt-nuqam
  int q = 4;
  std::vector<double> init;

  // ber
  std::uint64_t bits = 1'000'000;
  unsigned workers = 1;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_args(const std::vector<std::string>& args) {
  std::string s = "rotcon";
  for (const auto& a : args) s += " " + a;
  return s;
}

json provenance(const std::vector<std::string>& args, const Options& o) {
  return {{"command_line", join_args(args)},
          {"seed", o.seed},
          {"version", std::string(kVersion)},
          {"rng", std::string(kRngAlgorithm)}};
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void add_source_options(CLI::App* sub, Options& o) {
  sub->add_option("--qam", o.qam, "square QAM order per complex dimension (4, 16, 64, 256, 1024)");
  sub->add_option("--half-dims", o.half_dims, "number of QAM copies; the real dimension is twice this")
      ->capture_default_str();
  sub->add_option("--nuqam", o.nuqam, "2D NUQAM parameters alpha, comma separated")->delimiter(',');
  sub->add_option("--input", o.input, "constellation JSON file");
  sub->add_option("--energy", o.energy, "rescale to this average energy before rotating");
  sub->add_option("--rotate-t-deg", o.rotate_t_deg, "apply the family rotation Q_n(t), t in degrees");
  sub->add_option("--rotation", o.rotation, "apply a rotation matrix loaded from CSV");
}

Constellation load_source(const Options& o) {
  const int sources = (o.qam ? 1 : 0) + (o.nuqam.empty() ? 0 : 1) + (o.input.empty() ? 0 : 1);
  require(sources == 1, "give exactly one of --qam, --nuqam, --input");
  require(!(o.rotate_t_deg && !o.rotation.empty()), "--rotate-t-deg and --rotation are exclusive");
  Constellation x = o.qam ? make_qam_product(*o.qam, o.half_dims)
                    : !o.nuqam.empty() ? make_nuqam(NuqamParams(o.nuqam))
                                       : load(o.input);
  if (o.energy) x = normalize_energy(x, *o.energy);
  if (o.rotate_t_deg) {
    const auto n = static_cast<std::uint64_t>(x.dim());
    require(n >= 2 && std::has_single_bit(n), "--rotate-t-deg needs a power-of-two dimension");
    x = rotate(x, rotation_at(skew_family(std::countr_zero(n)), *o.rotate_t_deg * kDeg));
  } else if (!o.rotation.empty()) {
    x = rotate(x, load_rotation_csv(o.rotation));
  }
  return x;
}

std::vector<double> ebn0_list(const Options& o) {
  require(!o.ebn0_db.empty(), "--ebn0-db is required");
  return o.ebn0_db;
}

std::vector<Radius> radius_list(const Options& o) {
  if (o.radius.empty()) return {Radius::finite(2.0), Radius::infinite()};
  std::vector<Radius> out;
  for (const auto& s : o.radius) {
    if (s == "inf" || s == "Inf" || s == "infinity") {
      out.push_back(Radius::infinite());
      continue;
    }
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(s, &used);
      require(used == s.size(), "");
    } catch (const std::exception&) {
      fail(ErrorKind::InvalidArgument, "bad radius '" + s + "'");
    }
    out.push_back(Radius::finite(v));
  }
  return out;
}

double grid_step(const Options& o, double fallback) {
  return o.grid_step_deg ? *o.grid_step_deg * kDeg : fallback;
}

int family_order(const Constellation& x) {
  const auto n = static_cast<std::uint64_t>(x.dim());
  require(n >= 2 && std::has_single_bit(n), "the rotation family needs a power-of-two dimension");
  return std::countr_zero(n);
}

std::string cmd_family(const Options& o, const std::vector<std::string>& args) {
  const double t = o.t_rad ? *o.t_rad : o.t_deg * kDeg;
  const RotationMatrix q = rotation_at(skew_family(o.k), t);
  if (o.format == "json") {
    json j{{"k", o.k}, {"n", q.dim()}, {"t_rad", t}, {"t_deg", t / kDeg},
           {"matrix", matrix_json(q.matrix())}, {"provenance", provenance(args, o)}};
    if (o.k == 2) {
      j["note"] = "Q_4(-t) = Q_4(t)^T; tabulated 4x4 rotations may appear transposed";
    }
    return j.dump(2) + "\n";
  }
  return matrix_to_csv(q.matrix());
}

std::string cmd_metrics(const Options& o, const std::vector<std::string>& args) {
  const Constellation x = load_source(o);
  const auto radii = radius_list(o);
  std::vector<MetricsReport> reports;
  for (double db : ebn0_list(o)) {
    reports.push_back(metrics_report(x, ChannelSpec::for_constellation(x, db), radii));
  }
  if (o.format == "json") {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(json::parse(to_json(r)));
    return json{{"reports", arr}, {"provenance", provenance(args, o)}}.dump(2) + "\n";
  }
  std::string s =
      "ebn0_db,radius,cutoff_rate,local_cutoff_rate,diversity_order,min_product_distance,"
      "normalized_product_distance,empty_ball,high_snr_sum\n";
  for (const auto& r : reports) {
    for (const auto& pr : r.per_radius) {
      s += fmt(*r.ebn0_db) + "," + pr.radius.to_string() + "," + fmt(r.cutoff_rate) + "," +
           fmt(pr.local_cutoff_rate) + "," + std::to_string(pr.diversity.order) + "," +
           fmt(pr.product_distance.value) + "," + fmt(pr.product_distance.normalized) + "," +
           (pr.diversity.empty_ball ? "1" : "0") + "," + fmt(r.high_snr_sum) + "\n";
    }
  }
  return s;
}

std::string cmd_opt_rotation(const Options& o, const std::vector<std::string>& args) {
  const Constellation x = load_source(o);
  const auto dbs = ebn0_list(o);
  if (o.mode == "grid") {
    const RotationFamily family = skew_family(family_order(x));
    const double step = grid_step(o, kDefaultGridStep);
    std::vector<std::pair<double, TSearchResult>> results;
    for (double db : dbs) {
      results.emplace_back(db, grid_search_t(x, ChannelSpec::for_constellation(x, db), step,
                                             {o.profile, 1}));
    }
    if (!o.rotation_out.empty()) {
      save_rotation_csv(rotation_at(family, results.front().second.t_opt), o.rotation_out);
    }
    if (o.format == "json") {
      json arr = json::array();
      for (const auto& [db, r] : results) {
        json j{{"ebn0_db", db},         {"t_opt_rad", r.t_opt},
               {"t_opt_deg", r.t_opt / kDeg}, {"cutoff_rate", r.objective},
               {"grid_step_rad", r.grid_step},
               {"rotation", matrix_json(rotation_at(family, r.t_opt).matrix())}};
        if (o.profile) {
          json prof = json::array();
          for (const auto& p : r.profile) prof.push_back({p.t / kDeg, p.objective});
          j["profile"] = std::move(prof);
        }
        arr.push_back(std::move(j));
      }
      return json{{"mode", "grid"}, {"results", arr}, {"provenance", provenance(args, o)}}.dump(2) +
             "\n";
    }
    std::string s;
    if (o.profile) {
      s = "ebn0_db,t_deg,R_bits\n";
      for (const auto& [db, r] : results) {
        for (const auto& p : r.profile) s += fmt(db) + "," + fmt(p.t / kDeg) + "," + fmt(p.objective) + "\n";
      }
    } else {
      s = "ebn0_db,t_opt_deg,R_bits\n";
      for (const auto& [db, r] : results) {
        s += fmt(db) + "," + fmt(r.t_opt / kDeg) + "," + fmt(r.objective) + "\n";
      }
    }
    return s;
  }
  require(o.mode == "manifold", "--mode must be grid or manifold");
  require(dbs.size() == 1, "manifold mode takes a single --ebn0-db value");
  const ChannelSpec ch = ChannelSpec::for_constellation(x, dbs.front());
  RotationSearchOptions opts;
  opts.descent.step = o.step;
  opts.descent.max_iters = o.max_iters;
  opts.descent.grad_tol = o.grad_tol;
  opts.multistart = o.multistart;
  opts.seed = o.seed;
  const DescentTrace trace =
      optimize_rotation_full(x, ch, default_initial_rotation(x.dim(), o.init_h), opts);
  const RotationMatrix& q = trace.last().rotation;
  if (!o.rotation_out.empty()) save_rotation_csv(q, o.rotation_out);
  if (o.format == "json") {
    json j{{"mode", "manifold"},
           {"ebn0_db", dbs.front()},
           {"iterations", trace.last().iteration},
           {"converged", trace.converged},
           {"stop_reason", to_string(trace.reason)},
           {"cutoff_rate", -trace.last().objective},
           {"gradient_norm", trace.last().gradient_norm},
           {"rotation", matrix_json(q.matrix())},
           {"provenance", provenance(args, o)}};
    try {
      j["log_rotation"] = matrix_json(logm_rotation(q).matrix());
    } catch (const Error&) {
      j["log_rotation"] = nullptr;
    }
    return j.dump(2) + "\n";
  }
  std::string s = "iteration,R_bits,gradient_norm\n";
  for (const auto& it : trace.iterates) {
    s += std::to_string(it.iteration) + "," + fmt(-it.objective) + "," + fmt(it.gradient_norm) + "\n";
  }
  return s;
}

std::string cmd_opt_nuqam(const Options& o, const std::vector<std::string>& args) {
  const auto dbs = ebn0_list(o);
  std::vector<double> init = o.init;
  if (init.empty()) {
    require(o.q >= 2 && o.q % 2 == 0 && o.q <= 24, "--q must be an even bit count");
    for (int i = 0; i < (1 << (o.q / 2 - 1)); ++i) init.push_back(2.0 * i + 1.0);
  }
  const NuqamParams start(init);
  std::vector<std::pair<double, AlphaDescentResult>> results;
  for (double db : dbs) {
    results.emplace_back(db, optimize_nuqam(o.q, ChannelSpec::from_ebn0_db(db), start));
  }
  if (o.format == "json") {
    json arr = json::array();
    for (const auto& [db, r] : results) {
      arr.push_back({{"ebn0_db", db},
                     {"alpha", r.alpha.values()},
                     {"alpha_qam_energy", alpha_at_qam_energy(r.alpha).values()},
                     {"alpha_ratios", alpha_ratios(r.alpha)},
                     {"cutoff_rate", r.objective},
                     {"iterations", r.iterations},
                     {"converged", r.converged}});
    }
    return json{{"q", o.q}, {"results", arr}, {"provenance", provenance(args, o)}}.dump(2) + "\n";
  }
  std::string s = "ebn0_db,R_bits,iterations,converged";
  for (std::size_t i = 0; i < init.size(); ++i) s += ",alpha" + std::to_string(i + 1);
  s += "\n";
  for (const auto& [db, r] : results) {
    s += fmt(db) + "," + fmt(r.objective) + "," + std::to_string(r.iterations) + "," +
         (r.converged ? "1" : "0");
    const NuqamParams scaled = alpha_at_qam_energy(r.alpha);
    for (double a : scaled.values()) s += "," + fmt(a);
    s += "\n";
  }
  return s;
}

std::string cmd_sweep(const Options& o, const std::vector<std::string>& args, std::ostream& err) {
  const Constellation x = load_source(o);
  const auto dbs = ebn0_list(o);
  family_order(x);
  std::optional<RotationMatrix> compare;
  if (!o.compare.empty()) {
    if (std::filesystem::exists(o.compare)) {
      compare = load_rotation_csv(o.compare);
    } else {
      err << "warning: comparison rotation '" << o.compare
          << "' not found; omitting the delta_R column\n";
    }
  }
  std::optional<Constellation> xc;
  if (compare) xc = rotate(x, *compare);
  const double step = grid_step(o, kSweepGridStep);

  json arr = json::array();
  std::string s = compare ? "ebn0_db,t_opt_deg,R_bits,R_compare_bits,delta_R_bits\n"
                          : "ebn0_db,t_opt_deg,R_bits\n";
  for (double db : dbs) {
    const ChannelSpec ch = ChannelSpec::for_constellation(x, db);
    const TSearchResult r = grid_search_t(x, ch, step);
    json row{{"ebn0_db", db}, {"t_opt_deg", r.t_opt / kDeg}, {"cutoff_rate", r.objective}};
    s += fmt(db) + "," + fmt(r.t_opt / kDeg) + "," + fmt(r.objective);
    if (xc) {
      const double rc = cutoff_rate(*xc, ch);
      row["cutoff_rate_compare"] = rc;
      row["delta_R"] = r.objective - rc;
      s += "," + fmt(rc) + "," + fmt(r.objective - rc);
    }
    s += "\n";
    arr.push_back(std::move(row));
  }
  if (o.format == "json") {
    return json{{"rows", arr}, {"grid_step_rad", step}, {"provenance", provenance(args, o)}}.dump(2) +
           "\n";
  }
  return s;
}

std::string cmd_ber(const Options& o, const std::vector<std::string>& args) {
  const Constellation x = load_source(o);
  std::vector<ChannelSpec> points;
  for (double db : ebn0_list(o)) points.push_back(ChannelSpec::for_constellation(x, db));
  BerOptions opts;
  opts.min_bits = o.bits;
  opts.seed = o.seed;
  opts.workers = o.workers;
  const BerReport report = ber_monte_carlo(x, points, opts);
  if (o.format == "json") {
    json arr = json::array();
    for (const auto& r : report.rows) {
      arr.push_back({{"ebn0_db", r.ebn0_db},
                     {"bits", r.bits},
                     {"bit_errors", r.bit_errors},
                     {"ber", r.ber},
                     {"ber_lo", r.ber_interval.lo},
                     {"ber_hi", r.ber_interval.hi},
                     {"symbols", r.symbols},
                     {"symbol_errors", r.symbol_errors},
                     {"ser", r.ser},
                     {"seed", r.seed}});
    }
    return json{{"rows", arr}, {"rng", report.rng_algorithm}, {"provenance", provenance(args, o)}}
               .dump(2) +
           "\n";
  }
  return to_csv(report);
}

std::string cmd_gen(const Options& o) {
  const Constellation x = load_source(o);
  if (o.format == "json") return to_json(x) + "\n";
  return to_csv(x);
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) fail(ErrorKind::InputData, "cannot write " + o.out);
  f << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Rotated constellations for the Rayleigh fast-fading channel", "rotcon"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--seed", o.seed, "random seed")->capture_default_str();
  app.add_option("--out", o.out, "output file (default: stdout)");
  app.add_option("--format", o.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--ebn0-db", o.ebn0_db, "Eb/N0 values in dB, comma separated")->delimiter(',');
  app.add_option("--grid-step-deg", o.grid_step_deg, "t-search grid step in degrees");
  app.add_option("--radius", o.radius, "ball radius for local metrics (repeatable, 'inf' allowed)")
      ->delimiter(',');
  app.add_option("--compare", o.compare, "comparison rotation CSV for sweep");

  auto* family = app.add_subcommand("family", "print the family rotation Q_{2^k}(t)");
  family->add_option("--k", o.k, "log2 of the dimension (1..12)")->capture_default_str();
  auto* t_deg = family->add_option("--t-deg", o.t_deg, "angle in degrees")->capture_default_str();
  family->add_option("--t-rad", o.t_rad, "angle in radians")->excludes(t_deg);

  auto* metrics = app.add_subcommand("metrics", "cutoff rate, diversity and product distance report");
  add_source_options(metrics, o);

  auto* opt_rot = app.add_subcommand("opt-rotation", "optimize the rotation for the cutoff rate");
  add_source_options(opt_rot, o);
  opt_rot->add_option("--mode", o.mode, "grid or manifold")
      ->check(CLI::IsMember({"grid", "manifold"}))
      ->capture_default_str();
  opt_rot->add_flag("--profile", o.profile, "emit R at every grid point");
  opt_rot->add_option("--rotation-out", o.rotation_out, "save the optimal rotation as CSV");
  opt_rot->add_option("--init-h", o.init_h, "manifold: initial point exp(H), H_ij = h for i < j")
      ->capture_default_str();
  opt_rot->add_option("--step", o.step, "manifold: initial step length")->capture_default_str();
  opt_rot->add_option("--max-iters", o.max_iters, "manifold: iteration cap")->capture_default_str();
  opt_rot->add_option("--grad-tol", o.grad_tol, "manifold: gradient norm tolerance")
      ->capture_default_str();
  opt_rot->add_option("--multistart", o.multistart, "manifold: extra perturbed starts")
      ->capture_default_str();

  auto* opt_nuqam = app.add_subcommand("opt-nuqam", "optimize 2D NUQAM levels for the cutoff rate");
  opt_nuqam->add_option("--q", o.q, "bits per symbol (4, 6, 8, 10)")->capture_default_str();
  opt_nuqam->add_option("--init", o.init, "initial alpha, comma separated (default: uniform)")
      ->delimiter(',');

  auto* sweep = app.add_subcommand("sweep", "grid-search t_opt across Eb/N0");
  add_source_options(sweep, o);

  auto* ber = app.add_subcommand("ber", "Monte Carlo bit error rate with ML decoding");
  add_source_options(ber, o);
  ber->add_option("--bits", o.bits, "minimum bits per Eb/N0 point")->capture_default_str();
  ber->add_option("--workers", o.workers, "worker threads")->capture_default_str();

  auto* gen = app.add_subcommand("gen", "write a constellation");
  add_source_options(gen, o);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    std::string text;
    if (family->parsed()) {
      text = cmd_family(o, args);
    } else if (metrics->parsed()) {
      text = cmd_metrics(o, args);
    } else if (opt_rot->parsed()) {
      text = cmd_opt_rotation(o, args);
    } else if (opt_nuqam->parsed()) {
      text = cmd_opt_nuqam(o, args);
    } else if (sweep->parsed()) {
      text = cmd_sweep(o, args, err);
    } else if (ber->parsed()) {
      text = cmd_ber(o, args);
    } else {
      text = cmd_gen(o);
    }
    emit(o, text, out);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::InvalidArgument: return 2;
      case ErrorKind::InputData: return 3;
      case ErrorKind::Numerical: return 4;
    }
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace rotcon::cli
