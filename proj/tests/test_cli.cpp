#include "cli.hpp"

#include "rotcon/liegroup.hpp"
#include "rotcon/optimize.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace rotcon;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("rotcon_cli_" + name);
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, FamilyIdentity) {
  const auto r = run_cli({"family", "--k", "2", "--t-deg", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "1,0,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,1\n");
}

TEST(Cli, FamilySixtyDegrees) {
  const auto r = run_cli({"family", "--k", "2", "--t-deg", "60"});
  ASSERT_EQ(r.code, 0);
  const Matrix m = matrix_from_csv(r.out);
  EXPECT_LE((m.cwiseAbs() - Matrix::Constant(4, 4, 0.5)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Cli, FamilyCsvLoadsBitIdentically) {
  const auto path = temp_path("family.csv");
  ASSERT_EQ(run_cli({"family", "--k", "3", "--t-deg", "33.3", "--out", path.string()}).code, 0);
  const auto q = load_rotation_csv(path);
  EXPECT_EQ(q.matrix(), rotation_at(skew_family(3), 33.3 * std::numbers::pi / 180).matrix());
  std::filesystem::remove(path);
}

TEST(Cli, FamilyJsonHasProvenance) {
  const auto r = run_cli({"family", "--k", "2", "--t-rad", "0.56", "--format", "json"});
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j.contains("provenance"));
  EXPECT_TRUE(j.contains("note"));
  EXPECT_DOUBLE_EQ(j["t_rad"].get<double>(), 0.56);
}

TEST(Cli, MetricsUnrotatedAndRotated) {
  const auto plain = run_cli({"metrics", "--qam", "4", "--half-dims", "2", "--ebn0-db", "10",
                              "--format", "json"});
  ASSERT_EQ(plain.code, 0) << plain.err;
  const auto jp = nlohmann::json::parse(plain.out)["reports"][0];
  EXPECT_EQ(jp["radii"][1]["radius"], "inf");
  EXPECT_EQ(jp["radii"][1]["diversity_order"], 1);

  const auto x = make_qam_product(4, 2);
  const double t = grid_search_t(x, ChannelSpec::for_constellation(x, 10), 1e-4).t_opt;
  const auto rotated = run_cli({"metrics", "--qam", "4", "--half-dims", "2", "--ebn0-db", "10",
                                "--rotate-t-deg", std::to_string(t * 180 / std::numbers::pi),
                                "--format", "json"});
  ASSERT_EQ(rotated.code, 0) << rotated.err;
  const auto jr = nlohmann::json::parse(rotated.out)["reports"][0];
  EXPECT_EQ(jr["radii"][0]["diversity_order"], 4);
  EXPECT_EQ(jr["radii"][1]["diversity_order"], 3);
}

TEST(Cli, MetricsInfiniteRadiusMatchesDefault) {
  const auto r = run_cli({"metrics", "--qam", "16", "--half-dims", "1", "--ebn0-db", "7",
                          "--radius", "inf", "--format", "json"});
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out)["reports"][0];
  EXPECT_EQ(j["radii"][0]["local_cutoff_rate"], j["cutoff_rate"]);
}

TEST(Cli, GridProfileHasOneRowPerGridPoint) {
  const auto r = run_cli({"opt-rotation", "--qam", "4", "--half-dims", "1", "--ebn0-db", "5",
                          "--grid-step-deg", "1", "--profile"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out), 1u + 91u);
}

TEST(Cli, GridEightDimensional) {
  const auto path = temp_path("rot8.csv");
  const auto r = run_cli({"opt-rotation", "--qam", "4", "--half-dims", "4", "--ebn0-db", "5",
                          "--grid-step-deg", "0.0572957795", "--format", "json", "--rotation-out",
                          path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["results"][0]["t_opt_deg"].get<double>(), 69.2952, 0.0573);
  EXPECT_EQ(load_rotation_csv(path).dim(), 8);
  std::filesystem::remove(path);
}

TEST(Cli, ManifoldModeReportsTrace) {
  const auto r = run_cli({"opt-rotation", "--mode", "manifold", "--qam", "4", "--half-dims", "2",
                          "--ebn0-db", "10", "--max-iters", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "iteration,R_bits,gradient_norm");
  EXPECT_EQ(lines(r.out), 22u);
}

TEST(Cli, OptNuqam) {
  const auto r = run_cli({"opt-nuqam", "--q", "4", "--ebn0-db", "8", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto res = nlohmann::json::parse(r.out)["results"][0];
  EXPECT_EQ(res["alpha"].size(), 2u);
  EXPECT_TRUE(res["converged"].get<bool>());
}

TEST(Cli, SweepWithAndWithoutComparison) {
  const auto cmp = temp_path("cmp.csv");
  save_rotation_csv(rotation_at(skew_family(2), 0.56), cmp);
  const auto with = run_cli({"sweep", "--qam", "16", "--half-dims", "2", "--ebn0-db", "4,8",
                             "--grid-step-deg", "2", "--compare", cmp.string()});
  ASSERT_EQ(with.code, 0) << with.err;
  EXPECT_EQ(with.out.substr(0, with.out.find('\n')),
            "ebn0_db,t_opt_deg,R_bits,R_compare_bits,delta_R_bits");
  EXPECT_EQ(lines(with.out), 3u);
  std::filesystem::remove(cmp);

  const auto without = run_cli({"sweep", "--qam", "4", "--half-dims", "2", "--ebn0-db", "4",
                                "--grid-step-deg", "2", "--compare", cmp.string()});
  ASSERT_EQ(without.code, 0);
  EXPECT_NE(without.err.find("warning"), std::string::npos);
  EXPECT_EQ(without.out.substr(0, without.out.find('\n')), "ebn0_db,t_opt_deg,R_bits");
}

TEST(Cli, BerDeterministic) {
  const std::vector<std::string> args = {"ber", "--qam", "4", "--half-dims", "2", "--ebn0-db", "6,10",
                                         "--bits", "20000", "--seed", "5"};
  const auto a = run_cli(args);
  const auto b = run_cli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.substr(0, a.out.find('\n')), "ebn0_db,bits,bit_errors,ber,ber_lo,ber_hi,symbol_errors,ser,seed");
}

TEST(Cli, GenRoundTrip) {
  const auto path = temp_path("gen.json");
  ASSERT_EQ(run_cli({"gen", "--nuqam", "1,4", "--format", "json", "--out", path.string()}).code, 0);
  const auto r = run_cli({"metrics", "--input", path.string(), "--ebn0-db", "8"});
  EXPECT_EQ(r.code, 0) << r.err;
  std::filesystem::remove(path);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({"metrics", "--help"}).code, 0);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"metrics", "--bogus"}).code, 2);
  EXPECT_EQ(run_cli({"metrics", "--qam", "8", "--ebn0-db", "1"}).code, 2);
  EXPECT_EQ(run_cli({"metrics", "--qam", "4", "--nuqam", "1,3", "--ebn0-db", "1"}).code, 2);
  EXPECT_EQ(run_cli({"metrics", "--input", "/nonexistent/x.json", "--ebn0-db", "1"}).code, 3);
  EXPECT_EQ(run_cli({"metrics", "--qam", "4", "--rotation", "/nonexistent/q.csv", "--ebn0-db", "1"}).code, 3);
}

TEST(Cli, HelpDocumentsFlags) {
  const auto top = run_cli({"--help"});
  for (const char* flag : {"--seed", "--out", "--format", "--ebn0-db", "--grid-step-deg", "--radius", "--compare"}) {
    EXPECT_NE(top.out.find(flag), std::string::npos) << flag;
  }
  const auto ber = run_cli({"ber", "--help"});
  for (const char* flag : {"--qam", "--half-dims", "--nuqam", "--input", "--bits", "--workers", "--rotation"}) {
    EXPECT_NE(ber.out.find(flag), std::string::npos) << flag;
  }
}
