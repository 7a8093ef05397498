#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "mlpolar/csv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const char* base = std::getenv("MLPOLAR_TEST_TMP");
  fs::path p = fs::path(base ? base : fs::temp_directory_path().string()) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = mlpolar::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::vector<double> column(const fs::path& p, const std::string& name, const std::string& filter_col = {},
                           const std::string& filter_val = {}) {
  const auto t = mlpolar::csv::read_file(p.string());
  const int c = t.column(name);
  const int f = filter_col.empty() ? -1 : t.column(filter_col);
  std::vector<double> v;
  for (const auto& [line, row] : t.rows) {
    if (f >= 0 && row[static_cast<std::size_t>(f)] != filter_val) continue;
    double x = NAN;
    mlpolar::csv::parse_double(row[static_cast<std::size_t>(c)], x);
    v.push_back(x);
  }
  return v;
}

void write_units_file(const fs::path& p, std::size_t n, std::uint64_t seed, bool constant = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::ofstream f(p);
  f << "id,x,y,population,v0\n";
  for (std::size_t i = 0; i < n; ++i) {
    f << "u" << i << ',' << u(rng) << ',' << u(rng) << ",1," << (constant ? 0.5 : u(rng)) << '\n';
  }
}

}  // namespace

TEST(Cli, SegregatedSynthPutsVarianceAboveLocales) {
  const auto dir = scratch("seg");
  ASSERT_EQ(cli({"synth", "--mode", "segregated", "--sigma", "0.2", "--out-dir", dir.string()}).code, 0);
  const auto dec = scratch("seg_dec");
  ASSERT_EQ(cli({"decompose", "--units", (dir / "units.csv").string(), "--out-dir", dec.string()}).code, 0);
  const auto j = read_json(dec / "decompose.json");
  // 16 locales on a 4x4 grid: the kd-tree level with 16 regions is the locale level
  const auto counts = j["hierarchies"]["kdtree"]["region_counts"].get<std::vector<std::size_t>>();
  const auto added = j["hierarchies"]["kdtree"]["added"].get<std::vector<double>>();
  double within = 0.0;
  for (std::size_t k = 0; k < counts.size() && counts[k] > 16; ++k) within += added[k];
  EXPECT_LT(within, 0.1 * j["hierarchies"]["kdtree"]["total"].get<double>());
}

TEST(Cli, ConstantValuesDecomposeToZero) {
  const auto dir = scratch("const");
  write_units_file(dir / "units.csv", 64, 1, true);
  const auto r = cli({"decompose", "--units", (dir / "units.csv").string(), "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (double a : column(dir / "decompose.csv", "added")) EXPECT_EQ(a, 0.0);
}

TEST(Cli, RandomHierarchySlopeOnIndependentValues) {
  const auto dir = scratch("slope");
  write_units_file(dir / "units.csv", 100000, 2);
  const auto r = cli({"decompose", "--units", (dir / "units.csv").string(), "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = read_json(dir / "decompose.json");
  EXPECT_NEAR(j["hierarchies"]["random"]["group_size_slope"].get<double>(), -1.0, 0.1);
  const auto added = column(dir / "decompose.csv", "added", "hierarchy", "random");
  double sum = 0.0;
  for (double a : added) sum += a;
  EXPECT_NEAR(sum, j["variance"].get<double>(), 1e-12);
}

TEST(Cli, StabilitySweepOnset) {
  const auto dir = scratch("stab");
  const auto r = cli({"stability-sweep", "--j-min", "0.5", "--j-max", "1.5", "--steps", "20", "--max-halvings", "4",
                      "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(read_json(dir / "stability.json")["bifurcation_onset_j"].get<double>(), 1.0, 0.1);
  EXPECT_EQ(column(dir / "stability.csv", "j").size(), 21U);
}

TEST(Cli, TiesSweepIsMonotone) {
  const auto dir = scratch("ties");
  ASSERT_EQ(cli({"ties-sweep", "--out-dir", dir.string()}).code, 0);
  const auto fc = column(dir / "ties.csv", "j_fully_connected");
  const auto seg = column(dir / "ties.csv", "j_segregated");
  ASSERT_EQ(fc.size(), 21U);
  for (std::size_t i = 1; i < fc.size(); ++i) {
    EXPECT_LE(fc[i], fc[i - 1]);
    EXPECT_GE(seg[i], seg[i - 1]);
  }
  const auto ident = column(dir / "two_state.csv", "j_identical_counties");
  const auto sorted = column(dir / "two_state.csv", "j_sorted_counties");
  for (std::size_t i = 0; i < ident.size(); ++i) EXPECT_GE(sorted[i], ident[i]);
}

TEST(Cli, AxesIdenticalRegionsHaveZeroDispersion) {
  const auto dir = scratch("axes_same");
  ASSERT_EQ(cli({"axes", "--identical", "--sphere-samples", "20000", "--out-dir", dir.string()}).code, 0);
  for (double d : column(dir / "axes_coupling.csv", "dispersion")) EXPECT_NEAR(d, 0.0, 1e-12);
}

TEST(Cli, AxesCouplingShrinksDispersion) {
  const auto dir = scratch("axes_orth");
  const auto r = cli({"axes", "--regions", "2", "--spread", "90", "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto coupling = column(dir / "axes_coupling.csv", "coupling");
  const auto disp = column(dir / "axes_coupling.csv", "dispersion");
  ASSERT_GT(disp.size(), 2U);
  for (std::size_t i = 1; i < disp.size(); ++i) {
    ASSERT_GT(coupling[i], coupling[i - 1]);
    EXPECT_LT(disp[i], disp[i - 1] + 1e-12);
  }
  EXPECT_LT(disp.back(), disp.front());
  const auto var = column(dir / "sphere.csv", "variance");
  const auto expected = column(dir / "sphere.csv", "expected");
  for (std::size_t i = 0; i < var.size(); ++i) EXPECT_NEAR(var[i], expected[i], 0.02 * expected[i]);
}

TEST(Cli, RepresentationSumsToOne) {
  const auto dir = scratch("rep");
  ASSERT_EQ(cli({"representation", "--out-dir", dir.string()}).code, 0);
  const auto j = read_json(dir / "representation.json");
  EXPECT_NEAR(j["sum_representation"].get<double>(), 1.0, 1e-3);
  EXPECT_EQ(column(dir / "representation.csv", "representation").size(), 100U);
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  for (const auto& d : {a, b}) {
    ASSERT_EQ(cli({"synth", "--seed", "9", "--locales", "4", "--per-locale", "8", "--out-dir", d.string()}).code, 0);
    ASSERT_EQ(cli({"decompose", "--units", (d / "units.csv").string(), "--seed", "9", "--out-dir", (d / "dec").string()})
                  .code,
              0);
  }
  for (const char* f : {"units.csv", "assignment.csv", "synth.json", "manifest.json"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  for (const char* f : {"decompose.csv", "decompose.json"}) EXPECT_EQ(slurp(a / "dec" / f), slurp(b / "dec" / f)) << f;
  const auto m = read_json(a / "manifest.json");
  EXPECT_EQ(m["seed"].get<int>(), 9);
  EXPECT_EQ(m["subcommand"].get<std::string>(), "synth");
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("codes");
  EXPECT_EQ(cli({"decompose", "--units", (dir / "missing.csv").string(), "--out-dir", dir.string()}).code, 1);
  EXPECT_EQ(cli({"decompose", "--bogus"}).code, 1);
  EXPECT_EQ(cli({"synth", "--locales", "1", "--out-dir", dir.string()}).code, 1);
  {
    std::ofstream f(dir / "same.csv");
    f << "region,x0,x1\n";
    for (int i = 0; i < 6; ++i) f << (i % 2 ? "a" : "b") << ",1.0,2.0\n";
  }
  EXPECT_EQ(cli({"axes", "--points", (dir / "same.csv").string(), "--out-dir", dir.string()}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, OutDirFromEnvironment) {
  const auto dir = scratch("envdir");
  ::setenv("MLPOLAR_OUT_DIR", dir.string().c_str(), 1);
  EXPECT_EQ(mlpolar::cli::resolve_out_dir(""), dir.string());
  EXPECT_EQ(mlpolar::cli::resolve_out_dir("x"), "x");
  ASSERT_EQ(cli({"ties-sweep", "--w-steps", "3"}).code, 0);
  ::unsetenv("MLPOLAR_OUT_DIR");
  EXPECT_TRUE(fs::exists(dir / "ties.csv"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  EXPECT_EQ(mlpolar::cli::resolve_out_dir(""), "out");
}
