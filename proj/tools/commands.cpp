#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlpolar/axes.hpp"
#include "mlpolar/csv.hpp"
#include "mlpolar/election.hpp"
#include "mlpolar/errors.hpp"
#include "mlpolar/geo_hierarchy.hpp"
#include "mlpolar/ingest.hpp"
#include "mlpolar/scale_variance.hpp"
#include "mlpolar/social_ties.hpp"

namespace mlpolar::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) { return csv::format_double(v); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Files of one run, all under one directory.
class RunOutput {
 public:
  RunOutput(std::string dir, std::string subcommand) : dir_(std::move(dir)), subcommand_(std::move(subcommand)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) detail::throw_input("cannot create output directory '" + dir_ + "': " + ec.message());
  }

  std::ofstream open(const std::string& name) {
    std::ofstream f(fs::path(dir_) / name, std::ios::binary | std::ios::trunc);
    if (!f) detail::throw_input("cannot write '" + (fs::path(dir_) / name).string() + "'");
    files_.push_back(name);
    return f;
  }

  void write_json(const std::string& name, const json& j) {
    auto f = open(name);
    f << j.dump(2) << '\n';
  }

  void write_manifest(std::uint64_t seed, const json& parameters) {
    json m;
    m["tool"] = "mlpolar";
    m["version"] = kVersion;
    m["subcommand"] = subcommand_;
    m["seed"] = seed;
    m["parameters"] = parameters;
    m["outputs"] = files_;
    std::ofstream f(fs::path(dir_) / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!f) detail::throw_input("cannot write manifest in '" + dir_ + "'");
    f << m.dump(2) << '\n';
  }

  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::string subcommand_;
  std::vector<std::string> files_;
};

std::vector<double> linspace(double lo, double hi, std::size_t steps) {
  if (steps < 2) return {lo};
  std::vector<double> out(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  return out;
}

struct Common {
  std::string out_dir;
  std::uint64_t seed = 1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out-dir", c.out_dir, "Output directory (default: $MLPOLAR_OUT_DIR, else ./out)");
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

// ---------------------------------------------------------------- decompose

struct DecomposeArgs {
  Common common;
  std::string returns;
  std::string config;
  std::string units;
  bool lenient = false;
  bool two_party = false;
  int depth = 0;
  double p = 0.0;
  bool bernoulli = false;
  bool unweighted = false;
  std::size_t min_groups = 8;
};

json decomposition_json(const ScaleDecomposition& dec, const std::optional<ScaleDecomposition>& norm,
                        std::size_t first_region_scale, std::size_t min_groups) {
  json j;
  j["total"] = dec.total;
  j["added"] = dec.added;
  j["region_counts"] = dec.region_counts;
  if (norm) {
    j["normalized_total"] = norm->total;
    j["normalized_added"] = norm->added;
  } else {
    j["normalized_total"] = nullptr;
  }
  j["within_finest_share"] =
      dec.total > 0.0 ? json(cumulative_within(dec, first_region_scale) / dec.total) : json(nullptr);
  try {
    j["group_size_slope"] = group_size_slope(dec, min_groups);
  } catch (const DegenerateError&) {
    j["group_size_slope"] = nullptr;
  }
  return j;
}

void append_rows(std::ostream& out, const std::string& name, const ScaleDecomposition& dec,
                 const std::optional<ScaleDecomposition>& norm) {
  for (std::size_t k = 0; k < dec.added.size(); ++k) {
    const double within = cumulative_within(dec, k + 1);
    csv::write_row(out, {name, std::to_string(k), std::to_string(dec.region_counts[k]), fmt(dec.added[k]),
                         fmt(within), fmt(dec.total - within), norm ? fmt(norm->added[k]) : std::string()});
  }
}

int cmd_decompose(const DecomposeArgs& a, std::ostream& out) {
  if (a.returns.empty() == a.units.empty()) detail::throw_input("give exactly one of --returns or --units");

  std::vector<GeoUnit> units;
  std::optional<RegionTree> assigned;
  std::size_t rejected = 0;
  ReturnsSchema schema;
  if (!a.returns.empty()) {
    if (!a.config.empty()) schema = load_schema_config(a.config);
    if (a.lenient) schema.strict = false;
    if (a.two_party) schema.denominator = ShareDenominator::kTwoParty;
    auto table = load_returns(a.returns, schema);
    rejected = table.rejected.size();
    for (const auto& d : table.rejected) out << "skipped line " << d.line << ": " << d.message << '\n';
    if (!schema.level_columns.empty()) assigned = load_assigned_hierarchy(table.rows, schema.level_columns);
    units = std::move(table.units);
  } else {
    units = load_units(a.units);
  }
  for (const auto& u : units) {
    if (u.dimension() != 1) detail::throw_input("decompose needs scalar unit values");
  }

  int depth = a.depth;
  if (depth <= 0) {
    depth = 0;
    while (depth < 16 && (std::size_t{2} << depth) <= units.size()) ++depth;
    if (depth == 0) detail::throw_input("need at least 2 units to build a hierarchy");
  }

  DecomposeOptions opts;
  opts.population_weighted = !a.unweighted;
  opts.bernoulli_within_unit = a.bernoulli;
  const auto moments = weighted_moments(units, opts.population_weighted);
  double p = a.p;
  if (p == 0.0) p = moments.mean;
  const bool can_normalize = p > 0.0 && p < 1.0;
  if (a.p != 0.0 && !can_normalize) detail::throw_input("--p must lie strictly between 0 and 1");

  struct Named {
    std::string name;
    RegionTree tree;
  };
  std::vector<Named> trees;
  trees.push_back({"kdtree", build_kdtree_hierarchy(units, depth)});
  trees.push_back({"random", build_random_hierarchy(units, depth, a.common.seed)});
  if (assigned) trees.push_back({"assigned", *assigned});

  RunOutput run(resolve_out_dir(a.common.out_dir), "decompose");
  auto csv_out = run.open("decompose.csv");
  csv::write_row(csv_out,
                 {"hierarchy", "scale", "region_count", "added", "cumulative_within", "cumulative_above", "normalized"});
  json summary;
  summary["units"] = units.size();
  summary["rejected_rows"] = rejected;
  summary["population"] = moments.weight;
  summary["mean"] = moments.mean;
  summary["variance"] = moments.variance;
  summary["p"] = can_normalize ? json(p) : json(nullptr);
  summary["depth"] = depth;
  json hier = json::object();
  for (const auto& [name, tree] : trees) {
    const RegionTree t = a.bernoulli ? tree.with_unit_level() : tree;
    const auto dec = decompose(t, units, opts);
    std::optional<ScaleDecomposition> norm;
    if (can_normalize) norm = normalized(dec, p);
    append_rows(csv_out, name, dec, norm);
    hier[name] = decomposition_json(dec, norm, a.bernoulli ? 2 : 1, a.min_groups);
  }
  summary["hierarchies"] = hier;
  run.write_json("decompose.json", summary);

  json params;
  params["returns"] = a.returns;
  params["config"] = a.config;
  params["units"] = a.units;
  params["strict"] = schema.strict;
  params["denominator"] = schema.denominator == ShareDenominator::kTwoParty ? "two_party" : "total";
  params["depth"] = depth;
  params["p"] = can_normalize ? json(p) : json(nullptr);
  params["bernoulli"] = a.bernoulli;
  params["population_weighted"] = opts.population_weighted;
  params["min_groups"] = a.min_groups;
  run.write_manifest(a.common.seed, params);
  out << "decompose: " << units.size() << " units, " << trees.size() << " hierarchies -> " << run.dir() << '\n';
  return 0;
}

// ---------------------------------------------------------- stability-sweep

struct StabilityArgs {
  Common common;
  double sigma = 0.5;
  double alienation = 1.0;
  double j_min = 0.2;
  double j_max = 2.0;
  std::size_t steps = 37;
  InstabilityOptions inst;
  double onset_threshold = 1e-3;
};

int cmd_stability(const StabilityArgs& a, std::ostream& out) {
  const auto rows = stability_sweep(a.sigma, a.alienation, a.j_min, a.j_max, a.steps, a.inst);
  RunOutput run(resolve_out_dir(a.common.out_dir), "stability-sweep");
  auto f = run.open("stability.csv");
  csv::write_row(f, {"j", "delta", "outcome", "branch_low", "branch_high", "jump", "unstable"});
  for (const auto& r : rows) {
    csv::write_row(f, {fmt(r.j), fmt(r.delta), fmt(r.outcome), fmt(r.branch_low), fmt(r.branch_high), fmt(r.jump),
                       r.unstable ? "1" : "0"});
  }
  const double onset = bifurcation_onset(rows, a.onset_threshold);
  json summary;
  summary["rows"] = rows.size();
  summary["bifurcation_onset_j"] = number_or_null(onset);
  run.write_json("stability.json", summary);

  json params;
  params["sigma"] = a.sigma;
  params["alienation"] = a.alienation;
  params["j_min"] = a.j_min;
  params["j_max"] = a.j_max;
  params["steps"] = a.steps;
  params["eps_lo"] = a.inst.eps_lo;
  params["eps_hi"] = a.inst.eps_hi;
  params["initial_steps"] = a.inst.initial_steps;
  params["max_halvings"] = a.inst.max_halvings;
  params["rel_tolerance"] = a.inst.rel_tolerance;
  params["abs_floor"] = a.inst.abs_floor;
  params["onset_threshold"] = a.onset_threshold;
  params["election"] = {{"grid_points", ElectionModel{}.grid_points},
                        {"refine_factor", ElectionModel{}.refine_factor},
                        {"tie_tolerance", ElectionModel{}.tie_tolerance}};
  run.write_manifest(a.common.seed, params);
  out << "stability-sweep: " << rows.size() << " rows, onset J = " << (std::isfinite(onset) ? fmt(onset) : "none")
      << " -> " << run.dir() << '\n';
  return 0;
}

// --------------------------------------------------------------- ties-sweep

struct TiesArgs {
  Common common;
  double delta = 1.0;
  double sigma = 0.5;
  double alienation = 0.5;
  std::size_t w_steps = 21;
  double state_weight = 0.2;
};

int cmd_ties(const TiesArgs& a, std::ostream& out) {
  const auto mix = Mixture2::symmetric(a.delta, a.sigma);
  const double j0 = polarization_j(mix, a.alienation);
  RunOutput run(resolve_out_dir(a.common.out_dir), "ties-sweep");
  auto f = run.open("ties.csv");
  csv::write_row(f, {"w", "j", "j_fully_connected", "j_segregated", "variance_fully_connected",
                     "variance_segregated"});
  for (double w : linspace(0.0, 1.0, a.w_steps)) {
    csv::write_row(f, {fmt(w), fmt(j0), fmt(j_fully_connected(mix, a.alienation, w)),
                       fmt(j_segregated(mix, a.alienation, w)), fmt(transform_fully_connected(mix, w).variance()),
                       fmt(transform_segregated(mix, w).variance())});
  }
  auto g = run.open("two_state.csv");
  csv::write_row(g, {"county_weight", "state_weight", "j_identical_counties", "j_sorted_counties"});
  if (!(a.state_weight >= 0.0 && a.state_weight <= 1.0)) detail::throw_input("--state-weight must lie in [0, 1]");
  for (double w1 : linspace(0.0, 1.0 - a.state_weight, a.w_steps)) {
    const auto j = two_state_j(a.delta, a.sigma, a.alienation, std::min(w1, 1.0 - a.state_weight), a.state_weight);
    csv::write_row(g, {fmt(w1), fmt(a.state_weight), fmt(j.identical_counties), fmt(j.sorted_counties)});
  }
  json params;
  params["delta"] = a.delta;
  params["sigma"] = a.sigma;
  params["alienation"] = a.alienation;
  params["w_steps"] = a.w_steps;
  params["state_weight"] = a.state_weight;
  run.write_manifest(a.common.seed, params);
  out << "ties-sweep: J = " << fmt(j0) << " -> " << run.dir() << '\n';
  return 0;
}

// --------------------------------------------------------------------- axes

struct AxesArgs {
  Common common;
  std::string points;
  std::size_t regions = 8;
  std::size_t per_region = 200;
  int dim = 2;
  double spread_deg = 60.0;
  double separation = 4.0;
  double noise = 0.5;
  bool identical = false;
  std::size_t coupling_steps = 11;
  TwoMeansOptions two_means;
  double sphere_r = 1.0;
  std::vector<int> sphere_dims{1, 2, 4, 10};
  std::size_t sphere_samples = 100000;
};

struct RegionCloud {
  std::string name;
  OpinionCloud cloud;
};

std::vector<RegionCloud> load_point_clouds(const std::string& path) {
  std::ifstream in(path);
  if (!in) detail::throw_input("cannot open points file '" + path + "'");
  const auto table = csv::read_stream(in);
  const int c_region = table.column("region");
  const int c_weight = table.column("weight");
  if (c_region < 0) detail::throw_input("points file needs a 'region' column");
  std::vector<int> c_x;
  for (int k = 0;; ++k) {
    const int c = table.column("x" + std::to_string(k));
    if (c < 0) break;
    c_x.push_back(c);
  }
  if (c_x.empty()) detail::throw_input("points file needs coordinate columns x0, x1, ...");
  std::map<std::string, std::pair<std::vector<std::vector<double>>, std::vector<double>>> by_region;
  for (const auto& [line, fields] : table.rows) {
    auto num = [&](int c) {
      double v = 0.0;
      if (static_cast<std::size_t>(c) >= fields.size() || !csv::parse_double(fields[static_cast<std::size_t>(c)], v) ||
          !std::isfinite(v)) {
        detail::throw_input("line " + std::to_string(line) + ": unparsable number");
      }
      return v;
    };
    if (static_cast<std::size_t>(c_region) >= fields.size()) detail::throw_input("line " + std::to_string(line) + ": missing region");
    auto& [pts, ws] = by_region[fields[static_cast<std::size_t>(c_region)]];
    std::vector<double> p;
    for (int c : c_x) p.push_back(num(c));
    pts.push_back(std::move(p));
    ws.push_back(c_weight >= 0 ? num(c_weight) : 1.0);
  }
  std::vector<RegionCloud> out;
  for (auto& [name, pw] : by_region) {
    const auto& [pts, ws] = pw;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(c_x.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t k = 0; k < c_x.size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = pts[i][k];
    }
    out.push_back({name, OpinionCloud(m, Eigen::Map<const Eigen::VectorXd>(ws.data(), static_cast<Eigen::Index>(ws.size())))});
  }
  return out;
}

std::vector<RegionCloud> synth_point_clouds(const AxesArgs& a) {
  if (a.regions < 1 || a.per_region < 2 || a.dim < 2) {
    detail::throw_input("synthetic clouds need regions >= 1, per-region >= 2, dim >= 2");
  }
  std::mt19937_64 rng(a.common.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<RegionCloud> out;
  for (std::size_t r = 0; r < a.regions; ++r) {
    const double frac = a.regions > 1 ? static_cast<double>(r) / static_cast<double>(a.regions - 1) - 0.5 : 0.0;
    const double theta = a.identical ? 0.0 : a.spread_deg * std::numbers::pi / 180.0 * frac;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(a.dim);
    u[0] = std::cos(theta);
    u[1] = std::sin(theta);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(a.per_region), a.dim);
    for (std::size_t i = 0; i < a.per_region; ++i) {
      const double side = i % 2 == 0 ? 0.5 : -0.5;
      for (int k = 0; k < a.dim; ++k) {
        m(static_cast<Eigen::Index>(i), k) = side * a.separation * u[k] + a.noise * normal(rng);
      }
    }
    if (a.identical && r > 0) m = out.front().cloud.points();
    out.push_back({"r" + std::to_string(r), OpinionCloud(m)});
  }
  return out;
}

double degrees(double rad) { return rad * 180.0 / std::numbers::pi; }

int cmd_axes(const AxesArgs& a, std::ostream& out) {
  auto clouds = a.points.empty() ? synth_point_clouds(a) : load_point_clouds(a.points);

  Eigen::Index total_rows = 0;
  for (const auto& c : clouds) total_rows += c.cloud.size();
  const Eigen::Index d = clouds.front().cloud.dimension();
  Eigen::MatrixXd pooled(total_rows, d);
  Eigen::VectorXd pooled_w(total_rows);
  Eigen::Index at = 0;
  for (const auto& c : clouds) {
    pooled.middleRows(at, c.cloud.size()) = c.cloud.points();
    pooled_w.segment(at, c.cloud.size()) = c.cloud.weights() / static_cast<double>(clouds.size());
    at += c.cloud.size();
  }
  const auto national = two_means_axis(OpinionCloud(pooled, pooled_w), a.two_means).axis;

  RunOutput run(resolve_out_dir(a.common.out_dir), "axes");
  auto f = run.open("axes_regions.csv");
  csv::write_row(f, {"region", "status", "two_means_angle_deg", "pca_angle_deg", "two_means_vs_pca_deg", "objective"});
  std::vector<ElectionAxis> local;
  std::size_t degenerate = 0;
  for (const auto& c : clouds) {
    try {
      const auto tm = two_means_axis(c.cloud, a.two_means);
      const auto pca = pca_axis(c.cloud);
      local.push_back(tm.axis);
      csv::write_row(f, {c.name, "ok", fmt(degrees(angle_between(tm.axis.direction, national.direction))),
                         fmt(degrees(angle_between(pca.direction, national.direction))),
                         fmt(degrees(angle_between(tm.axis.direction, pca.direction))), fmt(tm.objective)});
    } catch (const std::exception& e) {
      ++degenerate;
      csv::write_row(f, {c.name, std::string("degenerate: ") + e.what(), "", "", "", ""});
    }
  }

  auto g = run.open("axes_coupling.csv");
  csv::write_row(g, {"coupling", "dispersion", "mean_angle_deg", "national_shift_deg"});
  if (!local.empty()) {
    const std::size_t n = local.size();
    InteractionSystem sys;
    sys.axes = local;
    sys.axes.push_back(national);
    sys.scale_of.assign(n, 0);
    sys.scale_of.push_back(1);
    Eigen::MatrixXd from_local = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
    Eigen::MatrixXd from_national = from_local;
    for (std::size_t i = 0; i < n; ++i) {
      from_local(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = 1.0 / static_cast<double>(n);
      from_national(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) = 1.0;
    }
    sys.coupling = {from_local, from_national};
    for (double c : linspace(0.0, 1.0, a.coupling_steps)) {
      sys.w = 1.0 - c;
      const auto coupled = multilevel_couple(sys);
      const std::span<const ElectionAxis> locals(coupled.data(), n);
      double mean_angle = 0.0;
      for (const auto& e : locals) mean_angle += angle_between(e.direction, national.direction);
      mean_angle /= static_cast<double>(n);
      csv::write_row(g, {fmt(c), fmt(circular_dispersion(locals, national)), fmt(degrees(mean_angle)),
                         fmt(degrees(angle_between(coupled.back().direction, national.direction)))});
    }
  }

  auto h = run.open("sphere.csv");
  csv::write_row(h, {"dim", "axis", "variance", "expected"});
  for (std::size_t k = 0; k < a.sphere_dims.size(); ++k) {
    const int n = a.sphere_dims[k];
    const auto v = sample_sphere_axis_variances(a.sphere_r, n, a.sphere_samples, a.common.seed + k);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      csv::write_row(h, {std::to_string(n), std::to_string(i), fmt(v[i]), fmt(sphere_axis_variance(a.sphere_r, n))});
    }
  }

  json params;
  params["points"] = a.points;
  params["regions"] = a.regions;
  params["per_region"] = a.per_region;
  params["dim"] = a.dim;
  params["spread_deg"] = a.spread_deg;
  params["separation"] = a.separation;
  params["noise"] = a.noise;
  params["identical"] = a.identical;
  params["coupling_steps"] = a.coupling_steps;
  params["restarts"] = a.two_means.restarts;
  params["max_iterations"] = a.two_means.max_iterations;
  params["two_means_seed"] = a.two_means.seed;
  params["sphere_r"] = a.sphere_r;
  params["sphere_dims"] = a.sphere_dims;
  params["sphere_samples"] = a.sphere_samples;
  run.write_manifest(a.common.seed, params);
  out << "axes: " << clouds.size() << " regions (" << degenerate << " degenerate) -> " << run.dir() << '\n';
  return 0;
}

// ----------------------------------------------------------- representation

struct RepArgs {
  Common common;
  std::string election = "utility";
  double alienation = 1.0;
  std::size_t voters = 100;
  double delta = 1.0;
  double sigma = 0.5;
  double pi_a = 0.5;
  std::string units;
  double tie_weight = 0.0;
  double step = 0.0;
};

int cmd_representation(const RepArgs& a, std::ostream& out) {
  ElectionModel model;
  if (a.election == "mean") {
    model = ElectionModel::mean();
  } else if (a.election == "median") {
    model = ElectionModel::median();
  } else if (a.election == "utility") {
    model = ElectionModel::utility(a.alienation);
  } else {
    detail::throw_input("unknown election '" + a.election + "' (mean, median, utility)");
  }
  validate(model);

  std::vector<double> positions;
  std::vector<double> weights;
  if (!a.units.empty()) {
    for (const auto& u : load_units(a.units)) {
      positions.push_back(u.scalar());
      weights.push_back(u.population);
    }
  } else {
    if (a.voters < 2) detail::throw_input("need at least 2 voters");
    const auto mix = Mixture2::make(a.pi_a, 1.0 - a.pi_a, a.delta, -a.delta, a.sigma);
    std::mt19937_64 rng(a.common.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < a.voters; ++i) {
      const double mu = uni(rng) < mix.pi_a ? mix.mu_a : mix.mu_b;
      positions.push_back(mu + mix.sigma * normal(rng));
      weights.push_back(1.0);
    }
  }
  const WeightedOpinions actual(positions, weights);
  const std::size_t n = actual.size();

  const auto ties = TieMatrix::uniform(n, a.tie_weight);
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(positions.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd xe = effective_opinions(ties, x);
  const WeightedOpinions effective(std::vector<double>(xe.data(), xe.data() + n),
                                   std::vector<double>(actual.weights().begin(), actual.weights().end()));
  const double outcome = elect(model, effective);
  Eigen::VectorXd r_eff(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) r_eff[static_cast<Eigen::Index>(i)] = representation(model, effective, i, a.step);
  const Eigen::VectorXd r = representation_under_ties(ties, r_eff);

  RunOutput run(resolve_out_dir(a.common.out_dir), "representation");
  auto f = run.open("representation.csv");
  csv::write_row(f, {"voter", "position", "weight", "effective_position", "effective_representation",
                     "representation", "density"});
  std::size_t negative = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (r[k] < 0.0) ++negative;
    csv::write_row(f, {std::to_string(i), fmt(positions[i]), fmt(actual.weights()[i]), fmt(xe[k]), fmt(r_eff[k]),
                       fmt(r[k]), fmt(r[k] / actual.weights()[i])});
  }
  json summary;
  summary["voters"] = n;
  summary["outcome"] = outcome;
  summary["sum_representation"] = r.sum();
  summary["sum_effective_representation"] = r_eff.sum();
  summary["negative_count"] = negative;
  run.write_json("representation.json", summary);

  json params;
  params["election"] = a.election;
  params["alienation"] = a.alienation;
  params["voters"] = n;
  params["delta"] = a.delta;
  params["sigma"] = a.sigma;
  params["pi_a"] = a.pi_a;
  params["units"] = a.units;
  params["tie_weight"] = a.tie_weight;
  params["step"] = a.step > 0.0 ? a.step : default_step(effective);
  params["grid_points"] = model.grid_points;
  params["refine_factor"] = model.refine_factor;
  params["tie_tolerance"] = model.tie_tolerance;
  run.write_manifest(a.common.seed, params);
  out << "representation: outcome " << fmt(outcome) << ", sum " << fmt(r.sum()) << " -> " << run.dir() << '\n';
  return 0;
}

// -------------------------------------------------------------------- synth

struct SynthArgs {
  Common common;
  std::string mode = "mixed";
  std::size_t locales = 16;
  std::size_t per_locale = 64;
  double delta = 1.0;
  double sigma = 0.5;
  double pi_a = 0.5;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SynthConfig cfg;
  if (a.mode == "mixed") {
    cfg.mode = SynthMode::kMixed;
  } else if (a.mode == "segregated") {
    cfg.mode = SynthMode::kSegregated;
  } else {
    detail::throw_input("unknown mode '" + a.mode + "' (mixed, segregated)");
  }
  cfg.locales = a.locales;
  cfg.per_locale = a.per_locale;
  cfg.mixture = Mixture2::make(a.pi_a, 1.0 - a.pi_a, a.delta, -a.delta, a.sigma);
  cfg.seed = a.common.seed;
  const auto g = synth_geography(cfg);
  const auto dec = decompose(g.tree, g.units);

  RunOutput run(resolve_out_dir(a.common.out_dir), "synth");
  {
    auto f = run.open("units.csv");
    write_units(f, g.units);
  }
  {
    auto f = run.open("assignment.csv");
    write_assignment_csv(f, g.tree, g.units);
  }
  json summary;
  summary["units"] = g.units.size();
  summary["total"] = dec.total;
  summary["within_locale"] = dec.added[0];
  summary["between_locale"] = dec.added[1];
  summary["mixture_variance"] = cfg.mixture.variance();
  run.write_json("synth.json", summary);

  json params;
  params["mode"] = a.mode;
  params["locales"] = a.locales;
  params["per_locale"] = a.per_locale;
  params["delta"] = a.delta;
  params["sigma"] = a.sigma;
  params["pi_a"] = a.pi_a;
  run.write_manifest(a.common.seed, params);
  out << "synth: " << g.units.size() << " units in " << a.locales << " locales -> " << run.dir() << '\n';
  return 0;
}

}  // namespace

std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("MLPOLAR_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "out";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiscale polarization toolkit", "mlpolar"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  DecomposeArgs dec;
  auto* c_dec = app.add_subcommand("decompose", "Per-scale variance on k-d tree, random and assigned hierarchies");
  add_common(c_dec, dec.common);
  c_dec->add_option("--returns", dec.returns, "Returns CSV");
  c_dec->add_option("--config", dec.config, "Column mapping config for --returns");
  c_dec->add_option("--units", dec.units, "Unit table CSV (id,x,y,population,v0)");
  c_dec->add_flag("--lenient", dec.lenient, "Skip invalid rows instead of aborting");
  c_dec->add_flag("--two-party", dec.two_party, "Share = votes_a / (votes_a + votes_b)");
  c_dec->add_option("--depth", dec.depth, "Tree depth (0: largest with 2^depth <= units, at most 16)")
      ->capture_default_str();
  c_dec->add_option("--p", dec.p, "Winning share for p(1-p) normalization (0: weighted mean value)")
      ->capture_default_str();
  c_dec->add_flag("--bernoulli", dec.bernoulli, "Add within-unit binary-voter variance p(1-p) as its own scale");
  c_dec->add_flag("--unweighted", dec.unweighted, "Weight every unit equally");
  c_dec->add_option("--min-groups", dec.min_groups, "Fewest groups a scale needs to enter the slope fit")
      ->capture_default_str();

  StabilityArgs st;
  auto* c_st = app.add_subcommand("stability-sweep", "Sweep polarization J and locate the bifurcation");
  add_common(c_st, st.common);
  c_st->add_option("--sigma", st.sigma, "Mode width")->capture_default_str();
  c_st->add_option("--alienation", st.alienation, "Utility kernel width a")->capture_default_str();
  c_st->add_option("--j-min", st.j_min)->capture_default_str();
  c_st->add_option("--j-max", st.j_max)->capture_default_str();
  c_st->add_option("--steps", st.steps, "Intervals between j-min and j-max")->capture_default_str();
  c_st->add_option("--eps", st.inst.eps_hi, "Half-width of the mixture-weight perturbation")->capture_default_str();
  c_st->add_option("--initial-steps", st.inst.initial_steps)->capture_default_str();
  c_st->add_option("--max-halvings", st.inst.max_halvings)->capture_default_str();
  c_st->add_option("--onset-threshold", st.onset_threshold, "|outcome| / delta marking a nonzero outcome")
      ->capture_default_str();

  TiesArgs ti;
  auto* c_ti = app.add_subcommand("ties-sweep", "Polarization under fully connected and within-party ties");
  add_common(c_ti, ti.common);
  c_ti->add_option("--delta", ti.delta, "Modes at +delta and -delta")->capture_default_str();
  c_ti->add_option("--sigma", ti.sigma)->capture_default_str();
  c_ti->add_option("--alienation", ti.alienation)->capture_default_str();
  c_ti->add_option("--w-steps", ti.w_steps)->capture_default_str();
  c_ti->add_option("--state-weight", ti.state_weight, "State-scale tie weight in the two-state table")
      ->capture_default_str();

  AxesArgs ax;
  auto* c_ax = app.add_subcommand("axes", "Regional election axes, coupling sweep and sphere check");
  add_common(c_ax, ax.common);
  c_ax->add_option("--points", ax.points, "CSV with region, x0..x{d-1}, optional weight");
  c_ax->add_option("--regions", ax.regions, "Synthetic regions")->capture_default_str();
  c_ax->add_option("--per-region", ax.per_region)->capture_default_str();
  c_ax->add_option("--dim", ax.dim)->capture_default_str();
  c_ax->add_option("--spread", ax.spread_deg, "Spread of regional axis angles in degrees")->capture_default_str();
  c_ax->add_option("--separation", ax.separation)->capture_default_str();
  c_ax->add_option("--noise", ax.noise)->capture_default_str();
  c_ax->add_flag("--identical", ax.identical, "Give every synthetic region the same cloud");
  c_ax->add_option("--coupling-steps", ax.coupling_steps)->capture_default_str();
  c_ax->add_option("--restarts", ax.two_means.restarts)->capture_default_str();
  c_ax->add_option("--sphere-r", ax.sphere_r)->capture_default_str();
  c_ax->add_option("--sphere-dims", ax.sphere_dims)->delimiter(',')->capture_default_str();
  c_ax->add_option("--sphere-samples", ax.sphere_samples)->capture_default_str();

  RepArgs rep;
  auto* c_rep = app.add_subcommand("representation", "Per-voter representation by finite differences");
  add_common(c_rep, rep.common);
  c_rep->add_option("--election", rep.election, "mean, median or utility")->capture_default_str();
  c_rep->add_option("--alienation", rep.alienation)->capture_default_str();
  c_rep->add_option("--voters", rep.voters)->capture_default_str();
  c_rep->add_option("--delta", rep.delta)->capture_default_str();
  c_rep->add_option("--sigma", rep.sigma)->capture_default_str();
  c_rep->add_option("--pi-a", rep.pi_a)->capture_default_str();
  c_rep->add_option("--units", rep.units, "Unit table; values are positions, populations are weights");
  c_rep->add_option("--tie-weight", rep.tie_weight, "Uniform tie weight w")->capture_default_str();
  c_rep->add_option("--step", rep.step, "Finite-difference step (0: 1e-4 standard deviations)")
      ->capture_default_str();

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "Synthetic mixed or segregated geography");
  add_common(c_sy, sy.common);
  c_sy->add_option("--mode", sy.mode, "mixed or segregated")->capture_default_str();
  c_sy->add_option("--locales", sy.locales)->capture_default_str();
  c_sy->add_option("--per-locale", sy.per_locale)->capture_default_str();
  c_sy->add_option("--delta", sy.delta)->capture_default_str();
  c_sy->add_option("--sigma", sy.sigma)->capture_default_str();
  c_sy->add_option("--pi-a", sy.pi_a)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o;
    std::ostringstream e_out;
    const int code = app.exit(e, o, e_out);
    out << o.str();
    err << e_out.str();
    return code == 0 ? 0 : 1;
  }

  try {
    if (c_dec->parsed()) return cmd_decompose(dec, out);
    if (c_st->parsed()) return cmd_stability(st, out);
    if (c_ti->parsed()) return cmd_ties(ti, out);
    if (c_ax->parsed()) return cmd_axes(ax, out);
    if (c_rep->parsed()) return cmd_representation(rep, out);
    if (c_sy->parsed()) return cmd_synth(sy, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DegenerateError& e) {
    err << "degenerate: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace mlpolar::cli
