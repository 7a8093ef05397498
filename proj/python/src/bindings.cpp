#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mlpolar/axes.hpp"
#include "mlpolar/election.hpp"
#include "mlpolar/errors.hpp"
#include "mlpolar/geo_hierarchy.hpp"
#include "mlpolar/ingest.hpp"
#include "mlpolar/rep_tensor.hpp"
#include "mlpolar/scale_variance.hpp"
#include "mlpolar/social_ties.hpp"

namespace py = pybind11;
using namespace mlpolar;

namespace {

WeightedOpinions opinions(std::vector<double> positions, std::optional<std::vector<double>> weights) {
  return weights ? WeightedOpinions(std::move(positions), std::move(*weights)) : WeightedOpinions(std::move(positions));
}

OpinionCloud cloud(const Eigen::MatrixXd& points, std::optional<Eigen::VectorXd> weights) {
  return weights ? OpinionCloud(points, *weights) : OpinionCloud(points);
}

std::vector<ElectionAxis> axes_from(const std::vector<Eigen::VectorXd>& dirs) {
  std::vector<ElectionAxis> out;
  for (const auto& d : dirs) out.push_back(ElectionAxis::from(d, AxisSource::kCandidatePair));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multiscale polarization: variance decomposition, elections, ties, axes";

  static py::handle degenerate = py::exception<DegenerateError>(m, "DegenerateError", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const DegenerateError& e) {
      py::set_error(degenerate, e.what());
    }
  });

  py::class_<GeoUnit>(m, "GeoUnit")
      .def(py::init([](std::string id, double x, double y, double population, std::vector<double> value) {
             GeoUnit u{std::move(id), {x, y}, population, std::move(value)};
             validate_unit(u);
             return u;
           }),
           py::arg("id"), py::arg("x"), py::arg("y"), py::arg("population"), py::arg("value"))
      .def_readwrite("id", &GeoUnit::id)
      .def_readwrite("coords", &GeoUnit::coords)
      .def_readwrite("population", &GeoUnit::population)
      .def_readwrite("value", &GeoUnit::value);

  py::class_<RegionTree>(m, "RegionTree")
      .def(py::init<std::vector<std::vector<std::uint32_t>>, std::vector<std::vector<std::string>>>(),
           py::arg("levels"), py::arg("names") = std::vector<std::vector<std::string>>{})
      .def_property_readonly("num_levels", &RegionTree::num_levels)
      .def_property_readonly("num_units", &RegionTree::num_units)
      .def("region_count", &RegionTree::region_count)
      .def("level", [](const RegionTree& t, std::size_t k) {
        auto s = t.level(k);
        return std::vector<std::uint32_t>(s.begin(), s.end());
      })
      .def("with_unit_level", &RegionTree::with_unit_level)
      .def("__eq__", &RegionTree::operator==);

  m.def("build_kdtree_hierarchy",
        [](const std::vector<GeoUnit>& u, int depth) { return build_kdtree_hierarchy(u, depth); });
  m.def("build_random_hierarchy", [](const std::vector<GeoUnit>& u, int depth, std::uint64_t seed) {
    return build_random_hierarchy(u, depth, seed);
  });

  py::class_<ScaleDecomposition>(m, "ScaleDecomposition")
      .def_readonly("added", &ScaleDecomposition::added)
      .def_readonly("region_counts", &ScaleDecomposition::region_counts)
      .def_readonly("total", &ScaleDecomposition::total)
      .def_readonly("normalizer", &ScaleDecomposition::normalizer);

  m.def(
      "decompose",
      [](const RegionTree& t, const std::vector<GeoUnit>& u, bool population_weighted, bool bernoulli) {
        return decompose(t, u, {population_weighted, bernoulli});
      },
      py::arg("tree"), py::arg("units"), py::arg("population_weighted") = true, py::arg("bernoulli") = false);
  m.def("cumulative_within", &cumulative_within);
  m.def("cumulative_above", &cumulative_above);
  m.def("normalized", &normalized);
  m.def("group_size_slope", &group_size_slope, py::arg("dec"), py::arg("min_groups") = 8);

  py::class_<Mixture2>(m, "Mixture2")
      .def(py::init(&Mixture2::make), py::arg("pi_a"), py::arg("pi_b"), py::arg("mu_a"), py::arg("mu_b"),
           py::arg("sigma"))
      .def_static("symmetric", &Mixture2::symmetric, py::arg("delta"), py::arg("sigma"), py::arg("pi_a") = 0.5)
      .def_readonly("pi_a", &Mixture2::pi_a)
      .def_readonly("pi_b", &Mixture2::pi_b)
      .def_readonly("mu_a", &Mixture2::mu_a)
      .def_readonly("mu_b", &Mixture2::mu_b)
      .def_readonly("sigma", &Mixture2::sigma)
      .def("mean", &Mixture2::mean)
      .def("variance", &Mixture2::variance);

  py::enum_<ElectionKind>(m, "ElectionKind")
      .value("MEAN", ElectionKind::kMean)
      .value("MEDIAN", ElectionKind::kMedian)
      .value("UTILITY", ElectionKind::kUtilityArgmax);

  py::class_<ElectionModel>(m, "ElectionModel")
      .def_static("mean", &ElectionModel::mean)
      .def_static("median", &ElectionModel::median)
      .def_static("utility", &ElectionModel::utility, py::arg("alienation"))
      .def_readonly("kind", &ElectionModel::kind)
      .def_readonly("alienation", &ElectionModel::alienation);

  m.def(
      "elect",
      [](const ElectionModel& model, std::vector<double> x, std::optional<std::vector<double>> w) {
        return elect(model, opinions(std::move(x), std::move(w)));
      },
      py::arg("model"), py::arg("positions"), py::arg("weights") = py::none());
  m.def("elect_mixture", [](const ElectionModel& model, const Mixture2& f) { return elect(model, f); });
  m.def(
      "representation",
      [](const ElectionModel& model, std::vector<double> x, std::size_t i, std::optional<std::vector<double>> w,
         double h) { return representation(model, opinions(std::move(x), std::move(w)), i, h); },
      py::arg("model"), py::arg("positions"), py::arg("i"), py::arg("weights") = py::none(), py::arg("h") = 0.0);
  m.def("polarization_j", &polarization_j);

  py::class_<StabilityRow>(m, "StabilityRow")
      .def_readonly("j", &StabilityRow::j)
      .def_readonly("delta", &StabilityRow::delta)
      .def_readonly("outcome", &StabilityRow::outcome)
      .def_readonly("branch_low", &StabilityRow::branch_low)
      .def_readonly("branch_high", &StabilityRow::branch_high)
      .def_readonly("jump", &StabilityRow::jump)
      .def_readonly("unstable", &StabilityRow::unstable);
  m.def(
      "stability_sweep",
      [](double sigma, double a, double j_min, double j_max, std::size_t steps) {
        return stability_sweep(sigma, a, j_min, j_max, steps);
      },
      py::arg("sigma"), py::arg("alienation"), py::arg("j_min"), py::arg("j_max"), py::arg("steps"));
  m.def("bifurcation_onset", [](const std::vector<StabilityRow>& rows, double threshold) {
    return bifurcation_onset(rows, threshold);
  }, py::arg("rows"), py::arg("threshold") = 1e-3);

  m.def("j_fully_connected", &j_fully_connected);
  m.def("j_segregated", &j_segregated);
  m.def("transform_fully_connected", py::overload_cast<const Mixture2&, double>(&transform_fully_connected));
  m.def("transform_segregated", &transform_segregated);
  m.def("two_state_j", [](double delta, double sigma, double a, double w1, double w2) {
    const auto j = two_state_j(delta, sigma, a, w1, w2);
    return std::make_pair(j.identical_counties, j.sorted_counties);
  });

  m.def(
      "two_means_axis",
      [](const Eigen::MatrixXd& points, std::optional<Eigen::VectorXd> w, int restarts, std::uint64_t seed) {
        TwoMeansOptions o;
        o.restarts = restarts;
        o.seed = seed;
        const auto r = two_means_axis(cloud(points, std::move(w)), o);
        return py::make_tuple(r.axis.direction, r.labels, r.objective);
      },
      py::arg("points"), py::arg("weights") = py::none(), py::arg("restarts") = 16, py::arg("seed") = 0);
  m.def(
      "pca_axis",
      [](const Eigen::MatrixXd& points, std::optional<Eigen::VectorXd> w) {
        return pca_axis(cloud(points, std::move(w))).direction;
      },
      py::arg("points"), py::arg("weights") = py::none());
  m.def("angle_between", &angle_between);
  m.def("couple_axes", [](const Eigen::VectorXd& a, const Eigen::VectorXd& b, double wa, double wb) {
    const auto [x, y] = couple_axes(ElectionAxis::from(a, AxisSource::kCandidatePair),
                                    ElectionAxis::from(b, AxisSource::kCandidatePair), wa, wb);
    return std::make_pair(x.direction, y.direction);
  });
  m.def("circular_dispersion", [](const std::vector<Eigen::VectorXd>& dirs, const Eigen::VectorXd& ref) {
    return circular_dispersion(axes_from(dirs), ElectionAxis::from(ref, AxisSource::kCandidatePair));
  });
  m.def("sphere_axis_variance", &sphere_axis_variance);
  m.def("sample_sphere_axis_variances", &sample_sphere_axis_variances, py::arg("r"), py::arg("n"),
        py::arg("count"), py::arg("seed") = 1);

  m.def(
      "rep_tensor_mean",
      [](const Eigen::MatrixXd& points, Eigen::Index i, std::optional<Eigen::VectorXd> w) {
        return rep_tensor(mean_election, cloud(points, std::move(w)), i);
      },
      py::arg("points"), py::arg("i"), py::arg("weights") = py::none());

  m.def(
      "load_returns",
      [](const std::string& path, const std::string& config) {
        const ReturnsSchema schema = config.empty() ? ReturnsSchema{} : load_schema_config(config);
        return load_returns(path, schema).units;
      },
      py::arg("path"), py::arg("config") = "");
  m.def(
      "synth_geography",
      [](const std::string& mode, std::size_t locales, std::size_t per_locale, const Mixture2& mix,
         std::uint64_t seed) {
        SynthConfig c;
        if (mode == "mixed") {
          c.mode = SynthMode::kMixed;
        } else if (mode == "segregated") {
          c.mode = SynthMode::kSegregated;
        } else {
          throw InputError("mode must be 'mixed' or 'segregated'");
        }
        c.locales = locales;
        c.per_locale = per_locale;
        c.mixture = mix;
        c.seed = seed;
        auto g = synth_geography(c);
        return std::make_pair(std::move(g.units), std::move(g.tree));
      },
      py::arg("mode"), py::arg("locales"), py::arg("per_locale"), py::arg("mixture"), py::arg("seed") = 1);
}
