#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "popagg/aggregation.hpp"
#include "popagg/cli.hpp"
#include "popagg/domain.hpp"
#include "popagg/error.hpp"
#include "popagg/experiments.hpp"
#include "popagg/gauss_field.hpp"
#include "popagg/latent_inference.hpp"
#include "popagg/response_survey.hpp"
#include "popagg/scoring.hpp"
#include "popagg/weights_mse.hpp"

namespace py = pybind11;
using namespace popagg;

namespace {

py::dict quantity_dict(const AreaQuantity& q, const ArealPartition& partition) {
  py::dict d;
  d["level"] = std::string(level_name(q.level));
  d["area"] = partition.area_name(q.level, q.area);
  d["quantity"] = std::string(quantity_name(q.quantity));
  d["value"] = q.value;
  d["defined"] = q.defined;
  return d;
}

py::dict observation_dict(const ClusterObservation& o) {
  py::dict d;
  d["x"] = o.location.x;
  d["y_km"] = o.location.y;
  d["urban"] = o.urban;
  d["admin1"] = o.admin1;
  d["n"] = o.n;
  d["y"] = o.y;
  return d;
}

ClusterObservation observation_from(const py::dict& d) {
  ClusterObservation o;
  o.location = {d["x"].cast<double>(), d["y_km"].cast<double>()};
  o.urban = d["urban"].cast<bool>();
  o.n = d["n"].cast<int>();
  o.y = d["y"].cast<int>();
  if (d.contains("admin1")) o.admin1 = d["admin1"].cast<int>();
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spatial aggregation of prevalence, risk and burden";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  py::enum_<NuggetMode>(m, "NuggetMode")
      .value("LATENT", NuggetMode::Latent)
      .value("INTEGRATED", NuggetMode::Integrated);

  py::class_<FieldParams>(m, "FieldParams")
      .def(py::init([](double sigma2_s, double range_km, double smoothness) {
             return FieldParams{sigma2_s, range_km, smoothness};
           }),
           py::arg("sigma2_s") = 1.0 / 9.0, py::arg("range_km") = 400.0, py::arg("smoothness") = 1.0)
      .def_readwrite("sigma2_s", &FieldParams::sigma2_s)
      .def_readwrite("range_km", &FieldParams::range_km)
      .def_readwrite("smoothness", &FieldParams::smoothness);

  py::class_<ResponseParams>(m, "ResponseParams")
      .def(py::init([](double beta0, double beta_urb, FieldParams field, double sigma2_eps) {
             ResponseParams p{beta0, beta_urb, field, sigma2_eps};
             p.validate();
             return p;
           }),
           py::arg("beta0") = -2.9, py::arg("beta_urb") = -1.0, py::arg("field") = FieldParams{},
           py::arg("sigma2_eps") = 0.4)
      .def_readwrite("beta0", &ResponseParams::beta0)
      .def_readwrite("beta_urb", &ResponseParams::beta_urb)
      .def_readwrite("field", &ResponseParams::field)
      .def_readwrite("sigma2_eps", &ResponseParams::sigma2_eps);

  py::class_<FitOptions>(m, "FitOptions")
      .def(py::init<>())
      .def_readwrite("nugget", &FitOptions::nugget)
      .def_readwrite("nugget_quad_order", &FitOptions::nugget_quad_order)
      .def_readwrite("prior_var_intercept", &FitOptions::prior_var_intercept)
      .def_readwrite("prior_var_urban", &FitOptions::prior_var_urban)
      .def_readwrite("urban_covariate", &FitOptions::urban_covariate)
      .def_readwrite("tolerance", &FitOptions::tolerance)
      .def_readwrite("max_iterations", &FitOptions::max_iterations);

  m.def("matern_correlation", [](double d, const FieldParams& p) { return matern_correlation(d, p); },
        py::arg("distance_km"), py::arg("field"));
  m.def("smooth_risk", &smooth_risk_point, py::arg("eta"), py::arg("sigma2_eps"), py::arg("quad_order") = 25);
  m.def(
      "gauss_hermite",
      [](int order) {
        const GaussHermite gh(order);
        return py::make_tuple(gh.nodes(), gh.weights());
      },
      py::arg("order"));

  m.def("crps_ensemble", &crps_ensemble, py::arg("draws"), py::arg("y"));
  m.def("interval_score", &interval_score, py::arg("lower"), py::arg("upper"), py::arg("y"), py::arg("alpha"));
  m.def("fuzzy_coverage", &fuzzy_coverage, py::arg("draws"), py::arg("y"), py::arg("level"));
  m.def("quantile", &quantile, py::arg("draws"), py::arg("p"));
  m.def("ci_width", &ci_width, py::arg("draws"), py::arg("level"));

  py::class_<TwoRegionSpec>(m, "TwoRegionSpec")
      .def(py::init([](double mu1, double mu2, double q1, double q2, double qhat1, double qhat2, double sigma2) {
             TwoRegionSpec s{mu1, mu2, q1, q2, qhat1, qhat2, sigma2};
             s.validate();
             return s;
           }),
           py::arg("mu1"), py::arg("mu2"), py::arg("q1"), py::arg("q2"), py::arg("qhat1"), py::arg("qhat2"),
           py::arg("sigma2"))
      .def_readwrite("mu1", &TwoRegionSpec::mu1)
      .def_readwrite("mu2", &TwoRegionSpec::mu2)
      .def_readwrite("q1", &TwoRegionSpec::q1)
      .def_readwrite("q2", &TwoRegionSpec::q2)
      .def_readwrite("qhat1", &TwoRegionSpec::qhat1)
      .def_readwrite("qhat2", &TwoRegionSpec::qhat2)
      .def_readwrite("sigma2", &TwoRegionSpec::sigma2);
  m.def(
      "analytic_mse",
      [](const TwoRegionSpec& s) {
        const auto t = analytic_mse(s);
        return py::dict(py::arg("bias") = t.bias, py::arg("variance") = t.variance, py::arg("mse") = t.mse);
      },
      py::arg("spec"));
  m.def("normalized_mse", &normalized_mse, py::arg("spec"));
  m.def(
      "mc_mse",
      [](const TwoRegionSpec& s, long n_sims, std::uint64_t seed) {
        const auto e = mc_mse(s, n_sims, seed);
        return py::dict(py::arg("mse") = e.mse, py::arg("se") = e.se, py::arg("n_sims") = e.n_sims);
      },
      py::arg("spec"), py::arg("n_sims") = 100000, py::arg("seed") = 1);

  py::class_<Domain>(m, "Domain")
      .def_property_readonly("n_cells", [](const Domain& d) { return d.fine.cells.size(); })
      .def_property_readonly("admin1", [](const Domain& d) {
        std::vector<std::string> out;
        for (const auto& a : d.partition.admin1()) out.push_back(a.name);
        return out;
      })
      .def_property_readonly("admin2", [](const Domain& d) {
        std::vector<std::string> out;
        for (const auto& a : d.partition.admin2()) out.push_back(a.name);
        return out;
      })
      .def_readonly("rural_fraction", &Domain::rural_fraction);
  m.def(
      "desk_domain",
      [](double extent_km, std::uint64_t seed) {
        DeskDomainOptions o;
        o.extent_km = extent_km;
        o.seed = seed;
        return make_desk_domain(o);
      },
      py::arg("extent_km") = 100.0, py::arg("seed") = 1);

  m.def(
      "simulate",
      [](const Domain& domain, const ResponseParams& params, std::uint64_t seed, double r_pop, double lattice_km) {
        const TruthSimulator field(domain, params.field, lattice_km);
        const auto t = simulate_truth(domain, default_gridres_design().frame(r_pop), params, field, seed);
        const auto obs = draw_survey(t.frame, default_gridres_design().survey(), rng::child(seed, 2));
        py::list truth, survey;
        for (const auto& q : t.truth) truth.append(quantity_dict(q, domain.partition));
        for (const auto& o : obs) survey.append(observation_dict(o));
        return py::dict(py::arg("n_eas") = t.frame.eas.size(), py::arg("truth") = truth,
                        py::arg("survey") = survey);
      },
      py::arg("domain"), py::arg("params") = ResponseParams{-2.9, -1.0, FieldParams{}, 0.4}, py::arg("seed") = 1,
      py::arg("r_pop") = 1.0, py::arg("lattice_km") = 2.5,
      "Draws a population on the default grid-test design and one survey of it.");

  py::class_<LatentPosterior>(m, "LatentPosterior")
      .def("mode", &LatentPosterior::mode)
      .def("covariance", &LatentPosterior::covariance)
      .def_property_readonly("iterations", &LatentPosterior::iterations)
      .def(
          "sample_eta",
          [](const LatentPosterior& post, const std::vector<std::tuple<double, double, bool>>& points, int n_draws,
             std::uint64_t seed) {
            std::vector<PredictionPoint> pts;
            for (const auto& [x, y, urban] : points) pts.push_back({{x, y}, urban});
            return Eigen::MatrixXd(sample_eta(post, pts, n_draws, seed));
          },
          py::arg("points"), py::arg("n_draws"), py::arg("seed") = 1);
  m.def(
      "laplace_fit",
      [](const std::vector<py::dict>& observations, const ResponseParams& params, const FitOptions& options) {
        std::vector<ClusterObservation> obs;
        for (const auto& d : observations) obs.push_back(observation_from(d));
        return laplace_fit(obs, params, options);
      },
      py::arg("observations"), py::arg("params"), py::arg("options") = FitOptions{});

  m.def(
      "aggregate",
      [](const Domain& domain, const std::vector<py::dict>& observations, const ResponseParams& params,
         double resolution, int n_draws, std::uint64_t seed, int threads) {
        std::vector<ClusterObservation> obs;
        for (const auto& d : observations) obs.push_back(observation_from(d));
        const auto post = laplace_fit(obs, params, {});
        const Grid grid =
            ensure_area_representation(aggregation_grid(domain.fine, resolution), domain.partition, domain.fine);
        const auto ens = predictive_ensemble(post, grid, domain.partition, default_gridres_design().frame(),
                                             {kAllModels, kAllModels + 4}, params, n_draws, seed, {25, threads});
        py::list out;
        for (const auto& e : ens.ensembles) {
          py::dict d;
          d["level"] = std::string(level_name(e.level));
          d["area"] = domain.partition.area_name(e.level, e.area);
          d["quantity"] = std::string(quantity_name(e.quantity));
          d["model"] = std::string(model_name(e.model));
          d["draws"] = e.defined_draws();
          out.append(d);
        }
        return out;
      },
      py::arg("domain"), py::arg("observations"), py::arg("params"), py::arg("resolution") = 5.0,
      py::arg("n_draws") = 1000, py::arg("seed") = 1, py::arg("threads") = 1,
      "Fits the response model and returns predictive ensembles for every model, area and quantity.");

  m.def(
      "grid_resolution_test",
      [](const Domain& domain, int n_replicates, int n_draws, std::vector<double> resolutions, std::uint64_t seed,
         int threads) {
        GridResConfig c;
        c.n_replicates = n_replicates;
        c.n_draws = n_draws;
        c.resolutions = std::move(resolutions);
        c.seed = seed;
        c.threads = threads;
        py::gil_scoped_release release;
        const auto r = run_grid_resolution_test(c, domain);
        py::gil_scoped_acquire acquire;
        py::list rows;
        for (const auto& row : r.rows)
          rows.append(py::dict(py::arg("model") = std::string(model_name(row.model)),
                               py::arg("resolution") = row.resolution, py::arg("metric") = row.metric,
                               py::arg("value") = row.value));
        return rows;
      },
      py::arg("domain"), py::arg("n_replicates") = 100, py::arg("n_draws") = 1000,
      py::arg("resolutions") = std::vector<double>{0.5, 2.5, 12.5, 62.5}, py::arg("seed") = 1,
      py::arg("threads") = 1);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"popagg"};
        full.insert(full.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : full) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line tool in-process; returns (exit code, stdout, stderr).");
}
