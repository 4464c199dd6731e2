#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tarc/scenario_io.hpp"
#include "tarc/simulation.hpp"
#include "tarc/stability.hpp"

namespace py = pybind11;
using namespace tarc;

namespace {

ScenarioDocument parse(const std::string& text, std::optional<std::string> controller,
                       std::optional<std::uint64_t> seed) {
  ScenarioDocument doc = parse_scenario(text);
  if (controller) doc.scenario.controller = controller_kind_from_string(*controller);
  if (seed) doc.scenario.noise.seed = *seed;
  return doc;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["rms_e"] = m.rms_e;
  d["max_e"] = m.max_e;
  d["rms_tau"] = m.rms_tau;
  d["c_hat_min"] = m.c_min;
  d["c_hat_max"] = m.c_max;
  d["c_hat_final"] = m.c_final;
  d["settling_time"] = m.settling_time ? py::cast(*m.settling_time) : py::none();
  d["samples"] = m.samples;
  return d;
}

Mat stack(const TrajectoryLog& log, Vec LogRow::*field) {
  Mat out(static_cast<Eigen::Index>(log.rows.size()), log.dof);
  for (std::size_t i = 0; i < log.rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = (log.rows[i].*field).transpose();
  return out;
}

py::dict certificate_dict(const StabilityCertificate& c) {
  py::dict d;
  d["which"] = c.which == Certificate::Theorem1 ? "theorem1" : "theorem2";
  d["matrix"] = c.matrix;
  d["min_eigenvalue"] = c.min_eigenvalue;
  d["passed"] = c.pass;
  d["cholesky_ok"] = c.cholesky_ok;
  d["beta"] = c.params.beta;
  d["xi"] = c.params.xi;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "TARC simulation and certification core";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  m.def("kernel", &kernel, py::arg("order"), py::arg("degree"), py::arg("window"),
        py::arg("psi"));
  m.def("omega1_sq_integral", &omega1_sq_integral, py::arg("degree"), py::arg("window"));

  m.def(
      "quadrature_weights",
      [](int degree, double window, double sample_period, int order, bool exact) {
        EstimatorConfig cfg;
        cfg.degree = degree;
        cfg.window = window;
        cfg.sample_period = sample_period;
        cfg.quadrature = exact ? Quadrature::ExactPolynomial : Quadrature::Trapezoid;
        return quadrature_weights(cfg, order);
      },
      py::arg("degree"), py::arg("window"), py::arg("sample_period"), py::arg("order"),
      py::arg("exact") = true);

  m.def(
      "estimate",
      [](const Mat& samples, double sample_period, int degree, double window, int order) {
        // rows are samples, oldest first
        EstimatorConfig cfg;
        cfg.degree = degree;
        cfg.window = window;
        cfg.sample_period = sample_period;
        const DerivativeEstimator est(cfg, order);
        PositionHistory hist(est.history_capacity(), sample_period);
        require(samples.rows() > 0, "samples must not be empty");
        for (Eigen::Index k = 0; k < samples.rows(); ++k)
          hist.push(static_cast<double>(k) * sample_period, samples.row(k).transpose());
        return est.estimate(hist, order);
      },
      py::arg("samples"), py::arg("sample_period"), py::arg("degree"), py::arg("window"),
      py::arg("order"));

  m.def("solve_lyapunov", &solve_lyapunov, py::arg("A"), py::arg("Q"));
  m.def(
      "error_system",
      [](const Mat& K1, const Mat& K2) {
        const ErrorSystem es = build_error_system(K1, K2);
        py::dict d;
        d["A1"] = es.A1;
        d["B1"] = es.B1;
        d["A"] = es.A;
        d["B"] = es.B;
        d["hurwitz"] = es.hurwitz;
        return d;
      },
      py::arg("K1"), py::arg("K2"));
  m.def(
      "suggest_gains",
      [](double wn, double zeta, int dof) {
        const SuggestedGains g = suggest_gains(wn, zeta, dof);
        return py::make_tuple(g.K1, g.K2);
      },
      py::arg("omega_n"), py::arg("zeta"), py::arg("dof"));
  m.def(
      "theorem1_certificate",
      [](const Mat& K1, const Mat& K2, double h, double beta, double xi, double d,
         double l, double q) {
        return certificate_dict(theorem1_certificate(
            K1, K2, h, AnalysisParams::scaled(static_cast<int>(K1.rows()), beta, xi, d, l, q)));
      },
      py::arg("K1"), py::arg("K2"), py::arg("h"), py::arg("beta") = 1.0, py::arg("xi") = 2.0,
      py::arg("d") = 1.0, py::arg("l") = 1.0, py::arg("q") = 1.0);
  m.def(
      "theorem2_certificate",
      [](const Mat& K1, const Mat& K2, double h, double window, int degree, double beta,
         double xi, double d, double l, double q) {
        return certificate_dict(theorem2_certificate(
            K1, K2, h, window, degree,
            AnalysisParams::scaled(static_cast<int>(K1.rows()), beta, xi, d, l, q)));
      },
      py::arg("K1"), py::arg("K2"), py::arg("h"), py::arg("window"), py::arg("degree"),
      py::arg("beta") = 1.0, py::arg("xi") = 2.0, py::arg("d") = 1.0, py::arg("l") = 1.0,
      py::arg("q") = 1.0);

  m.def(
      "mass_matrix",
      [](const std::string& scenario, const Vec& q) {
        return mass_matrix(parse_scenario(scenario).scenario.plant, q);
      },
      py::arg("scenario"), py::arg("q"));

  m.def(
      "simulate",
      [](const std::string& scenario, std::optional<std::string> controller,
         std::optional<std::uint64_t> seed) {
        const ScenarioDocument doc = parse(scenario, controller, seed);
        TrajectoryLog log;
        {
          py::gil_scoped_release release;
          log = run(doc.scenario);
        }
        py::dict d;
        Vec t(static_cast<Eigen::Index>(log.rows.size())), c(t.size()), s(t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) {
          t(i) = log.rows[i].t;
          c(i) = log.rows[i].c_hat;
          s(i) = log.rows[i].s_norm;
        }
        d["t"] = t;
        d["qd"] = stack(log, &LogRow::qd);
        d["q"] = stack(log, &LogRow::q);
        d["q_meas"] = stack(log, &LogRow::q_meas);
        d["e"] = stack(log, &LogRow::e1);
        d["tau"] = stack(log, &LogRow::tau);
        d["c_hat"] = c;
        d["s_norm"] = s;
        d["metrics"] = metrics_dict(metrics(log, doc.t_skip, doc.settle_band));
        d["csv"] = trajectory_csv(log);
        return d;
      },
      py::arg("scenario"), py::arg("controller") = py::none(), py::arg("seed") = py::none());
}
