#include "tarc/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "tarc/scenario_io.hpp"
#include "tarc/stability.hpp"

namespace tarc {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string scenario;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

fs::path output_dir(const Options& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("TARC_OUT_DIR"); env && *env) return env;
  return "tarc_out";
}

ScenarioDocument load(const Options& o) {
  ScenarioDocument doc = load_scenario(o.scenario);
  if (o.seed) doc.scenario.noise.seed = *o.seed;
  return doc;
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

struct Outcome {
  ControllerKind kind;
  std::optional<Metrics> metrics;
  TrajectoryLog log;
  std::string error;  // set on divergence
};

Outcome simulate(Scenario sc, ControllerKind kind, const ScenarioDocument& doc) {
  sc.controller = kind;
  Outcome o{kind, std::nullopt, {}, {}};
  try {
    o.log = run(sc);
    o.metrics = metrics(o.log, doc.t_skip, doc.settle_band);
  } catch (const SimulationDiverged& e) {
    o.log = e.partial();
    o.error = e.what();
  }
  return o;
}

int cmd_run(const Options& opt, std::ostream& out, std::ostream& err) {
  const ScenarioDocument doc = load(opt);
  doc.scenario.validate();
  const fs::path dir = output_dir(opt);
  const Outcome o = simulate(doc.scenario, doc.scenario.controller, doc);
  write_file_atomic(dir / "trajectory.csv", trajectory_csv(o.log));
  if (!o.metrics) {
    err << "error: " << o.error << " (partial trajectory: "
        << (dir / "trajectory.csv").string() << ", " << o.log.rows.size()
        << " rows)\n";
    return kExitDiverged;
  }
  write_file_atomic(dir / "metrics.txt", metrics_text(*o.metrics));
  write_file_atomic(dir / "metrics.json", metrics_json(*o.metrics));
  if (!opt.quiet) {
    out << "controller = " << to_string(o.kind) << "\n"
        << "seed = " << doc.scenario.noise.seed << "\n"
        << metrics_text(*o.metrics) << "wrote " << dir.string() << "\n";
  }
  return kExitOk;
}

int cmd_compare(const Options& opt, std::ostream& out, std::ostream& err) {
  const ScenarioDocument doc = load(opt);
  doc.scenario.validate();
  const fs::path dir = output_dir(opt);
  const ControllerKind kinds[] = {ControllerKind::TDC, ControllerKind::TARC,
                                  ControllerKind::ASMC};
  std::vector<std::future<Outcome>> jobs;
  for (ControllerKind k : kinds)
    jobs.push_back(std::async(std::launch::async, simulate, doc.scenario, k,
                              std::cref(doc)));

  std::ostringstream table;
  table << "controller,seed,status,rms_e,max_e,rms_tau,c_hat_min,c_hat_max,"
           "c_hat_final,settling_time,samples\n";
  table << std::setprecision(17);
  bool diverged = false;
  for (auto& job : jobs) {
    const Outcome o = job.get();
    const std::string name = to_string(o.kind);
    write_file_atomic(dir / ("trajectory_" + name + ".csv"), trajectory_csv(o.log));
    table << name << "," << doc.scenario.noise.seed << ",";
    if (!o.metrics) {
      diverged = true;
      err << "error: " << name << ": " << o.error << "\n";
      table << "diverged,,,,,,,,\n";
      continue;
    }
    const Metrics& m = *o.metrics;
    table << "ok," << m.rms_e << "," << m.max_e << "," << m.rms_tau << ","
          << m.c_min << "," << m.c_max << "," << m.c_final << ",";
    if (m.settling_time) table << *m.settling_time;
    table << "," << m.samples << "\n";
  }
  write_file_atomic(dir / "compare.csv", table.str());
  if (!opt.quiet) out << table.str() << "wrote " << dir.string() << "\n";
  return diverged ? kExitDiverged : kExitOk;
}

void print_certificate(std::ostream& out, const char* label,
                       const StabilityCertificate& c) {
  const AnalysisParams& p = c.params;
  out << label << ": min eigenvalue " << num(c.min_eigenvalue) << " at beta="
      << num(p.beta) << " xi=" << num(p.xi) << " D=" << num(p.D(0, 0))
      << "I L=" << num(p.L(0, 0)) << "I Q=" << num(p.Q(0, 0)) << "I -> "
      << (c.pass ? "PASS" : "FAIL") << "\n";
}

int cmd_certify(const Options& opt, std::ostream& out, std::ostream&) {
  const ScenarioDocument doc = load(opt);
  const Scenario& sc = doc.scenario;
  sc.gains.validate();
  require(sc.h > 0.0, "controller period h must be positive");
  bool ok = true;

  const MassGridSpec& mg = doc.analysis.mass_grid;
  const auto grid = joint_grid(sc.dof(), mg.points, mg.lo, mg.hi);
  const MassCondition mc = mass_condition_margin(sc.plant, sc.gains.M_hat, grid);
  ok &= mc.pass;
  out << "Lemma 1 mass condition: max ||M(q)^-1 M_hat - I|| = "
      << num(mc.margin) << " over " << grid.size() << " points -> "
      << (mc.pass ? "PASS" : "FAIL") << "\n";

  const ErrorSystem es = build_error_system(sc.gains.K1, sc.gains.K2);
  out << "error system: spectral abscissa " << num(es.spectral_abscissa)
      << (es.hurwitz ? " (Hurwitz)" : " (not Hurwitz)") << "\n";
  if (!es.hurwitz) {
    out << "result: FAIL\n";
    return kExitCertify;
  }

  const Mat P = solve_lyapunov(
      es.A, sc.lyapunov_q * Mat::Identity(2 * es.dof, 2 * es.dof));
  const PartitionCheck pc = p_partition_check(P);
  ok &= pc.pass;
  out << "P partition: min eigenvalue of sym(P3 P2^T) " << num(pc.min_eigenvalue)
      << " -> " << (pc.pass ? "PASS" : "FAIL") << "\n";

  const SearchResult r =
      search_parameters(sc.gains.K1, sc.gains.K2, sc.h, sc.estimator.window,
                        sc.estimator.degree, doc.analysis.grid);
  out << "h = " << num(sc.h) << " s, window = " << num(sc.estimator.window)
      << " s, degree = " << sc.estimator.degree << "\n";
  if (r.theorem1) print_certificate(out, "Theorem 1 (Psi)", *r.theorem1);
  else out << "Theorem 1 (Psi): no passing grid point\n";
  if (r.theorem2) print_certificate(out, "Theorem 2 (Theta)", *r.theorem2);
  else out << "Theorem 2 (Theta): best min eigenvalue "
           << num(r.best_theorem2_eigenvalue) << " -> FAIL\n";
  out << "search: " << r.report << "\n";
  ok &= r.found;
  out << "result: " << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitCertify;
}

int cmd_estimate_demo(const Options& opt, std::ostream& out, std::ostream&) {
  const ScenarioDocument doc = load(opt);
  const EstimateDemoSpec& demo = doc.estimate_demo;
  EstimatorConfig cfg = doc.scenario.estimator;
  require(demo.order >= 0 && demo.order <= 2, "estimate_demo.order must be 0, 1 or 2");
  cfg.validate(demo.order);
  require(demo.duration > 0.0, "estimate_demo.duration must be positive");
  require(demo.noise_stddev >= 0.0, "estimate_demo.noise_stddev must be >= 0");
  const double h = cfg.sample_period;
  const auto last = static_cast<std::int64_t>(std::llround(demo.duration / h));
  const int taps = cfg.taps();
  require(last + 1 >= taps, "estimate_demo.duration is shorter than the window");

  const DerivativeEstimator est(cfg, demo.order);
  PositionHistory hist(est.history_capacity(), h);
  NoiseSpec noise{Vec::Constant(1, demo.noise_stddev), doc.scenario.noise.seed};
  Rng rng(noise.seed);

  std::ostringstream csv;
  csv << std::setprecision(17) << "t,true,estimate,backward_difference\n";
  double se_est = 0.0, se_bd = 0.0;
  std::size_t rows = 0;
  for (std::int64_t k = 0; k <= last; ++k) {
    const double t = static_cast<double>(k) * h;
    hist.push(t, sample_measurement(Vec::Constant(1, demo.value(t, 0)), noise, rng));
    if (!est.warm(hist)) continue;
    const double truth = demo.value(t, demo.order);
    const double e = est.estimate(hist, demo.order)(0);
    const double b = backward_difference(hist, demo.order)(0);
    csv << t << "," << truth << "," << e << "," << b << "\n";
    se_est += (e - truth) * (e - truth);
    se_bd += (b - truth) * (b - truth);
    ++rows;
  }
  const fs::path dir = output_dir(opt);
  write_file_atomic(dir / "estimate.csv", csv.str());
  if (!opt.quiet) {
    out << "order = " << demo.order << "\n"
        << "rows = " << rows << "\n"
        << "rms_error_estimator = " << num(std::sqrt(se_est / rows)) << "\n"
        << "rms_error_backward_difference = " << num(std::sqrt(se_bd / rows))
        << "\n"
        << "wrote " << (dir / "estimate.csv").string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Simulate and certify time-delayed adaptive robust control"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;

  using Handler = int (*)(const Options&, std::ostream&, std::ostream&);
  std::vector<std::pair<CLI::App*, Handler>> commands;
  auto add = [&](const char* name, const char* help, Handler fn, bool writes) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("scenario", opt.scenario, "scenario JSON file")->required();
    if (writes) sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--seed", seed, "override noise.seed");
    sub->add_flag("--quiet,-q", opt.quiet, "print nothing on success");
    commands.emplace_back(sub, fn);
  };
  add("run", "simulate one controller, write trajectory.csv and metrics", cmd_run, true);
  add("compare", "run tdc, tarc and asmc on the same seed, write compare.csv",
      cmd_compare, true);
  add("certify", "check Lemma 1, the P partition and Theorems 1-2", cmd_certify,
      false);
  add("estimate-demo", "algebraic differentiator vs backward difference on a test signal",
      cmd_estimate_demo, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (auto& [sub, fn] : commands) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) opt.seed = seed;
    try {
      return fn(opt, out, err);
    } catch (const UsageError& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const LyapunovError& e) {
      err << "error: " << e.what() << "\n";
      return kExitCertify;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  return kExitUsage;
}

}  // namespace tarc
