#include "tarc/scenario_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace tarc {
namespace {

using json = nlohmann::json;

// Object reader that remembers which keys were consumed, so leftovers can be
// reported as unknown.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ScenarioError(where(key) + ": " + msg);
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) fail(key, "expected a number");
    return v->get<double>();
  }

  int integer(const std::string& key, int fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(key, "expected an integer");
    return v->get<int>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(key, "expected a string");
    return v->get<std::string>();
  }

  // Number broadcast to n entries, or an array of exactly n numbers.
  Vec vector(const std::string& key, int n, const Vec& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (v->is_number()) return Vec::Constant(n, v->get<double>());
    return array(*v, key, n);
  }

  std::vector<double> list(const std::string& key,
                           const std::vector<double>& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : *v) {
      if (!x.is_number()) fail(key, "expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  // Number (times identity), array (diagonal) or array of rows.
  Mat matrix(const std::string& key, int n) {
    const json* v = find(key);
    if (!v) fail(key, "missing");
    if (v->is_number()) return v->get<double>() * Mat::Identity(n, n);
    if (!v->is_array() || v->size() != static_cast<std::size_t>(n))
      fail(key, "expected a number, a length-" + std::to_string(n) +
                    " diagonal or an " + std::to_string(n) + "x" +
                    std::to_string(n) + " array");
    if ((*v)[0].is_number()) return array(*v, key, n).asDiagonal();
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m.row(i) = array((*v)[i], key, n).transpose();
    return m;
  }

  Vec array(const json& v, const std::string& key, int n) const {
    if (!v.is_array() || v.size() != static_cast<std::size_t>(n))
      fail(key, "expected " + std::to_string(n) + " numbers");
    Vec out(n);
    for (int i = 0; i < n; ++i) {
      if (!v[i].is_number()) fail(key, "expected " + std::to_string(n) + " numbers");
      out(i) = v[i].get<double>();
    }
    return out;
  }

  Section child(const std::string& key) {
    const json* v = find(key);
    static const json empty = json::object();
    return Section(v ? *v : empty, where(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(it.key(), "unknown key");
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

PlantModel parse_plant(Section s) {
  PlantModel model;
  const std::string type = s.string("type", "two_link");
  if (type == "two_link") {
    TwoLink arm;
    arm.m1 = s.number("m1", arm.m1);
    arm.m2 = s.number("m2", arm.m2);
    arm.l1 = s.number("l1", arm.l1);
    arm.l2 = s.number("l2", arm.l2);
    arm.lc1 = s.number("lc1", arm.lc1);
    arm.lc2 = s.number("lc2", arm.lc2);
    arm.I1 = s.number("I1", arm.I1);
    arm.I2 = s.number("I2", arm.I2);
    arm.g = s.number("g", arm.g);
    const Vec f = s.vector("friction", 2, Vec::Zero(2));
    arm.friction1 = f(0);
    arm.friction2 = f(1);
    model.kind = arm;
  } else if (type == "double_integrator") {
    DoubleIntegrator di;
    di.dof = s.integer("dof", 1);
    if (di.dof < 1) s.fail("dof", "must be >= 1");
    di.mass = s.number("mass", 1.0);
    di.friction = s.vector("friction", di.dof, Vec::Zero(di.dof));
    model.kind = di;
  } else {
    s.fail("type", "unknown plant type '" + type +
                       "' (expected two_link or double_integrator)");
  }
  model.payload_scale = s.number("payload_scale", 1.0);
  s.finish();
  return model;
}

Quadrature parse_quadrature(Section& s) {
  const std::string q = s.string("quadrature", "exact_polynomial");
  if (q == "exact_polynomial") return Quadrature::ExactPolynomial;
  if (q == "trapezoid") return Quadrature::Trapezoid;
  s.fail("quadrature", "expected exact_polynomial or trapezoid");
}

void parse_gains(Section s, Scenario& sc) {
  const int n = sc.dof();
  GainSet& g = sc.gains;
  const bool explicit_k = s.has("K1") || s.has("K2");
  const bool design = s.has("omega_n") || s.has("zeta");
  if (explicit_k && design)
    s.fail("", "give either K1/K2 or omega_n/zeta, not both");
  if (explicit_k) {
    g.K1 = s.matrix("K1", n);
    g.K2 = s.matrix("K2", n);
  } else {
    const double wn = s.number("omega_n", 5.0);
    const double zeta = s.number("zeta", 1.0);
    if (!(wn > 0.0) || !(zeta > 0.0))
      s.fail("omega_n", "omega_n and zeta must be positive");
    const SuggestedGains k = suggest_gains(wn, zeta, n);
    g.K1 = k.K1;
    g.K2 = k.K2;
  }

  const json* mh = s.find("m_hat");
  if (!mh || mh->is_object()) {
    // κ M_nominal(q_c)
    const json empty = json::object();
    Section m(mh ? *mh : empty, s.where("m_hat"));
    const double scale = m.number("scale", 0.1);
    const Vec at = m.vector("at", n, Vec::Zero(n));
    m.finish();
    sc.nominal_plant.validate();
    g.M_hat = scale * mass_matrix(sc.nominal_plant, at);
  } else {
    // Same shapes as K1: scalar k I, diagonal, or full matrix.
    json wrapper = json::object();
    wrapper["m_hat"] = *mh;
    Section m(wrapper, s.where(""));
    g.M_hat = m.matrix("m_hat", n);
  }

  g.alpha = s.number("alpha", 1.0);
  g.epsilon = s.number("epsilon", 0.005);
  g.gamma = s.number("gamma", 0.1);
  g.c_up = s.number("c_up", 1000.0);
  g.c_down = s.number("c_down", 1000.0);
  g.c0 = s.number("c0", 6.0);
  sc.lyapunov_q = s.number("lyapunov_q", 50.0);
  s.finish();
}

void parse_controller(Section s, Scenario& sc) {
  sc.controller = controller_kind_from_string(s.string("type", "tarc"));
  Section a = s.child("asmc");
  sc.asmc.rho0 = a.number("rho0", 6.0);
  sc.asmc.rate = a.number("rate", 10.0);
  sc.asmc.delta = a.number("delta", 0.005);
  sc.asmc.floor = a.number("floor", 0.1);
  a.finish();
  s.finish();
}

ReferenceSpec parse_reference(Section s, int n) {
  ReferenceSpec ref = ReferenceSpec::zero(n);
  if (const json* joints = s.find("joints")) {
    if (!joints->is_array() || joints->size() != static_cast<std::size_t>(n))
      s.fail("joints", "expected one entry per joint (" + std::to_string(n) + ")");
    for (int i = 0; i < n; ++i) {
      Section js((*joints)[i], s.where("joints[" + std::to_string(i) + "]"));
      ref.joints[i].offset = js.number("offset", 0.0);
      if (const json* terms = js.find("terms")) {
        if (!terms->is_array()) js.fail("terms", "expected an array");
        for (std::size_t k = 0; k < terms->size(); ++k) {
          Section ts((*terms)[k], js.where("terms[" + std::to_string(k) + "]"));
          SinusoidTerm t;
          t.amplitude = ts.number("amplitude", 0.0);
          t.frequency = ts.number("frequency", 0.0);
          t.phase = ts.number("phase", 0.0);
          ts.finish();
          ref.joints[i].terms.push_back(t);
        }
      }
      js.finish();
    }
  }
  s.finish();
  return ref;
}

std::uint64_t parse_seed(Section& s, const std::string& key) {
  const json* v = s.find(key);
  if (!v) return 0;
  if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                  v->get<std::int64_t>() < 0))
    s.fail(key, "expected a nonnegative integer");
  return v->get<std::uint64_t>();
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

double EstimateDemoSpec::value(double t, int derivative) const {
  if (signal == Signal::Sine) {
    // d^k/dt^k sin(wt) = w^k sin(wt + kπ/2)
    const double w = frequency;
    return amplitude * std::pow(w, derivative) *
           std::sin(w * t + derivative * M_PI / 2.0);
  }
  double sum = 0.0;
  for (std::size_t p = static_cast<std::size_t>(derivative); p < coefficients.size(); ++p) {
    double c = coefficients[p];
    for (int k = 0; k < derivative; ++k) c *= static_cast<double>(p - k);
    sum += c * std::pow(t, static_cast<double>(p - derivative));
  }
  return sum;
}

ScenarioDocument parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, false);
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ScenarioError("line " + std::to_string(line) + ": " + e.what(), line);
  }

  ScenarioDocument doc;
  Scenario& sc = doc.scenario;
  Section top(root, "");
  top.string("description", "");

  if (!top.has("plant")) top.fail("plant", "missing");
  sc.plant = parse_plant(top.child("plant"));
  sc.plant.validate();
  const int n = sc.dof();

  if (top.has("nominal_plant")) {
    sc.nominal_plant = parse_plant(top.child("nominal_plant"));
  } else {
    sc.nominal_plant = sc.plant;
    sc.nominal_plant.payload_scale = 1.0;
  }
  if (sc.nominal_plant.dof() != n)
    top.fail("nominal_plant", "dof differs from plant");

  {
    Section s = top.child("sim");
    sc.h = s.number("h", 1e-3);
    sc.substeps = s.integer("substeps", 10);
    sc.duration = s.number("duration", 10.0);
    if (s.has("q0")) sc.q0 = s.vector("q0", n, Vec());
    if (s.has("dq0")) sc.dq0 = s.vector("dq0", n, Vec());
    doc.t_skip = s.number("t_skip", 0.0);
    doc.settle_band = s.number("settle_band", 1e-3);
    s.finish();
  }

  parse_controller(top.child("controller"), sc);
  parse_gains(top.child("gains"), sc);

  {
    Section s = top.child("estimator");
    sc.estimator.degree = s.integer("degree", 2);
    sc.estimator.window = s.number("window", 50.0 * sc.h);
    sc.estimator.sample_period = s.number("sample_period", sc.h);
    sc.estimator.quadrature = parse_quadrature(s);
    s.finish();
  }

  sc.reference = parse_reference(top.child("reference"), n);

  {
    Section s = top.child("disturbance");
    sc.disturbance.amplitude = s.vector("amplitude", n, Vec::Zero(n));
    sc.disturbance.frequency = s.vector("frequency", n, Vec::Zero(n));
    sc.disturbance.phase = s.vector("phase", n, Vec::Zero(n));
    sc.disturbance.bias = s.vector("bias", n, Vec::Zero(n));
    s.finish();
  }

  {
    Section s = top.child("noise");
    sc.noise.stddev = s.vector("stddev", n, Vec::Zero(n));
    sc.noise.seed = parse_seed(s, "seed");
    s.finish();
  }

  {
    Section s = top.child("analysis");
    Section m = s.child("mass_grid");
    doc.analysis.mass_grid.points = m.integer("points", doc.analysis.mass_grid.points);
    doc.analysis.mass_grid.lo = m.number("lo", doc.analysis.mass_grid.lo);
    doc.analysis.mass_grid.hi = m.number("hi", doc.analysis.mass_grid.hi);
    m.finish();
    if (doc.analysis.mass_grid.points < 1) s.fail("mass_grid.points", "must be >= 1");
    Section g = s.child("grid");
    ParameterGrid& pg = doc.analysis.grid;
    pg.beta = g.list("beta", pg.beta);
    pg.xi = g.list("xi", pg.xi);
    pg.d = g.list("d", pg.d);
    pg.l = g.list("l", pg.l);
    pg.q = g.list("q", pg.q);
    g.finish();
    s.finish();
  }

  {
    Section s = top.child("estimate_demo");
    EstimateDemoSpec& d = doc.estimate_demo;
    const std::string sig = s.string("signal", "sine");
    if (sig == "sine")
      d.signal = EstimateDemoSpec::Signal::Sine;
    else if (sig == "polynomial")
      d.signal = EstimateDemoSpec::Signal::Polynomial;
    else
      s.fail("signal", "expected sine or polynomial");
    d.amplitude = s.number("amplitude", d.amplitude);
    d.frequency = s.number("frequency", d.frequency);
    d.coefficients = s.list("coefficients", d.coefficients);
    d.noise_stddev = s.number("noise_stddev", d.noise_stddev);
    d.duration = s.number("duration", d.duration);
    d.order = s.integer("order", d.order);
    s.finish();
  }

  top.finish();
  return doc;
}

ScenarioDocument load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path.string() + ": " + e.what(), e.line());
  }
}

std::string trajectory_csv_header(int dof) {
  std::string h = "t";
  for (const char* name : {"qd", "q", "qmeas", "e", "tau"})
    for (int i = 1; i <= dof; ++i) h += std::string(",") + name + "_" + std::to_string(i);
  return h + ",c_hat,s_norm\n";
}

std::string trajectory_csv(const TrajectoryLog& log) {
  std::string out = trajectory_csv_header(log.dof);
  out.reserve(out.size() + log.rows.size() * (12 + 10 * log.dof) * 12);
  for (const LogRow& r : log.rows) {
    out += fmt(r.t);
    for (const Vec* v : {&r.qd, &r.q, &r.q_meas, &r.e1, &r.tau})
      for (Eigen::Index i = 0; i < v->size(); ++i) {
        out += ',';
        out += fmt((*v)(i));
      }
    out += ',';
    out += fmt(r.c_hat);
    out += ',';
    out += fmt(r.s_norm);
    out += '\n';
  }
  return out;
}

std::string metrics_text(const Metrics& m) {
  std::ostringstream o;
  o << "rms_e = " << fmt(m.rms_e) << "\n"
    << "max_e = " << fmt(m.max_e) << "\n"
    << "rms_tau = " << fmt(m.rms_tau) << "\n"
    << "c_hat_min = " << fmt(m.c_min) << "\n"
    << "c_hat_max = " << fmt(m.c_max) << "\n"
    << "c_hat_final = " << fmt(m.c_final) << "\n"
    << "settling_time = "
    << (m.settling_time ? fmt(*m.settling_time) : std::string("none")) << "\n"
    << "samples = " << m.samples << "\n";
  return o.str();
}

std::string metrics_json(const Metrics& m) {
  json j;
  j["rms_e"] = m.rms_e;
  j["max_e"] = m.max_e;
  j["rms_tau"] = m.rms_tau;
  j["c_hat_min"] = m.c_min;
  j["c_hat_max"] = m.c_max;
  j["c_hat_final"] = m.c_final;
  j["settling_time"] = m.settling_time ? json(*m.settling_time) : json(nullptr);
  j["samples"] = m.samples;
  return j.dump(2) + "\n";
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  // Unique per writer so parallel writers into one directory do not collide.
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  const fs::path tmp = path.string() + ".tmp" + std::to_string(rng() % 1000000007ULL);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot move " + tmp.string() + " to " +
                             path.string() + ": " + ec.message());
  }
}

}  // namespace tarc
