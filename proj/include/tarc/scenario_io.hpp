#pragma once

#include <filesystem>
#include <string>

#include "tarc/simulation.hpp"
#include "tarc/stability.hpp"

namespace tarc {

/// Malformed or inconsistent scenario document. `line` is 0 when the error
/// is about a key rather than a syntax position.
class ScenarioError : public UsageError {
public:
  ScenarioError(const std::string& what, std::size_t line = 0)
      : UsageError(what), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

struct MassGridSpec {
  int points = 21;  // per joint
  double lo = -3.14159265358979323846;
  double hi = 3.14159265358979323846;
};

/// Settings used only by `certify`.
struct AnalysisSpec {
  MassGridSpec mass_grid;
  ParameterGrid grid = ParameterGrid::defaults();
};

/// Settings used only by `estimate-demo`: a scalar test signal sampled at h.
struct EstimateDemoSpec {
  enum class Signal { Sine, Polynomial };
  Signal signal = Signal::Sine;
  double amplitude = 1.0;  // sine
  double frequency = 1.0;  // rad/s
  std::vector<double> coefficients{0.0, 1.0};  // polynomial, ascending powers
  double noise_stddev = 1e-3;
  double duration = 10.0;
  int order = 1;

  double value(double t, int derivative) const;
};

struct ScenarioDocument {
  Scenario scenario;
  double t_skip = 0.0;
  double settle_band = 1e-3;
  AnalysisSpec analysis;
  EstimateDemoSpec estimate_demo;
};

/// Strict parse: unknown keys and wrong types are rejected with the key path;
/// syntax errors carry a 1-based line number. Semantic validation of the
/// simulation is left to Scenario::validate.
ScenarioDocument parse_scenario(const std::string& text);
ScenarioDocument load_scenario(const std::filesystem::path& path);

std::string trajectory_csv_header(int dof);
std::string trajectory_csv(const TrajectoryLog& log);

/// Flat `key = value` lines.
std::string metrics_text(const Metrics& m);
/// One JSON object.
std::string metrics_json(const Metrics& m);

/// Writes through a temporary file in the same directory and renames it
/// into place.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

}  // namespace tarc
