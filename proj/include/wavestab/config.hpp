#pragma once

// Experiment configuration: one JSON document with a section per module.
// Every section and key is optional and falls back to the defaults below;
// unknown keys are rejected with ConfigError.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wavestab/fields.hpp"
#include "wavestab/geometry.hpp"
#include "wavestab/stability.hpp"
#include "wavestab/wave.hpp"

namespace wavestab {

struct BumpConfig {
  Point center{0.5, 0.5};
  double radius = 0.15;
  double amplitude = 0.0;
};

struct GridConfig {
  Extents extents{0.0, 1.0, 0.0, 1.0};
  int n = 41;
  std::optional<Extents> k_box = Extents{0.3, 0.7, 0.3, 0.7};
  std::vector<Edge> gamma0;
};

struct GeometryConfig {
  Point x0{-0.5, -0.5};
  double k_scale = 1.2;
  std::optional<double> T;  ///< absolute horizon; otherwise T_factor * T0
  double T_factor = 1.2;
};

struct CoefficientConfig {
  double background = 1.0;
  std::vector<BumpConfig> bumps;
};

enum class InitialShape {
  sine,         ///< product of half sines vanishing on the boundary
  sine_cutoff,  ///< the same, multiplied by a C2 cutoff that vanishes on K
  zero,
};

struct DataConfig {
  InitialShape f = InitialShape::sine;
  double amplitude = 1.0;
  double cutoff_margin = 0.2;
};

struct SolverSectionConfig {
  double cfl_factor = 0.5;
  int record_stride = 1;
  double c0 = 2.0;
};

struct SimulateConfig {
  std::optional<double> horizon;  ///< defaults to the geometry horizon
  int trace_stride = 1;
};

struct StabilityConfig {
  std::vector<std::uint64_t> seeds;  ///< default 1..20
  int bump_count = 1;
  double bump_radius = 0.08;
  std::vector<double> amplitudes{0.05};
  std::vector<double> T_factors{0.6, 0.8, 1.0, 1.2, 1.4};
  std::vector<double> taus{0.0, 1.0, 2.0, 5.0};
  double r0 = 0.5;
  Formulation formulation = Formulation::coefficient;
};

struct ReconConfig {
  std::vector<Point> centers{{0.5, 0.5}};
  double radius = 0.12;
  std::vector<double> truth{0.1};
  std::vector<double> init{0.0};
  double lambda = 0.0;
  int max_iter = 200;
  double lower = -0.5;
  double upper = 0.5;
  double gradient_step = 1e-4;
};

struct PatConfig {
  std::vector<Point> centers{{0.5, 0.5}};
  double radius = 0.15;
  std::vector<double> truth{0.2};  ///< coefficients of D = c^2 over the bumps
  Extents p0_inner{0.25, 0.75, 0.25, 0.75};
  Extents p0_outer{0.05, 0.95, 0.05, 0.95};
  double p0_amplitude = 1.0;
  double r0 = 0.5;
};

struct OutputConfig {
  std::optional<std::string> directory;
  bool csv = true;
  bool raw = false;
};

struct ExperimentConfig {
  GridConfig grid;
  GeometryConfig geometry;
  CoefficientConfig coefficient;
  DataConfig data;
  SolverSectionConfig solver;
  SimulateConfig simulate;
  StabilityConfig stability;
  ReconConfig recon;
  PatConfig pat;
  OutputConfig output;
};

/// Throws ConfigError on unknown keys, wrong types or out-of-range values.
ExperimentConfig parse_config(const nlohmann::json& document);
/// Reads and parses a file; a JSON syntax error is a ConfigError.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Derived objects shared by every command.
struct Scenario {
  GridPtr grid;
  ScalarField D1;
  ScalarField d;
  ScalarField f;
  double T0 = 0.0;
  double T = 0.0;
  double c0 = 2.0;
  SolverConfig solver;  ///< cfl and stride; horizon and bound are set per run
};

Scenario make_scenario(const ExperimentConfig& config);

/// Grid for the config's grid section (n may be overridden).
GridPtr make_grid(const GridConfig& grid, std::optional<int> n = std::nullopt);
ScalarField make_coefficient(GridPtr grid, const CoefficientConfig& config);
ScalarField make_initial(GridPtr grid, const DataConfig& config, const std::optional<Extents>& k_box);
/// 1 on `inner`, 0 outside `outer`, quintic smoothstep across the gap per axis.
ScalarField plateau(GridPtr grid, const Extents& inner, const Extents& outer);

std::vector<PerturbationSpec> perturbation_specs(const ExperimentConfig& config);

}  // namespace wavestab
