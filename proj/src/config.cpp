#include "wavestab/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "wavestab/errors.hpp"

namespace wavestab {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& node, std::string name, std::initializer_list<const char*> keys) : node_(node), name_(std::move(name)) {
    if (!node_.is_object()) throw ConfigError(fmt::format("section '{}' must be an object", name_));
    for (const auto& item : node_.items()) {
      const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; });
      if (!known) throw ConfigError(fmt::format("unknown key '{}' in section '{}'", item.key(), name_));
    }
  }

  bool has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }
  const json& at(const char* key) const { return node_.at(key); }
  std::string where(const char* key) const { return fmt::format("{}.{}", name_, key); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    return as_number(at(key), where(key));
  }
  int integer(const char* key, int fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
    return v.get<int>();
  }
  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!at(key).is_string()) throw ConfigError(where(key) + " must be a string");
    return at(key).get<std::string>();
  }
  std::vector<double> numbers(const char* key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError(where(key) + " must be an array");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(as_number(e, where(key)));
    return out;
  }
  Point point(const char* key, Point fallback) const {
    if (!has(key)) return fallback;
    return as_point(at(key), where(key));
  }
  std::vector<Point> points(const char* key, std::vector<Point> fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError(where(key) + " must be an array of points");
    std::vector<Point> out;
    for (const auto& e : v) out.push_back(as_point(e, where(key)));
    return out;
  }
  Extents extents(const char* key, Extents fallback) const {
    if (!has(key)) return fallback;
    return as_extents(at(key), where(key));
  }

  static double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + " must be finite");
    return x;
  }
  static Point as_point(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2) throw ConfigError(where + " must be a pair [x, y]");
    return {as_number(v[0], where), as_number(v[1], where)};
  }
  static Extents as_extents(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 4) throw ConfigError(where + " must be [x_min, x_max, y_min, y_max]");
    Extents e{as_number(v[0], where), as_number(v[1], where), as_number(v[2], where), as_number(v[3], where)};
    if (!(e.x_min < e.x_max && e.y_min < e.y_max)) throw ConfigError(where + " must have min < max on both axes");
    return e;
  }

 private:
  const json& node_;
  std::string name_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

const json kEmpty = json::object();

const json& section_node(const json& doc, const char* name) {
  if (!doc.contains(name) || doc.at(name).is_null()) return kEmpty;
  return doc.at(name);
}

GridConfig parse_grid(const json& node) {
  const Section s(node, "grid", {"extents", "n", "h", "k_box", "gamma0"});
  GridConfig g;
  g.extents = s.extents("extents", g.extents);
  require(!(s.has("n") && s.has("h")), "grid: give either n or h, not both");
  if (s.has("h")) {
    const double h = s.number("h", 0.0);
    require(h > 0.0, "grid.h must be positive");
    const double cells = g.extents.width() / h;
    const double rounded = std::round(cells);
    require(rounded >= 2.0 && std::abs(cells - rounded) <= 1e-9 * cells, "grid.h must divide the x extent");
    g.n = static_cast<int>(rounded) + 1;
  } else {
    g.n = s.integer("n", g.n);
  }
  require(g.n >= 3, "grid.n must be at least 3");
  if (node.contains("k_box")) {
    g.k_box = node.at("k_box").is_null() ? std::nullopt : std::optional<Extents>(s.extents("k_box", {}));
  }
  if (s.has("gamma0")) {
    const json& v = s.at("gamma0");
    require(v.is_array(), "grid.gamma0 must be an array of edge names");
    for (const auto& e : v) {
      require(e.is_string(), "grid.gamma0 entries must be strings");
      const auto edge = edge_from_string(e.get<std::string>());
      require(edge.has_value(), "grid.gamma0: unknown edge '" + e.get<std::string>() + "'");
      require(std::find(g.gamma0.begin(), g.gamma0.end(), *edge) == g.gamma0.end(), "grid.gamma0: duplicate edge");
      g.gamma0.push_back(*edge);
    }
  }
  return g;
}

GeometryConfig parse_geometry(const json& node, const GridConfig& grid) {
  const Section s(node, "geometry", {"x0", "k_scale", "T", "T_factor"});
  GeometryConfig g;
  g.x0 = s.point("x0", g.x0);
  g.k_scale = s.number("k_scale", g.k_scale);
  if (s.has("T")) g.T = s.number("T", 0.0);
  g.T_factor = s.number("T_factor", g.T_factor);
  require(g.k_scale > 1.0, "geometry.k_scale must exceed 1");
  require(!grid.extents.contains(g.x0), "geometry.x0 must lie outside the closed domain");
  require(!g.T || *g.T > 0.0, "geometry.T must be positive");
  require(g.T_factor > 0.0, "geometry.T_factor must be positive");
  return g;
}

BumpConfig parse_bump(const json& node, const std::string& where) {
  const Section s(node, where, {"center", "radius", "amplitude"});
  BumpConfig b;
  b.center = s.point("center", b.center);
  b.radius = s.number("radius", b.radius);
  b.amplitude = s.number("amplitude", b.amplitude);
  require(b.radius > 0.0, where + ".radius must be positive");
  return b;
}

CoefficientConfig parse_coefficient(const json& node) {
  const Section s(node, "coefficient", {"background", "bumps"});
  CoefficientConfig c;
  c.background = s.number("background", c.background);
  require(c.background > 0.0, "coefficient.background must be positive");
  if (s.has("bumps")) {
    const json& v = s.at("bumps");
    require(v.is_array(), "coefficient.bumps must be an array");
    c.bumps.clear();
    for (std::size_t i = 0; i < v.size(); ++i) c.bumps.push_back(parse_bump(v[i], fmt::format("coefficient.bumps[{}]", i)));
  }
  return c;
}

DataConfig parse_data(const json& node) {
  const Section s(node, "data", {"f", "amplitude", "cutoff_margin"});
  DataConfig d;
  const std::string shape = s.text("f", "sine");
  if (shape == "sine") {
    d.f = InitialShape::sine;
  } else if (shape == "sine_cutoff") {
    d.f = InitialShape::sine_cutoff;
  } else if (shape == "zero") {
    d.f = InitialShape::zero;
  } else {
    throw ConfigError("data.f must be one of sine, sine_cutoff, zero");
  }
  d.amplitude = s.number("amplitude", d.amplitude);
  d.cutoff_margin = s.number("cutoff_margin", d.cutoff_margin);
  require(d.cutoff_margin > 0.0, "data.cutoff_margin must be positive");
  return d;
}

SolverSectionConfig parse_solver(const json& node) {
  const Section s(node, "solver", {"cfl_factor", "record_stride", "c0"});
  SolverSectionConfig c;
  c.cfl_factor = s.number("cfl_factor", c.cfl_factor);
  c.record_stride = s.integer("record_stride", c.record_stride);
  c.c0 = s.number("c0", c.c0);
  require(c.cfl_factor > 0.0 && c.cfl_factor < 1.0, "solver.cfl_factor must lie in (0, 1)");
  require(c.record_stride >= 1, "solver.record_stride must be at least 1");
  require(c.c0 > 1.0, "solver.c0 must exceed 1");
  return c;
}

SimulateConfig parse_simulate(const json& node) {
  const Section s(node, "simulate", {"horizon", "trace_stride"});
  SimulateConfig c;
  if (s.has("horizon")) c.horizon = s.number("horizon", 0.0);
  c.trace_stride = s.integer("trace_stride", c.trace_stride);
  require(!c.horizon || *c.horizon > 0.0, "simulate.horizon must be positive");
  require(c.trace_stride >= 1, "simulate.trace_stride must be at least 1");
  return c;
}

StabilityConfig parse_stability(const json& node) {
  const Section s(node, "stability",
                  {"seeds", "bump_count", "bump_radius", "amplitudes", "T_factors", "taus", "r0", "formulation"});
  StabilityConfig c;
  if (s.has("seeds")) {
    const json& v = s.at("seeds");
    require(v.is_array(), "stability.seeds must be an array");
    for (const auto& e : v) {
      require(e.is_number_unsigned() || (e.is_number_integer() && e.get<long long>() >= 0),
              "stability.seeds must be nonnegative integers");
      c.seeds.push_back(e.get<std::uint64_t>());
    }
  } else {
    for (std::uint64_t i = 1; i <= 20; ++i) c.seeds.push_back(i);
  }
  c.bump_count = s.integer("bump_count", c.bump_count);
  c.bump_radius = s.number("bump_radius", c.bump_radius);
  c.amplitudes = s.numbers("amplitudes", c.amplitudes);
  c.T_factors = s.numbers("T_factors", c.T_factors);
  c.taus = s.numbers("taus", c.taus);
  c.r0 = s.number("r0", c.r0);
  const std::string form = s.text("formulation", "coefficient");
  if (form == "coefficient") {
    c.formulation = Formulation::coefficient;
  } else if (form == "source") {
    c.formulation = Formulation::source;
  } else {
    throw ConfigError("stability.formulation must be coefficient or source");
  }
  require(c.bump_count >= 1, "stability.bump_count must be at least 1");
  require(c.bump_radius > 0.0, "stability.bump_radius must be positive");
  require(c.r0 >= 0.0, "stability.r0 must be nonnegative");
  for (double t : c.T_factors) require(t > 0.0, "stability.T_factors must be positive");
  for (double t : c.taus) require(t >= 0.0, "stability.taus must be nonnegative");
  return c;
}

ReconConfig parse_recon(const json& node) {
  const Section s(node, "recon",
                  {"centers", "radius", "truth", "init", "lambda", "max_iter", "bounds", "gradient_step"});
  ReconConfig c;
  c.centers = s.points("centers", c.centers);
  c.radius = s.number("radius", c.radius);
  c.truth = s.numbers("truth", std::vector<double>(c.centers.size(), c.truth.front()));
  c.init = s.numbers("init", std::vector<double>(c.centers.size(), 0.0));
  c.lambda = s.number("lambda", c.lambda);
  c.max_iter = s.integer("max_iter", c.max_iter);
  if (s.has("bounds")) {
    const auto b = s.numbers("bounds", {});
    require(b.size() == 2, "recon.bounds must be [lower, upper]");
    c.lower = b[0];
    c.upper = b[1];
  }
  c.gradient_step = s.number("gradient_step", c.gradient_step);
  require(!c.centers.empty(), "recon.centers must not be empty");
  require(c.truth.size() == c.centers.size() && c.init.size() == c.centers.size(),
          "recon.truth and recon.init need one entry per center");
  require(c.radius > 0.0, "recon.radius must be positive");
  require(c.lambda >= 0.0, "recon.lambda must be nonnegative");
  require(c.max_iter >= 0, "recon.max_iter must be nonnegative");
  require(c.lower < c.upper, "recon.bounds must satisfy lower < upper");
  require(c.gradient_step > 0.0, "recon.gradient_step must be positive");
  return c;
}

PatConfig parse_pat(const json& node) {
  const Section s(node, "pat", {"centers", "radius", "truth", "p0_inner", "p0_outer", "p0_amplitude", "r0"});
  PatConfig c;
  c.centers = s.points("centers", c.centers);
  c.radius = s.number("radius", c.radius);
  c.truth = s.numbers("truth", std::vector<double>(c.centers.size(), c.truth.front()));
  c.p0_inner = s.extents("p0_inner", c.p0_inner);
  c.p0_outer = s.extents("p0_outer", c.p0_outer);
  c.p0_amplitude = s.number("p0_amplitude", c.p0_amplitude);
  c.r0 = s.number("r0", c.r0);
  require(!c.centers.empty() && c.truth.size() == c.centers.size(), "pat.truth needs one entry per center");
  require(c.radius > 0.0, "pat.radius must be positive");
  require(c.p0_outer.x_min < c.p0_inner.x_min && c.p0_inner.x_max < c.p0_outer.x_max &&
              c.p0_outer.y_min < c.p0_inner.y_min && c.p0_inner.y_max < c.p0_outer.y_max,
          "pat.p0_inner must lie strictly inside pat.p0_outer");
  require(c.r0 >= 0.0, "pat.r0 must be nonnegative");
  return c;
}

OutputConfig parse_output(const json& node) {
  const Section s(node, "output", {"directory", "formats"});
  OutputConfig c;
  if (s.has("directory")) c.directory = s.text("directory", "");
  if (s.has("formats")) {
    const json& v = s.at("formats");
    require(v.is_array(), "output.formats must be an array");
    c.csv = false;
    for (const auto& e : v) {
      require(e.is_string(), "output.formats entries must be strings");
      const std::string f = e.get<std::string>();
      if (f == "csv") {
        c.csv = true;
      } else if (f == "raw") {
        c.raw = true;
      } else {
        throw ConfigError("output.formats entries must be csv or raw");
      }
    }
  }
  return c;
}

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

/// 1 on [lo_in, hi_in], 0 outside [lo_out, hi_out].
double axis_plateau(double x, double lo_out, double lo_in, double hi_in, double hi_out) {
  if (x <= lo_out || x >= hi_out) return 0.0;
  if (x < lo_in) return smoothstep((x - lo_out) / (lo_in - lo_out));
  if (x > hi_in) return smoothstep((hi_out - x) / (hi_out - hi_in));
  return 1.0;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  const Section top(doc, "config",
                    {"grid", "geometry", "coefficient", "data", "solver", "simulate", "stability", "recon", "pat",
                     "output"});
  ExperimentConfig c;
  c.grid = parse_grid(section_node(doc, "grid"));
  c.geometry = parse_geometry(section_node(doc, "geometry"), c.grid);
  c.coefficient = parse_coefficient(section_node(doc, "coefficient"));
  c.data = parse_data(section_node(doc, "data"));
  c.solver = parse_solver(section_node(doc, "solver"));
  c.simulate = parse_simulate(section_node(doc, "simulate"));
  c.stability = parse_stability(section_node(doc, "stability"));
  c.recon = parse_recon(section_node(doc, "recon"));
  c.pat = parse_pat(section_node(doc, "pat"));
  c.output = parse_output(section_node(doc, "output"));
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  json doc;
  try {
    doc = json::parse(text.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr);
  std::string out;
  for (unsigned int i = 0; i < length; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

GridPtr make_grid(const GridConfig& grid, std::optional<int> n) {
  try {
    return build_grid(grid.extents, n.value_or(grid.n), grid.k_box, grid.gamma0);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
}

ScalarField make_coefficient(GridPtr grid, const CoefficientConfig& config) {
  ScalarField D(grid, config.background);
  for (const auto& b : config.bumps) {
    const ScalarField bump = bump_field(grid, b.center, b.radius);
    for (std::size_t n = 0; n < D.size(); ++n) D[n] += b.amplitude * bump[n];
  }
  return D;
}

ScalarField plateau(GridPtr grid, const Extents& inner, const Extents& outer) {
  return ScalarField::from_function(std::move(grid), [&](double x, double y) {
    return axis_plateau(x, outer.x_min, inner.x_min, inner.x_max, outer.x_max) *
           axis_plateau(y, outer.y_min, inner.y_min, inner.y_max, outer.y_max);
  });
}

ScalarField make_initial(GridPtr grid, const DataConfig& config, const std::optional<Extents>& k_box) {
  const Extents e = grid->extents;
  ScalarField f = ScalarField::from_function(grid, [&](double x, double y) {
    return config.amplitude * std::sin(std::numbers::pi * (x - e.x_min) / e.width()) *
           std::sin(std::numbers::pi * (y - e.y_min) / e.height());
  });
  // Exact zeros on the boundary keep the data compatible.
  for (int node : grid->boundary_nodes()) f[static_cast<std::size_t>(node)] = 0.0;
  if (config.f == InitialShape::zero) return ScalarField(grid);
  if (config.f == InitialShape::sine) return f;
  require(k_box.has_value(), "data.f = sine_cutoff needs grid.k_box");
  const double m = config.cutoff_margin;
  const Extents outer{k_box->x_min - m, k_box->x_max + m, k_box->y_min - m, k_box->y_max + m};
  const ScalarField chi = plateau(grid, *k_box, outer);
  for (std::size_t n = 0; n < f.size(); ++n) f[n] *= 1.0 - chi[n];
  return f;
}

Scenario make_scenario(const ExperimentConfig& config) {
  Scenario s;
  s.grid = make_grid(config.grid);
  s.D1 = make_coefficient(s.grid, config.coefficient);
  s.d = build_quadratic_d(s.grid, config.geometry.x0, config.geometry.k_scale);
  s.f = make_initial(s.grid, config.data, config.grid.k_box);
  s.T0 = compute_T0(s.d);
  s.T = config.geometry.T.value_or(config.geometry.T_factor * s.T0);
  s.c0 = config.solver.c0;
  s.solver.cfl_factor = config.solver.cfl_factor;
  s.solver.record_stride = config.solver.record_stride;
  s.solver.horizon = s.T;
  const double lo = 1.0 / s.c0;
  for (std::size_t n = 0; n < s.D1.size(); ++n) {
    require(s.D1[n] >= lo && s.D1[n] <= s.c0, "coefficient leaves the admissible range [1/c0, c0]");
  }
  return s;
}

std::vector<PerturbationSpec> perturbation_specs(const ExperimentConfig& config) {
  std::vector<PerturbationSpec> specs;
  require(config.grid.k_box.has_value() || config.stability.seeds.empty() || config.stability.amplitudes.empty(),
          "stability experiments need grid.k_box");
  for (double a : config.stability.amplitudes) {
    for (std::uint64_t seed : config.stability.seeds) {
      PerturbationSpec p;
      p.seed = seed;
      p.amplitude = a;
      p.bump_count = config.stability.bump_count;
      p.bump_radius = config.stability.bump_radius;
      p.region = *config.grid.k_box;
      specs.push_back(p);
    }
  }
  return specs;
}

}  // namespace wavestab
