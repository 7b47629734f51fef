#include "wavestab/fields.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "wavestab/errors.hpp"

namespace wavestab {

std::optional<Edge> edge_from_string(const std::string& name) {
  if (name == "left") return Edge::left;
  if (name == "right") return Edge::right;
  if (name == "bottom") return Edge::bottom;
  if (name == "top") return Edge::top;
  return std::nullopt;
}

std::string to_string(Edge edge) {
  switch (edge) {
    case Edge::left: return "left";
    case Edge::right: return "right";
    case Edge::bottom: return "bottom";
    case Edge::top: return "top";
  }
  return "unknown";
}

std::vector<int> Grid::boundary_nodes() const {
  std::vector<int> nodes;
  nodes.reserve(static_cast<std::size_t>(2 * (nx + ny) - 4));
  for (int i = 0; i < nx; ++i) nodes.push_back(index(i, 0));
  for (int j = 1; j < ny; ++j) nodes.push_back(index(nx - 1, j));
  for (int i = nx - 2; i >= 0; --i) nodes.push_back(index(i, ny - 1));
  for (int j = ny - 2; j >= 1; --j) nodes.push_back(index(0, j));
  return nodes;
}

int Grid::loop_position(int node) const {
  const int i = column(node);
  const int j = row(node);
  if (j == 0) return i;
  if (i == nx - 1) return (nx - 1) + j;
  if (j == ny - 1) return (nx - 1) + (ny - 1) + (nx - 1 - i);
  if (i == 0) return 2 * (nx - 1) + (ny - 1) + (ny - 1 - j);
  return -1;
}

Point Grid::outward_normal(int node) const {
  const int i = column(node);
  const int j = row(node);
  double nx_out = 0.0;
  double ny_out = 0.0;
  if (i == 0) nx_out = -1.0;
  if (i == nx - 1) nx_out = 1.0;
  if (j == 0) ny_out = -1.0;
  if (j == ny - 1) ny_out = 1.0;
  const double len = std::hypot(nx_out, ny_out);
  if (len == 0.0) return {0.0, 0.0};
  return {nx_out / len, ny_out / len};
}

GridPtr build_grid(const Extents& extents, int n, const std::optional<Extents>& k_box,
                   const std::vector<Edge>& gamma0_edges) {
  ensure(n >= 3, "grid needs at least 3 nodes per axis");
  ensure(extents.width() > 0.0 && extents.height() > 0.0, "grid extents must have positive size");

  auto grid = std::make_shared<Grid>();
  grid->extents = extents;
  grid->nx = n;
  grid->h = extents.width() / (n - 1);
  const double cells_y = extents.height() / grid->h;
  const double rounded = std::round(cells_y);
  ensure(std::abs(cells_y - rounded) <= 1e-9 * std::max(1.0, rounded),
         "y extent is not an integer multiple of the spacing");
  grid->ny = static_cast<int>(rounded) + 1;
  ensure(grid->ny >= 3, "grid needs at least 3 nodes per axis");
  grid->omega_mask.assign(grid->size(), 1);

  grid->k_mask.assign(grid->size(), 0);
  if (k_box) {
    const double h = grid->h;
    ensure(k_box->width() >= 0.0 && k_box->height() >= 0.0, "k_box is inverted");
    const double eps = 1e-9 * h;
    const bool inside = k_box->x_min >= extents.x_min + 2.0 * h - eps &&
                        k_box->x_max <= extents.x_max - 2.0 * h + eps &&
                        k_box->y_min >= extents.y_min + 2.0 * h - eps &&
                        k_box->y_max <= extents.y_max - 2.0 * h + eps;
    ensure(inside, "k_box must keep a margin of at least 2h from the boundary");
    int count = 0;
    for (int j = 0; j < grid->ny; ++j) {
      for (int i = 0; i < grid->nx; ++i) {
        if (k_box->contains({grid->x(i), grid->y(j)}, eps)) {
          grid->k_mask[static_cast<std::size_t>(grid->index(i, j))] = 1;
          ++count;
        }
      }
    }
    ensure(count > 0, "k_box contains no grid nodes");
  }

  for (std::size_t a = 0; a < gamma0_edges.size(); ++a) {
    for (std::size_t b = a + 1; b < gamma0_edges.size(); ++b) {
      ensure(gamma0_edges[a] != gamma0_edges[b],
             "gamma0 spec lists edge '" + to_string(gamma0_edges[a]) + "' twice");
    }
  }
  auto unobserved = [&](Edge e) {
    return std::find(gamma0_edges.begin(), gamma0_edges.end(), e) != gamma0_edges.end();
  };
  for (int node : grid->boundary_nodes()) {
    const int i = grid->column(node);
    const int j = grid->row(node);
    bool all_unobserved = true;
    if (i == 0) all_unobserved = all_unobserved && unobserved(Edge::left);
    if (i == grid->nx - 1) all_unobserved = all_unobserved && unobserved(Edge::right);
    if (j == 0) all_unobserved = all_unobserved && unobserved(Edge::bottom);
    if (j == grid->ny - 1) all_unobserved = all_unobserved && unobserved(Edge::top);
    (all_unobserved ? grid->gamma0 : grid->gamma1).push_back(node);
  }
  return grid;
}

ScalarField::ScalarField(GridPtr grid, double value)
    : grid_(std::move(grid)), values_(grid_->size(), value) {}

ScalarField::ScalarField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  ensure(values_.size() == grid_->size(), "field value count does not match grid");
}

ScalarField ScalarField::from_function(GridPtr grid, const std::function<double(double, double)>& fn) {
  ScalarField field(grid);
  for (int j = 0; j < grid->ny; ++j) {
    for (int i = 0; i < grid->nx; ++i) field(i, j) = fn(grid->x(i), grid->y(j));
  }
  return field;
}

double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  ensure(other.size() == size(), "field size mismatch");
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] += other.values_[n];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  ensure(other.size() == size(), "field size mismatch");
  for (std::size_t n = 0; n < values_.size(); ++n) values_[n] -= other.values_[n];
  return *this;
}

ScalarField& ScalarField::operator*=(double a) {
  for (double& v : values_) v *= a;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double a, ScalarField f) { return f *= a; }

ScalarField hadamard(const ScalarField& a, const ScalarField& b) {
  ensure(a.size() == b.size(), "field size mismatch");
  ScalarField out(a.grid_ptr());
  for (std::size_t n = 0; n < a.size(); ++n) out[n] = a[n] * b[n];
  return out;
}

namespace {

// First derivative along one axis at position p of a line with `count` samples
// spaced `stride` apart in `u`.
inline double first_difference(const double* u, int p, int count, int stride, double h) {
  if (p > 0 && p < count - 1) return (u[stride] - u[-stride]) / (2.0 * h);
  if (p == 0) return (-3.0 * u[0] + 4.0 * u[stride] - u[2 * stride]) / (2.0 * h);
  return (3.0 * u[0] - 4.0 * u[-stride] + u[-2 * stride]) / (2.0 * h);
}

inline double second_difference(const double* u, int p, int count, int stride, double h2) {
  if (p > 0 && p < count - 1) return (u[stride] - 2.0 * u[0] + u[-stride]) / h2;
  const int s = (p == 0) ? stride : -stride;
  if (count >= 4) return (2.0 * u[0] - 5.0 * u[s] + 4.0 * u[2 * s] - u[3 * s]) / h2;
  return (u[0] - 2.0 * u[s] + u[2 * s]) / h2;
}

}  // namespace

Gradient gradient(const ScalarField& field) {
  const Grid& g = field.grid();
  Gradient out{ScalarField(field.grid_ptr()), ScalarField(field.grid_ptr())};
  const double* u = field.values().data();
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int n = g.index(i, j);
      out.dx[n] = first_difference(u + n, i, g.nx, 1, g.h);
      out.dy[n] = first_difference(u + n, j, g.ny, g.nx, g.h);
    }
  }
  return out;
}

ScalarField laplacian(const ScalarField& field) {
  const Grid& g = field.grid();
  ScalarField out(field.grid_ptr());
  const double* u = field.values().data();
  const double h2 = g.h * g.h;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int n = g.index(i, j);
      out[n] = second_difference(u + n, i, g.nx, 1, h2) + second_difference(u + n, j, g.ny, g.nx, h2);
    }
  }
  return out;
}

Gradient gradient_fourth_order(const ScalarField& field) {
  const Grid& g = field.grid();
  Gradient out = gradient(field);
  const double* u = field.values().data();
  for (int j = 2; j < g.ny - 2; ++j) {
    for (int i = 2; i < g.nx - 2; ++i) {
      const int n = g.index(i, j);
      const double* c = u + n;
      out.dx[n] = (-c[2] + 8.0 * c[1] - 8.0 * c[-1] + c[-2]) / (12.0 * g.h);
      const int s = g.nx;
      out.dy[n] = (-c[2 * s] + 8.0 * c[s] - 8.0 * c[-s] + c[-2 * s]) / (12.0 * g.h);
    }
  }
  return out;
}

ScalarField laplacian_fourth_order(const ScalarField& field) {
  const Grid& g = field.grid();
  ScalarField out = laplacian(field);
  const double* u = field.values().data();
  const double h2 = g.h * g.h;
  for (int j = 2; j < g.ny - 2; ++j) {
    for (int i = 2; i < g.nx - 2; ++i) {
      const int n = g.index(i, j);
      const double* c = u + n;
      const int s = g.nx;
      const double dxx = (-c[2] + 16.0 * c[1] - 30.0 * c[0] + 16.0 * c[-1] - c[-2]) / (12.0 * h2);
      const double dyy = (-c[2 * s] + 16.0 * c[s] - 30.0 * c[0] + 16.0 * c[-s] - c[-2 * s]) / (12.0 * h2);
      out[n] = dxx + dyy;
    }
  }
  return out;
}

double normal_derivative(const Grid& grid, std::span<const double> values, int node) {
  const int i = grid.column(node);
  const int j = grid.row(node);
  const double* u = values.data() + node;
  const double h = grid.h;
  // Outward derivative along one axis with inward neighbour offset s.
  auto outward = [&](int s) { return (3.0 * u[0] - 4.0 * u[s] + u[2 * s]) / (2.0 * h); };
  double sum = 0.0;
  int axes = 0;
  if (i == 0) { sum += outward(1); ++axes; }
  if (i == grid.nx - 1) { sum += outward(-1); ++axes; }
  if (j == 0) { sum += outward(grid.nx); ++axes; }
  if (j == grid.ny - 1) { sum += outward(-grid.nx); ++axes; }
  ensure(axes > 0, "normal derivative requested at an interior node");
  return axes == 1 ? sum : sum / std::sqrt(2.0);
}

Mask full_mask(const Grid& grid) { return Mask(grid.size(), 1); }

std::vector<double> quadrature_weights(const Grid& grid, const Mask& region) {
  ensure(region.size() == grid.size(), "region mask does not match grid");
  std::vector<double> w(grid.size(), 0.0);
  auto in = [&](int i, int j) {
    return i >= 0 && j >= 0 && i < grid.nx && j < grid.ny && region[static_cast<std::size_t>(grid.index(i, j))];
  };
  const double half = 0.5 * grid.h;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      if (!in(i, j)) continue;
      const double wx = half * (static_cast<int>(in(i - 1, j)) + static_cast<int>(in(i + 1, j)));
      const double wy = half * (static_cast<int>(in(i, j - 1)) + static_cast<int>(in(i, j + 1)));
      w[static_cast<std::size_t>(grid.index(i, j))] = wx * wy;
    }
  }
  return w;
}

double integrate(const Grid& grid, std::span<const double> values, std::span<const double> weights) {
  ensure(values.size() == grid.size() && weights.size() == grid.size(), "quadrature size mismatch");
  double sum = 0.0;
  for (std::size_t n = 0; n < values.size(); ++n) sum += weights[n] * values[n];
  return sum;
}

double integrate(const ScalarField& field, const Mask& region) {
  const auto w = quadrature_weights(field.grid(), region);
  return integrate(field.grid(), field.values(), w);
}

double integrate(const ScalarField& field) { return integrate(field, field.grid().omega_mask); }

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

void write_csv(const ScalarField& field, const std::filesystem::path& path) {
  std::ofstream out(path);
  ensure(static_cast<bool>(out), "cannot open " + path.string() + " for writing");
  const Grid& g = field.grid();
  for (int j = 0; j < g.ny; ++j) {
    std::string line;
    for (int i = 0; i < g.nx; ++i) {
      if (i > 0) line += ',';
      line += format_real(field(i, j));
    }
    out << line << '\n';
  }
}

ScalarField read_csv(GridPtr grid, const std::filesystem::path& path) {
  std::ifstream in(path);
  ensure(static_cast<bool>(in), "cannot open " + path.string());
  std::vector<double> values;
  values.reserve(grid->size());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::stod(cell));
      ++cols;
    }
    ensure(cols == grid->nx, "CSV row width does not match grid");
    ++rows;
  }
  ensure(rows == grid->ny, "CSV row count does not match grid");
  return ScalarField(std::move(grid), std::move(values));
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "raw format assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  ensure(static_cast<bool>(in), "truncated raw field");
  return value;
}

}  // namespace

void write_raw(const ScalarField& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  ensure(static_cast<bool>(out), "cannot open " + path.string() + " for writing");
  const Grid& g = field.grid();
  put_le<std::int32_t>(out, g.nx);
  put_le<std::int32_t>(out, g.ny);
  put_le<std::int32_t>(out, 0);
  put_le<double>(out, g.h);
  for (double v : field.values()) put_le<double>(out, v);
}

RawField read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  ensure(static_cast<bool>(in), "cannot open " + path.string());
  RawField raw;
  raw.nx = get_le<std::int32_t>(in);
  raw.ny = get_le<std::int32_t>(in);
  (void)get_le<std::int32_t>(in);
  raw.h = get_le<double>(in);
  ensure(raw.nx > 0 && raw.ny > 0, "raw field has invalid dimensions");
  raw.values.resize(static_cast<std::size_t>(raw.nx) * static_cast<std::size_t>(raw.ny));
  for (double& v : raw.values) v = get_le<double>(in);
  return raw;
}

}  // namespace wavestab
