#pragma once

/**
 * @file fields.hpp
 * @brief Uniform 2-D node lattice, sampled fields and the second-order
 * difference operators and quadrature shared by every solver.
 *
 * Nodes are indexed row-major: `index = j * nx + i`, with `i` along x and
 * `j` along y. The boundary of the rectangle is traversed counterclockwise
 * starting at the lower-left corner; that loop order is used for boundary
 * node lists and boundary quadrature.
 */

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wavestab {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Closed axis-aligned rectangle [x_min, x_max] x [y_min, y_max].
struct Extents {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = 0.0;
  double y_max = 1.0;

  bool contains(Point p, double slack = 0.0) const {
    return p.x >= x_min - slack && p.x <= x_max + slack && p.y >= y_min - slack &&
           p.y <= y_max + slack;
  }
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
};

enum class Edge { left, right, bottom, top };

std::optional<Edge> edge_from_string(const std::string& name);
std::string to_string(Edge edge);

using Mask = std::vector<unsigned char>;

class Grid {
 public:
  int nx = 0;
  int ny = 0;
  double h = 0.0;
  Extents extents;
  Mask omega_mask;          ///< nodes of the closed domain
  Mask k_mask;              ///< nodes of the compact set K (may be empty)
  std::vector<int> gamma0;  ///< unobserved boundary nodes, loop order
  std::vector<int> gamma1;  ///< observed boundary nodes, loop order

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  int index(int i, int j) const { return j * nx + i; }
  int column(int node) const { return node % nx; }
  int row(int node) const { return node / nx; }
  double x(int i) const { return extents.x_min + i * h; }
  double y(int j) const { return extents.y_min + j * h; }
  Point point(int node) const { return {x(column(node)), y(row(node))}; }
  bool on_boundary(int i, int j) const { return i == 0 || j == 0 || i == nx - 1 || j == ny - 1; }
  bool on_boundary(int node) const { return on_boundary(column(node), row(node)); }

  /// All boundary nodes, counterclockwise from (0, 0).
  std::vector<int> boundary_nodes() const;
  /// Position of a boundary node in the counterclockwise loop, or -1.
  int loop_position(int node) const;
  /// Outward unit normal at a boundary node; corners use the diagonal.
  Point outward_normal(int node) const;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Builds a grid on `extents` with `n` nodes along x. The spacing is shared by
/// both axes, so the y extent must be an integer multiple of it. `k_box`, when
/// given, must keep every one of its nodes at least 2h from the boundary.
/// `gamma0_edges` lists edges assigned to the unobserved boundary; a corner is
/// unobserved only when both adjacent edges are.
GridPtr build_grid(const Extents& extents, int n, const std::optional<Extents>& k_box = std::nullopt,
                   const std::vector<Edge>& gamma0_edges = {});

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridPtr grid, double value = 0.0);
  ScalarField(GridPtr grid, std::vector<double> values);

  static ScalarField from_function(GridPtr grid, const std::function<double(double, double)>& fn);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t node) const { return values_[node]; }
  double& operator[](std::size_t node) { return values_[node]; }
  double operator()(int i, int j) const { return values_[grid_->index(i, j)]; }
  double& operator()(int i, int j) { return values_[grid_->index(i, j)]; }

  double max() const;
  double min() const;
  double max_abs() const;
  bool all_finite() const;

  ScalarField& operator+=(const ScalarField& other);
  ScalarField& operator-=(const ScalarField& other);
  ScalarField& operator*=(double a);

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double a, ScalarField f);
/// Pointwise product.
ScalarField hadamard(const ScalarField& a, const ScalarField& b);

/// Sampled space-time function: snapshot k lives at time k * dt.
struct SpaceTimeField {
  GridPtr grid;
  double dt = 0.0;
  std::vector<ScalarField> snapshots;

  int nt() const { return static_cast<int>(snapshots.size()); }
  double time(int k) const { return k * dt; }
  double horizon() const { return snapshots.empty() ? 0.0 : (nt() - 1) * dt; }
  const ScalarField& operator[](int k) const { return snapshots[static_cast<std::size_t>(k)]; }
};

struct Gradient {
  ScalarField dx;
  ScalarField dy;
};

/// Central differences where both neighbours exist along an axis, second-order
/// one-sided three-point differences at the ends of that axis.
Gradient gradient(const ScalarField& field);

/// Five-point Laplacian at interior nodes; at boundary nodes each axis uses the
/// central second difference if possible and a one-sided four-point formula
/// otherwise. Boundary values are diagnostics only.
ScalarField laplacian(const ScalarField& field);

/// Fourth-order central stencils at nodes with two neighbours on each side
/// along both axes; other nodes fall back to `gradient` / `laplacian`.
Gradient gradient_fourth_order(const ScalarField& field);
ScalarField laplacian_fourth_order(const ScalarField& field);

/// Outward normal derivative at a boundary node from three-point one-sided
/// differences into the lattice. Corners average the two axis derivatives
/// along the diagonal normal.
double normal_derivative(const Grid& grid, std::span<const double> values, int node);

/// Trapezoidal quadrature weights of a node region: each axis contributes
/// h/2 per neighbour along that axis that is also in the region.
std::vector<double> quadrature_weights(const Grid& grid, const Mask& region);

/// Trapezoidal integral over `region` (the whole lattice when empty is not
/// intended; an empty region integrates to 0). Summation order is node order.
double integrate(const ScalarField& field, const Mask& region);
/// Integral over the grid's closed domain.
double integrate(const ScalarField& field);
double integrate(const Grid& grid, std::span<const double> values, std::span<const double> weights);

Mask full_mask(const Grid& grid);

// Serialization. The CSV layout is one row per lattice row (j ascending) with
// nx comma-separated values at 17 significant digits. The raw layout is three
// little-endian int32 (nx, ny, reserved = 0), one float64 h, then nx*ny
// little-endian float64 values in node order.
void write_csv(const ScalarField& field, const std::filesystem::path& path);
ScalarField read_csv(GridPtr grid, const std::filesystem::path& path);

struct RawField {
  int nx = 0;
  int ny = 0;
  double h = 0.0;
  std::vector<double> values;
};
void write_raw(const ScalarField& field, const std::filesystem::path& path);
RawField read_raw(const std::filesystem::path& path);

std::string format_real(double value);

}  // namespace wavestab
