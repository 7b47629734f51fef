#pragma once

#include <cmath>
#include <numbers>

#include "wavestab/fields.hpp"

namespace wavestab::testing {

inline constexpr double pi = std::numbers::pi;

inline GridPtr unit_square(int n, bool with_k = true) {
  return build_grid({0.0, 1.0, 0.0, 1.0}, n, with_k ? std::optional<Extents>(Extents{0.3, 0.7, 0.3, 0.7}) : std::nullopt);
}

inline ScalarField sine_mode(GridPtr g) {
  return ScalarField::from_function(std::move(g), [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
}

inline double max_interior(const Grid& g, const std::function<double(int)>& value) {
  double m = 0.0;
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) m = std::max(m, std::abs(value(g.index(i, j))));
  return m;
}

}  // namespace wavestab::testing
