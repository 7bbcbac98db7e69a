#pragma once

#include <cstddef>
#include <vector>

namespace bwreg {

// Samples of a 1-periodic function on the uniform grid t_i = i/n of [0,1).
// All data-space norms in this library are Euclidean norms of the sample
// vector; the Riemann-weighted L^p norms are available as a diagnostic.
struct GridFunction {
  std::vector<double> values;

  GridFunction() = default;
  explicit GridFunction(std::size_t n) : values(n, 0.0) {}
  explicit GridFunction(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double grid_step() const { return 1.0 / static_cast<double>(values.size()); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

bool is_power_of_two(std::size_t n);
void check_grid_function(const GridFunction& g);  // finite entries, pow2 length

double euclidean_norm(const GridFunction& g);
double dot(const GridFunction& a, const GridFunction& b);
GridFunction operator+(const GridFunction& a, const GridFunction& b);
GridFunction operator-(const GridFunction& a, const GridFunction& b);
GridFunction operator*(double c, const GridFunction& a);

// (h * sum |v_i|^p)^{1/p}; p = inf gives max |v_i|.
double lp_grid_norm(const GridFunction& g, double p);

}  // namespace bwreg
