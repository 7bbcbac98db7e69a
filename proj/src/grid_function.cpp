#include "bwreg/grid_function.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bwreg {

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

void check_grid_function(const GridFunction& g) {
  if (!is_power_of_two(g.size()))
    throw std::invalid_argument("grid function length must be a power of two");
  for (double v : g.values)
    if (!std::isfinite(v))
      throw std::invalid_argument("grid function has non-finite entries");
}

double euclidean_norm(const GridFunction& g) {
  double s = 0.0;
  for (double v : g.values) s += v * v;
  return std::sqrt(s);
}

double dot(const GridFunction& a, const GridFunction& b) {
  if (a.size() != b.size()) throw std::invalid_argument("grid size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

GridFunction operator+(const GridFunction& a, const GridFunction& b) {
  if (a.size() != b.size()) throw std::invalid_argument("grid size mismatch");
  GridFunction r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

GridFunction operator-(const GridFunction& a, const GridFunction& b) {
  if (a.size() != b.size()) throw std::invalid_argument("grid size mismatch");
  GridFunction r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

GridFunction operator*(double c, const GridFunction& a) {
  GridFunction r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
  return r;
}

double lp_grid_norm(const GridFunction& g, double p) {
  if (p == std::numeric_limits<double>::infinity()) {
    double m = 0.0;
    for (double v : g.values) m = std::max(m, std::fabs(v));
    return m;
  }
  if (p < 1.0) throw std::invalid_argument("lp_grid_norm: p must be >= 1");
  const double h = g.grid_step();
  double s = 0.0;
  for (double v : g.values) s += std::pow(std::fabs(v), p);
  return std::pow(h * s, 1.0 / p);
}

}  // namespace bwreg
