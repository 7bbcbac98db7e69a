#include "bwreg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bwreg {

std::vector<double> matvec(const Matrix& m, const std::vector<double>& x) {
  if (x.size() != m.cols()) throw std::invalid_argument("matvec shape mismatch");
  std::vector<double> y(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

std::vector<double> matvec_transposed(const Matrix& m, const std::vector<double>& x) {
  if (x.size() != m.rows()) throw std::invalid_argument("matvec shape mismatch");
  std::vector<double> y(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) y[j] += m(i, j) * x[i];
  return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double v = a(i, k);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += v * b(k, j);
    }
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix gram(const Matrix& m) {
  Matrix g(m.cols(), m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t k = j; k < m.cols(); ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, j) * m(i, k);
      g(j, k) = s;
      g(k, j) = s;
    }
  return g;
}

Matrix cholesky(const Matrix& spd) {
  if (spd.rows() != spd.cols()) throw std::invalid_argument("cholesky: not square");
  const std::size_t n = spd.rows();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = spd(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

std::vector<double> cholesky_solve(const Matrix& chol, std::vector<double> b) {
  const std::size_t n = chol.rows();
  if (b.size() != n) throw std::invalid_argument("cholesky_solve shape mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= chol(i, k) * b[k];
    b[i] = s / chol(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= chol(k, ii) * b[k];
    b[ii] = s / chol(ii, ii);
  }
  return b;
}

std::vector<double> jacobi_eigenvalues(Matrix sym, Matrix* eigenvectors) {
  if (sym.rows() != sym.cols()) throw std::invalid_argument("jacobi: not square");
  const std::size_t n = sym.rows();
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += sym(i, j) * sym(i, j);
    if (off < 1e-300) break;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(sym(i, i)));
    if (std::sqrt(off) < 1e-15 * std::max(scale, 1e-300)) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = sym(p, q);
        if (std::fabs(apq) < 1e-300) continue;
        const double theta = (sym(q, q) - sym(p, p)) / (2.0 * apq);
        const double t = ((theta >= 0.0) ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = sym(k, p), akq = sym(k, q);
          sym(k, p) = c * akp - s * akq;
          sym(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = sym(p, k), aqk = sym(q, k);
          sym(p, k) = c * apk - s * aqk;
          sym(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<double> eig(n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    eig[i] = sym(i, i);
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return eig[a] < eig[b];
  });
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = eig[order[i]];
  if (eigenvectors) {
    *eigenvectors = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) (*eigenvectors)(k, i) = v(k, order[i]);
  }
  return sorted;
}

double spectral_norm(const Matrix& m) {
  const auto eig = jacobi_eigenvalues(gram(m));
  return std::sqrt(std::max(eig.back(), 0.0));
}

double smallest_singular_value(const Matrix& m) {
  const auto eig = jacobi_eigenvalues(gram(m));
  return std::sqrt(std::max(eig.front(), 0.0));
}

}  // namespace bwreg
