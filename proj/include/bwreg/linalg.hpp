#pragma once

#include <cstddef>
#include <vector>

namespace bwreg {

// Row-major dense matrix, just enough for the certificate computations and
// the small-instance oracles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

std::vector<double> matvec(const Matrix& m, const std::vector<double>& x);
std::vector<double> matvec_transposed(const Matrix& m, const std::vector<double>& x);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix gram(const Matrix& m);  // m^T m

// Cholesky factor (lower); throws std::runtime_error on non-SPD input.
Matrix cholesky(const Matrix& spd);
std::vector<double> cholesky_solve(const Matrix& chol, std::vector<double> b);

// Cyclic Jacobi for symmetric matrices. Eigenvalues ascending; eigenvectors
// as columns when requested.
std::vector<double> jacobi_eigenvalues(Matrix sym, Matrix* eigenvectors = nullptr);

double spectral_norm(const Matrix& m);        // largest singular value
double smallest_singular_value(const Matrix& m);

}  // namespace bwreg
