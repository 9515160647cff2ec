#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace hlx {

using Vec = std::vector<double>;

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  std::span<double> row(std::size_t r) {
    return {data.data() + r * cols, cols};
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
  }
};

double dot(std::span<const double> a, std::span<const double> b);
double inf_norm(std::span<const double> v);
double two_norm(std::span<const double> v);

/// y = M x
Vec matvec(const Matrix& m, std::span<const double> x);
/// y = r M  (row vector times matrix)
Vec vecmat(std::span<const double> r, const Matrix& m);
/// A B
Matrix matmul(const Matrix& a, const Matrix& b);

struct LinearSystem {
  Matrix coefficients;  // m x n, m >= n
  Vec rhs;              // m
};

struct SolveResult {
  Vec solution;
  double residual_inf = 0.0;
};

inline constexpr double kRankTolerance = 1e-10;

/// Least-squares solve by Householder QR (exact solve when m == n).
/// Returns nullopt when the system is rank deficient: some |R_jj| falls
/// below kRankTolerance relative to the largest diagonal magnitude.
std::optional<SolveResult> solve(const LinearSystem& sys);

struct CompareConfig {
  double phi = 1e-6;  // per-coordinate threshold, > 0
  int d_phi = 0;      // allowed mismatch count
};

struct VectorsEqualResult {
  bool equal = false;
  int mismatches = 0;
};

/// Counts coordinates with |a_j - b_j| >= phi; equal iff mismatches <= d_phi.
VectorsEqualResult vectors_equal(std::span<const double> a,
                                 std::span<const double> b,
                                 const CompareConfig& cfg);

}  // namespace hlx
