#include "hlx/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace hlx {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double two_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Vec matvec(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.cols) throw std::invalid_argument("matvec: shape mismatch");
  Vec y(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) y[r] = dot(m.row(r), x);
  return y;
}

Vec vecmat(std::span<const double> r, const Matrix& m) {
  if (r.size() != m.rows) throw std::invalid_argument("vecmat: shape mismatch");
  Vec y(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double ri = r[i];
    if (ri == 0.0) continue;
    const double* row = m.data.data() + i * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) y[j] += ri * row[j];
  }
  return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: shape mismatch");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.data.data() + k * b.cols;
      double* crow = c.data.data() + i * c.cols;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

std::optional<SolveResult> solve(const LinearSystem& sys) {
  const std::size_t m = sys.coefficients.rows;
  const std::size_t n = sys.coefficients.cols;
  if (m < n) throw std::invalid_argument("solve: underdetermined system");
  if (sys.rhs.size() != m) throw std::invalid_argument("solve: rhs size");

  Matrix a = sys.coefficients;
  Vec b = sys.rhs;

  // Householder QR applied in place; b is transformed alongside.
  std::vector<double> rdiag(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < m; ++i) norm += a.at(i, j) * a.at(i, j);
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      rdiag[j] = 0.0;
      continue;
    }
    if (a.at(j, j) > 0.0) norm = -norm;
    for (std::size_t i = j; i < m; ++i) a.at(i, j) /= -norm;
    a.at(j, j) += 1.0;
    for (std::size_t k = j + 1; k < n; ++k) {
      double s = 0.0;
      for (std::size_t i = j; i < m; ++i) s += a.at(i, j) * a.at(i, k);
      s = -s / a.at(j, j);
      for (std::size_t i = j; i < m; ++i) a.at(i, k) += s * a.at(i, j);
    }
    double s = 0.0;
    for (std::size_t i = j; i < m; ++i) s += a.at(i, j) * b[i];
    s = -s / a.at(j, j);
    for (std::size_t i = j; i < m; ++i) b[i] += s * a.at(i, j);
    rdiag[j] = norm;
  }

  double max_diag = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    max_diag = std::max(max_diag, std::abs(rdiag[j]));
  if (max_diag == 0.0) return std::nullopt;
  for (std::size_t j = 0; j < n; ++j)
    if (std::abs(rdiag[j]) < kRankTolerance * max_diag) return std::nullopt;

  Vec x(n, 0.0);
  for (std::size_t j = n; j-- > 0;) {
    double s = b[j];
    for (std::size_t k = j + 1; k < n; ++k) s -= a.at(j, k) * x[k];
    x[j] = s / rdiag[j];
  }

  double resid = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double r = sys.rhs[i] - dot(sys.coefficients.row(i), x);
    resid = std::max(resid, std::abs(r));
  }
  return SolveResult{std::move(x), resid};
}

VectorsEqualResult vectors_equal(std::span<const double> a,
                                 std::span<const double> b,
                                 const CompareConfig& cfg) {
  if (a.size() != b.size())
    throw std::invalid_argument("vectors_equal: size mismatch");
  int mismatches = 0;
  for (std::size_t j = 0; j < a.size(); ++j)
    if (!(std::abs(a[j] - b[j]) < cfg.phi)) ++mismatches;
  return {mismatches <= cfg.d_phi, mismatches};
}

}  // namespace hlx
