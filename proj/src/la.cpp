#include "qsd/la.hpp"

#include <cmath>
#include <utility>

#include "qsd/errors.hpp"
#include "qsd/kern/kernels.hpp"

namespace qsd {

Mat Mat::identity(int n) {
  Mat I(n, n);
  for (int i = 0; i < n; ++i) I(i, i) = 1.0;
  return I;
}

Mat matmul(const Mat& A, const Mat& B) {
  if (A.cols != B.rows) throw std::invalid_argument("matmul: shape mismatch");
  Mat C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    for (int k = 0; k < A.cols; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      kern::axpby(aik, B.row(k), 1.0, C.row(i), static_cast<std::size_t>(B.cols));
    }
  }
  return C;
}

void matvec(const Mat& A, const std::vector<double>& x, std::vector<double>& out) {
  if (A.cols != static_cast<int>(x.size()))
    throw std::invalid_argument("matvec: shape mismatch");
  out.resize(static_cast<std::size_t>(A.rows));
  for (int i = 0; i < A.rows; ++i)
    out[i] = kern::dot(A.row(i), x.data(), x.size());
}

std::vector<double> matvec(const Mat& A, const std::vector<double>& x) {
  std::vector<double> y;
  matvec(A, x, y);
  return y;
}

void vecmat(const std::vector<double>& x, const Mat& A, std::vector<double>& out) {
  if (A.rows != static_cast<int>(x.size()))
    throw std::invalid_argument("vecmat: shape mismatch");
  out.assign(static_cast<std::size_t>(A.cols), 0.0);
  for (int i = 0; i < A.rows; ++i)
    kern::axpby(x[i], A.row(i), 1.0, out.data(), out.size());
}

std::vector<double> vecmat(const std::vector<double>& x, const Mat& A) {
  std::vector<double> y;
  vecmat(x, A, y);
  return y;
}

double max_abs(const Mat& A) {
  double m = 0.0;
  for (const double v : A.a) m = std::max(m, std::fabs(v));
  return m;
}

Mat add_scaled(const Mat& A, double s, const Mat& B) {
  if (A.rows != B.rows || A.cols != B.cols)
    throw std::invalid_argument("add_scaled: shape mismatch");
  Mat C = A;
  kern::axpby(s, B.a.data(), 1.0, C.a.data(), C.a.size());
  return C;
}

Lu lu_factor(Mat A) {
  if (A.rows != A.cols) throw std::invalid_argument("lu_factor: not square");
  const int n = A.rows;
  Lu lu{std::move(A), std::vector<int>(n)};
  Mat& f = lu.f;
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::fabs(f(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::fabs(f(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best < 1e-300) throw numeric_error("lu_factor: singular matrix");
    lu.piv[k] = p;
    if (p != k)
      for (int j = 0; j < n; ++j) std::swap(f(k, j), f(p, j));
    const double inv = 1.0 / f(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double l = f(i, k) * inv;
      f(i, k) = l;
      if (l != 0.0)
        kern::axpby(-l, f.row(k) + k + 1, 1.0, f.row(i) + k + 1,
                    static_cast<std::size_t>(n - k - 1));
    }
  }
  return lu;
}

std::vector<double> lu_solve(const Lu& lu, std::vector<double> b) {
  const int n = lu.f.rows;
  if (static_cast<int>(b.size()) != n)
    throw std::invalid_argument("lu_solve: size mismatch");
  for (int k = 0; k < n; ++k)
    if (lu.piv[k] != k) std::swap(b[k], b[lu.piv[k]]);
  // L y = P b (unit lower)
  for (int i = 1; i < n; ++i)
    b[i] -= kern::dot(lu.f.row(i), b.data(), static_cast<std::size_t>(i));
  // U x = y
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= lu.f(i, j) * b[j];
    b[i] = s / lu.f(i, i);
  }
  return b;
}

std::vector<double> lu_solve_transposed(const Lu& lu, std::vector<double> b) {
  const int n = lu.f.rows;
  if (static_cast<int>(b.size()) != n)
    throw std::invalid_argument("lu_solve_transposed: size mismatch");
  // A^T = (P^T L U)^T = U^T L^T P, so solve U^T z = b, L^T w = z, x = P^T w.
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int j = 0; j < i; ++j) s -= lu.f(j, i) * b[j];
    b[i] = s / lu.f(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= lu.f(j, i) * b[j];
    b[i] = s;
  }
  for (int k = n - 1; k >= 0; --k)
    if (lu.piv[k] != k) std::swap(b[k], b[lu.piv[k]]);
  return b;
}

Mat inverse(const Mat& A) {
  const int n = A.rows;
  const Lu lu = lu_factor(A);
  Mat inv(n, n);
  std::vector<double> e(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    const std::vector<double> col = lu_solve(lu, e);
    for (int i = 0; i < n; ++i) inv(i, j) = col[i];
    e[j] = 0.0;
  }
  return inv;
}

}  // namespace qsd
