#pragma once

#include <cstddef>
#include <vector>

namespace qsd {

// Dense row-major matrix for the small state spaces handled exactly
// (typically m <= 100). No expression templates; operations allocate.
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
  const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }
  double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }

  static Mat identity(int n);
};

Mat matmul(const Mat& A, const Mat& B);
// out = A x (length rows)
std::vector<double> matvec(const Mat& A, const std::vector<double>& x);
void matvec(const Mat& A, const std::vector<double>& x, std::vector<double>& out);
// out = x A (row vector times matrix, length cols)
std::vector<double> vecmat(const std::vector<double>& x, const Mat& A);
void vecmat(const std::vector<double>& x, const Mat& A, std::vector<double>& out);
double max_abs(const Mat& A);
Mat add_scaled(const Mat& A, double s, const Mat& B);  // A + s*B

// LU factorization with partial pivoting. Throws numeric_error when the
// matrix is numerically singular.
struct Lu {
  Mat f;                 // packed L (unit diagonal) and U
  std::vector<int> piv;  // row swaps applied in order
};
Lu lu_factor(Mat A);
std::vector<double> lu_solve(const Lu& lu, std::vector<double> b);  // A x = b
// Solves A^T x = b using the same factorization (for row-vector systems
// y A = c via A^T y^T = c^T).
std::vector<double> lu_solve_transposed(const Lu& lu, std::vector<double> b);
Mat inverse(const Mat& A);

}  // namespace qsd
