#include "qsd/finite_kernel.hpp"

#include <cmath>
#include <memory>

#include "qsd/errors.hpp"

namespace qsd {
namespace {

void check_row_stochastic(const Mat& P) {
  for (int i = 0; i < P.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < P.cols; ++j) {
      if (!(P(i, j) >= 0.0)) throw model_error("proposal matrix: negative entry");
      s += P(i, j);
    }
    if (std::fabs(s - 1.0) > 1e-12)
      throw model_error("proposal matrix: row mass differs from 1");
  }
}

Mat eval_mean_field(const Mat& P, double kappa, double beta,
                    const double* mu, int m) {
  Mat K(m, m);
  std::vector<double> tilt(m);
  for (int j = 0; j < m; ++j) tilt[j] = std::exp(-beta * mu[j]);
  for (int i = 0; i < m; ++i) {
    double z = 0.0;
    for (int j = 0; j < m; ++j) z += P(i, j) * tilt[j];
    const double zi = z > 1.0 ? z : 1.0;
    for (int j = 0; j < m; ++j) K(i, j) = kappa * P(i, j) * tilt[j] / zi;
  }
  return K;
}

}  // namespace

KernelFamily mean_field_family(int m, double kappa, double beta, Mat P) {
  if (m < 1) throw model_error("kernel family: empty state space");
  if (!(kappa > 0.0 && kappa < 1.0))
    throw model_error("kernel family: survival factor must lie in (0,1)");
  if (!(beta >= 0.0))
    throw model_error("kernel family: interaction strength must be >= 0");
  if (P.rows != m || P.cols != m)
    throw model_error("kernel family: proposal matrix shape mismatch");
  check_row_stochastic(P);
  auto Pp = std::make_shared<Mat>(std::move(P));
  KernelFamily fam;
  fam.m = m;
  fam.eval = [Pp, kappa, beta, m](const DiscreteMeasure& mu) {
    mu.validate(1e-9);
    if (mu.size() != m) throw std::invalid_argument("kernel eval: size mismatch");
    return eval_mean_field(*Pp, kappa, beta, mu.p.data(), m);
  };
  fam.eval_raw = [Pp, kappa, beta, m](const std::vector<double>& mu) {
    if (static_cast<int>(mu.size()) != m)
      throw std::invalid_argument("kernel eval: size mismatch");
    return eval_mean_field(*Pp, kappa, beta, mu.data(), m);
  };
  return fam;
}

KernelFamily mean_field_family_uniform(int m, double kappa, double beta) {
  Mat P(m, m);
  for (double& v : P.a) v = 1.0 / m;
  return mean_field_family(m, kappa, beta, std::move(P));
}

KernelFamily constant_family(Mat K) {
  if (K.rows != K.cols || K.rows < 1)
    throw model_error("constant family: matrix must be square and non-empty");
  for (int i = 0; i < K.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < K.cols; ++j) {
      if (!(K(i, j) >= 0.0)) throw model_error("constant family: negative entry");
      s += K(i, j);
    }
    if (s > 1.0 + 1e-12)
      throw model_error("constant family: row mass exceeds 1");
  }
  auto Kp = std::make_shared<Mat>(std::move(K));
  KernelFamily fam;
  fam.m = Kp->rows;
  fam.eval = [Kp](const DiscreteMeasure& mu) {
    if (mu.size() != Kp->rows)
      throw std::invalid_argument("kernel eval: size mismatch");
    return *Kp;
  };
  fam.eval_raw = [Kp](const std::vector<double>& mu) {
    if (static_cast<int>(mu.size()) != Kp->rows)
      throw std::invalid_argument("kernel eval: size mismatch");
    return *Kp;
  };
  return fam;
}

std::vector<double> kill_probabilities(const Mat& K) {
  std::vector<double> d(K.rows);
  for (int i = 0; i < K.rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < K.cols; ++j) s += K(i, j);
    d[i] = 1.0 - s;
  }
  return d;
}

}  // namespace qsd
