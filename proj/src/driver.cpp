#include "qsd/driver.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qsd/errors.hpp"
#include "qsd/kern/kernels.hpp"
#include "qsd/rng.hpp"

namespace qsd {

namespace {

void check_config(const RunConfig& cfg) {
  if (cfg.n_steps < 1) throw std::invalid_argument("run: n_steps must be >= 1");
  if (cfg.histogram.bins < 0)
    throw std::invalid_argument("run: histogram bins must be >= 0");
  if (cfg.histogram.bins > 0 && !(cfg.histogram.lo < cfg.histogram.hi))
    throw std::invalid_argument("run: histogram range must satisfy lo < hi");
  if (cfg.lyapunov_p && !(*cfg.lyapunov_p >= 0.0))
    throw std::invalid_argument("run: moment exponent must be >= 0");
}

bool want_snapshot(const RunConfig& cfg, std::uint64_t n) {
  if (n == cfg.n_steps) return true;
  return cfg.snapshot_every != 0 && n % cfg.snapshot_every == 0;
}

}  // namespace

int histogram_bin(const HistogramSpec& spec, double x) {
  const double f = (x - spec.lo) / (spec.hi - spec.lo);
  const int b = static_cast<int>(std::floor(f * spec.bins));
  if (b < 0) return 0;
  if (b >= spec.bins) return spec.bins - 1;
  return b;
}

FiniteRunResult run_finite(const KernelFamily& fam, int x0, const RunConfig& cfg) {
  check_config(cfg);
  const int m = fam.m;
  if (x0 < 0 || x0 >= m) throw std::invalid_argument("run: start state out of range");

  StepSchedule sched = cfg.schedule;  // private sequential cursor
  Rng rng(cfg.seed);

  std::vector<double> w(static_cast<std::size_t>(m), 0.0);  // raw occupation
  std::vector<double> mu(static_cast<std::size_t>(m));
  int x = x0;
  std::uint64_t inserts = 1;  // X_0 enters as the first sample
  w[static_cast<std::size_t>(x0)] = sched.eta(1);
  double H = sched.H(1);

  FiniteRunResult res;
  std::uint64_t kills = 0;
  for (std::uint64_t n = 1; n <= cfg.n_steps; ++n) {
    for (int i = 0; i < m; ++i) mu[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] / H;
    const Mat K = fam.eval_raw(mu);

    // One uniform decides move vs. death by inverse transform on the row.
    const double u = rng.uniform();
    double cum = 0.0;
    int next = -1;
    for (int j = 0; j < m; ++j) {
      cum += K(x, j);
      if (u < cum) {
        next = j;
        break;
      }
    }
    if (next < 0) {  // killed: rebirth from the occupation measure
      ++kills;
      const double v = rng.uniform() * H;
      double acc = 0.0;
      next = m - 1;
      for (int j = 0; j < m; ++j) {
        acc += w[static_cast<std::size_t>(j)];
        if (v < acc) {
          next = j;
          break;
        }
      }
    }

    x = next;
    ++inserts;
    const double eta = sched.eta(inserts);
    w[static_cast<std::size_t>(x)] += eta;
    H = sched.H(inserts);

    if (want_snapshot(cfg, n)) {
      Snapshot s;
      s.n = n;
      s.gamma = sched.gamma(inserts);
      s.kills_cum = kills;
      double mean = 0.0, m2 = 0.0, lyap = 0.0;
      for (int i = 0; i < m; ++i) {
        const double p = w[static_cast<std::size_t>(i)] / H;
        mean += p * i;
        m2 += p * static_cast<double>(i) * i;
        if (cfg.lyapunov_p) lyap += p * std::pow(std::abs(static_cast<double>(i)), *cfg.lyapunov_p);
      }
      s.mean = mean;
      s.variance = m2 - mean * mean;
      if (cfg.lyapunov_p) s.lyapunov = lyap;
      s.rng_digest = rng.state_digest();
      s.hist.resize(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) s.hist[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] / H;
      res.snapshots.push_back(std::move(s));
    }
  }

  res.kills = kills;
  res.state = x;
  for (double& v : w) v /= H;
  res.occupation = DiscreteMeasure(std::move(w));
  return res;
}

EulerRunResult run_euler(const EulerModel& model, const std::vector<double>& x0,
                         const RunConfig& cfg) {
  check_config(cfg);
  const int d = model.dim;
  if (static_cast<int>(x0.size()) != d)
    throw std::invalid_argument("run: start point dimension mismatch");
  if (!model.domain.contains(x0.data(), d))
    throw std::invalid_argument("run: start point lies outside the domain");

  StepSchedule sched = cfg.schedule;
  Rng rng(cfg.seed);

  EulerRunResult res;
  res.occupation = WeightedEmpiricalMeasure(d);
  WeightedEmpiricalMeasure& mu = res.occupation;
  mu.reserve(cfg.n_steps + 1);

  std::vector<double> x = x0;
  std::vector<double> cand(static_cast<std::size_t>(d));
  std::uint64_t inserts = 1;
  mu.add_sample(x.data(), sched.eta(1));
  double H = sched.H(1);

  const bool with_hist = cfg.histogram.bins > 0;
  std::vector<double> hist_raw(with_hist ? static_cast<std::size_t>(cfg.histogram.bins) : 0, 0.0);
  if (with_hist) hist_raw[static_cast<std::size_t>(histogram_bin(cfg.histogram, x[0]))] = sched.eta(1);

  std::uint64_t kills = 0;
  for (std::uint64_t n = 1; n <= cfg.n_steps; ++n) {
    const MeasureView view(mu);
    if (kernel_step(model, x.data(), view, rng, cand.data())) {
      x.assign(cand.begin(), cand.end());
    } else {
      ++kills;
      const std::size_t k = mu.sample_index(rng);
      const double* p = mu.point(k);
      x.assign(p, p + d);
    }

    ++inserts;
    const double eta = sched.eta(inserts);
    mu.add_sample(x.data(), eta);
    H = sched.H(inserts);
    if (with_hist) hist_raw[static_cast<std::size_t>(histogram_bin(cfg.histogram, x[0]))] += eta;

    if (want_snapshot(cfg, n)) {
      Snapshot s;
      s.n = n;
      s.gamma = sched.gamma(inserts);
      s.kills_cum = kills;
      s.mean = mu.mean(0);
      s.variance = mu.variance(0);
      if (cfg.lyapunov_p) s.lyapunov = mu.abs_pow_moment(*cfg.lyapunov_p, 0);
      s.rng_digest = rng.state_digest();
      if (with_hist) {
        s.hist.resize(hist_raw.size());
        for (std::size_t b = 0; b < hist_raw.size(); ++b) s.hist[b] = hist_raw[b] / H;
      }
      res.snapshots.push_back(std::move(s));
    }
  }

  res.kills = kills;
  res.state = std::move(x);
  return res;
}

}  // namespace qsd
