#include "reach/hitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "reach/csv.hpp"
#include "reach/errors.hpp"
#include "reach/parallel.hpp"

namespace reach {

std::vector<HittingResult> run_trials(const Diffusion& model, std::span<const double> x0, double eps,
                                      const IntegratorConfig& cfg,
                                      std::span<const DomainSpec> exit_sets, std::size_t n_trials,
                                      std::uint64_t master_seed, unsigned threads) {
  cfg.validate();
  if (x0.size() != model.dimension()) throw ArgumentError("run_trials: x0 has wrong dimension");
  std::vector<HittingResult> results(n_trials);
  parallel_for(n_trials, threads, [&](std::size_t i) {
    NoiseStream noise(master_seed, i);
    try {
      results[i] = simulate_until(model, x0, eps, cfg, exit_sets, noise);
    } catch (const DivergedError& e) {
      throw DivergedError(e.step(), "trial " + std::to_string(i) + ": " + e.what());
    }
  });
  return results;
}

MfetEstimate summarize_exit_times(std::span<const HittingResult> results) {
  MfetEstimate est;
  est.n = results.size();
  if (est.n == 0) throw NoDataError("MFET: no trials");
  double sum = 0.0;
  for (const auto& r : results) {
    sum += r.tau;
    if (r.timed_out()) ++est.timeout_count;
  }
  est.mean = sum / static_cast<double>(est.n);
  if (est.n > 1) {
    double ss = 0.0;
    for (const auto& r : results) ss += (r.tau - est.mean) * (r.tau - est.mean);
    est.std_error = std::sqrt(ss / static_cast<double>(est.n - 1) / static_cast<double>(est.n));
  }
  return est;
}

MfetEstimate estimate_mfet(const Diffusion& model, const DomainSpec& domain, double eps,
                           std::span<const double> x0, std::size_t n_trials,
                           const IntegratorConfig& cfg, std::uint64_t master_seed, unsigned threads) {
  if (n_trials == 0) throw ArgumentError("estimate_mfet: n_trials must be positive");
  const DomainSpec sets[] = {domain};
  const auto results = run_trials(model, x0, eps, cfg, sets, n_trials, master_seed, threads);
  return summarize_exit_times(results);
}

double log_transform_value(double p, double eps) {
  if (p <= 0.0) return std::numeric_limits<double>::infinity();
  if (p >= 1.0) return 0.0;
  return -eps * std::log(p);
}

HitProbEstimate estimate_hitting_prob(const Diffusion& model, const DomainSpec& target, double horizon,
                                      double eps, std::span<const double> x0, std::size_t n_trials,
                                      const IntegratorConfig& cfg, std::uint64_t master_seed,
                                      unsigned threads) {
  if (!(eps > 0.0)) throw ArgumentError("estimate_hitting_prob: eps must be positive");
  if (n_trials == 0) throw ArgumentError("estimate_hitting_prob: n_trials must be positive");
  IntegratorConfig c = cfg;
  c.t_max = horizon;
  const DomainSpec sets[] = {closure_target(target)};
  const auto results = run_trials(model, x0, eps, c, sets, n_trials, master_seed, threads);

  HitProbEstimate est;
  est.n = n_trials;
  est.hits = static_cast<std::size_t>(
      std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.timed_out(); }));
  est.p = static_cast<double>(est.hits) / static_cast<double>(est.n);
  est.std_error = std::sqrt(est.p * (1.0 - est.p) / static_cast<double>(est.n));
  est.value = log_transform_value(est.p, eps);
  return est;
}

double CommittorEstimate::reverse() const noexcept {
  const std::size_t m = hits_a + hits_b;
  return m == 0 ? 0.0 : static_cast<double>(hits_a) / static_cast<double>(m);
}

CommittorEstimate estimate_committor(const Diffusion& model, const DomainSpec& avoid,
                                     const DomainSpec& target, double eps,
                                     std::span<const double> x0, std::size_t n_trials,
                                     const IntegratorConfig& cfg, std::uint64_t master_seed,
                                     unsigned threads) {
  if (!(eps > 0.0)) throw ArgumentError("estimate_committor: eps must be positive");
  if (n_trials == 0) throw ArgumentError("estimate_committor: n_trials must be positive");
  if (avoid.level(x0) <= 0.0 && target.level(x0) <= 0.0)
    throw ArgumentError("estimate_committor: x0 lies in both A and B");

  const DomainSpec sets[] = {closure_target(avoid), closure_target(target)};
  const auto results = run_trials(model, x0, eps, cfg, sets, n_trials, master_seed, threads);

  CommittorEstimate est;
  est.n = n_trials;
  for (const auto& r : results) {
    if (r.timed_out()) {
      ++est.censored;
      continue;
    }
    if (avoid.level(r.exit_state) <= 0.0 && target.level(r.exit_state) <= 0.0)
      throw ArgumentError("estimate_committor: exit state lies in both A and B");
    if (r.label == 1) ++est.hits_b; else ++est.hits_a;
  }
  const std::size_t m = est.hits_a + est.hits_b;
  if (m == 0) throw NoDataError("estimate_committor: every trial was censored at t_max");
  est.q = static_cast<double>(est.hits_b) / static_cast<double>(m);
  est.std_error = std::sqrt(est.q * (1.0 - est.q) / static_cast<double>(m));
  est.value = log_transform_value(est.q, eps);
  return est;
}

ExponentialFit fit_exponential(std::span<const double> taus) {
  const std::size_t n = taus.size();
  if (n < 2) throw ArgumentError("fit_exponential: need at least two samples");
  for (double t : taus)
    if (!(t > 0.0)) throw ArgumentError("fit_exponential: exit times must be positive");

  double sum = 0.0;
  for (double t : taus) sum += t;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double t : taus) ss += (t - mean) * (t - mean);

  ExponentialFit fit;
  fit.rate = 1.0 / mean;
  fit.cv = std::sqrt(ss / static_cast<double>(n - 1)) / mean;

  std::vector<double> sorted(taus.begin(), taus.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n; ++i) {
    const double f = 1.0 - std::exp(-fit.rate * sorted[i]);
    const double lo = static_cast<double>(i) / static_cast<double>(n);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    fit.ks = std::max({fit.ks, hi - f, f - lo});
  }
  return fit;
}

SweepResult fit_sweep(std::vector<SweepRow> rows, bool weighted) {
  SweepResult out;
  std::vector<double> xs, ys, ws;
  for (const auto& r : rows) {
    if (!(r.eps > 0.0)) throw ArgumentError("sweep: eps values must be positive");
    if (r.estimate.lower_bound()) {
      out.excluded.push_back(r.eps);
      continue;
    }
    if (!(r.estimate.mean > 0.0)) throw ArgumentError("sweep: mean exit time must be positive to fit its log");
    xs.push_back(1.0 / r.eps);
    ys.push_back(std::log(r.estimate.mean));
    if (weighted) {
      if (!(r.estimate.std_error > 0.0)) throw ArgumentError("sweep: weighted fit needs positive stderr");
      const double rel = r.estimate.std_error / r.estimate.mean;
      ws.push_back(1.0 / (rel * rel));
    } else {
      ws.push_back(1.0);
    }
  }
  out.rows = std::move(rows);
  if (std::set<double>(xs.begin(), xs.end()).size() < 2)
    throw ArgumentError("sweep: need at least two distinct eps values without timeouts");

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sw += ws[i];
    sx += ws[i] * xs[i];
    sy += ws[i] * ys[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += ws[i] * (xs[i] - mx) * (xs[i] - mx);
    sxy += ws[i] * (xs[i] - mx) * (ys[i] - my);
    syy += ws[i] * (ys[i] - my) * (ys[i] - my);
  }
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (out.intercept + out.slope * xs[i]);
    ssr += ws[i] * r * r;
  }
  out.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  return out;
}

SweepResult sweep_mfet(const Diffusion& model, const DomainSpec& domain, std::span<const double> eps_list,
                       std::span<const double> x0, std::size_t n_trials, const IntegratorConfig& cfg,
                       std::uint64_t master_seed, unsigned threads, bool weighted) {
  if (std::set<double>(eps_list.begin(), eps_list.end()).size() < 2)
    throw ArgumentError("sweep_mfet: need at least two distinct eps values");
  std::vector<SweepRow> rows;
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw ArgumentError("sweep_mfet: eps values must be positive");
    rows.push_back({eps, estimate_mfet(model, domain, eps, x0, n_trials, cfg, master_seed, threads)});
  }
  return fit_sweep(std::move(rows), weighted);
}

Matrix empirical_covariance(const Trajectory& traj, double burn_in) {
  if (!(burn_in >= 0.0 && burn_in < 1.0)) throw ArgumentError("empirical_covariance: burn_in must be in [0, 1)");
  const std::size_t total = traj.states.size();
  const auto skip = static_cast<std::size_t>(std::floor(burn_in * static_cast<double>(total)));
  const std::size_t count = total - skip;
  const std::size_t n = total == 0 ? 0 : traj.states.front().size();
  if (total == 0 || count < n + 1)
    throw NoDataError("empirical_covariance: fewer than n+1 samples after burn-in");

  Vector mean(n, 0.0);
  for (std::size_t k = skip; k < total; ++k)
    for (std::size_t i = 0; i < n; ++i) mean[i] += traj.states[k][i];
  for (double& m : mean) m /= static_cast<double>(count);

  Matrix cov(n, n);
  for (std::size_t k = skip; k < total; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const double di = traj.states[k][i] - mean[i];
      for (std::size_t j = i; j < n; ++j) cov(i, j) += di * (traj.states[k][j] - mean[j]);
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      cov(i, j) /= static_cast<double>(count - 1);
      cov(j, i) = cov(i, j);
    }
  return cov;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "eps,inv_eps,mean_tau,stderr,n,timeouts\n";
  for (const auto& r : sweep.rows) {
    out << format_double(r.eps) << ',' << format_double(1.0 / r.eps) << ','
        << format_double(r.estimate.mean) << ',' << format_double(r.estimate.std_error) << ','
        << r.estimate.n << ',' << r.estimate.timeout_count << '\n';
  }
}

void write_regression_csv(std::ostream& out, const SweepResult& sweep) {
  out << "slope,intercept,r_squared\n";
  out << format_double(sweep.slope) << ',' << format_double(sweep.intercept) << ','
      << format_double(sweep.r_squared) << '\n';
}

}  // namespace reach
