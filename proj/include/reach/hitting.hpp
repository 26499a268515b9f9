#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "reach/dynamics.hpp"
#include "reach/system.hpp"

namespace reach {

/// Runs n_trials independent simulate_until calls, trial i on stream (seed, i),
/// and returns results in trial order. A diverged trial is rethrown as
/// DivergedError naming the trial.
std::vector<HittingResult> run_trials(const Diffusion& model, std::span<const double> x0, double eps,
                                      const IntegratorConfig& cfg,
                                      std::span<const DomainSpec> exit_sets, std::size_t n_trials,
                                      std::uint64_t master_seed, unsigned threads = 0);

struct MfetEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample std / √n
  std::size_t n = 0;
  std::size_t timeout_count = 0;

  /// Censored trials enter the mean at t_max, so the mean is only a lower bound.
  bool lower_bound() const noexcept { return timeout_count > 0; }
};

MfetEstimate summarize_exit_times(std::span<const HittingResult> results);

/// Mean first exit time from `domain` (exit when level ≥ 0).
MfetEstimate estimate_mfet(const Diffusion& model, const DomainSpec& domain, double eps,
                           std::span<const double> x0, std::size_t n_trials,
                           const IntegratorConfig& cfg, std::uint64_t master_seed,
                           unsigned threads = 0);

/// -ε·log p, with +∞ for p = 0.
double log_transform_value(double p, double eps);

struct HitProbEstimate {
  double p = 0.0;
  double std_error = 0.0;  // binomial
  double value = 0.0;      // V̂ε = -ε log p̂
  std::size_t n = 0;
  std::size_t hits = 0;
};

/// P(τ_B ≤ T): fraction of trials that reach the closure of B by time T.
/// `cfg.t_max` is replaced by T.
HitProbEstimate estimate_hitting_prob(const Diffusion& model, const DomainSpec& target, double horizon,
                                      double eps, std::span<const double> x0, std::size_t n_trials,
                                      const IntegratorConfig& cfg, std::uint64_t master_seed,
                                      unsigned threads = 0);

struct CommittorEstimate {
  double q = 0.0;          // P(τ_B < τ_A) among uncensored trials
  double std_error = 0.0;
  double value = 0.0;      // -ε log q̂
  std::size_t n = 0;
  std::size_t hits_b = 0;
  std::size_t hits_a = 0;
  std::size_t censored = 0;

  /// P(τ_A < τ_B) from the same trials.
  double reverse() const noexcept;
};

/// Trials still in (A ∪ B)ᶜ at cfg.t_max are censored: excluded and counted.
/// NoDataError when every trial is censored; ArgumentError when x₀ or an exit
/// state lies in both sets.
CommittorEstimate estimate_committor(const Diffusion& model, const DomainSpec& avoid,
                                     const DomainSpec& target, double eps,
                                     std::span<const double> x0, std::size_t n_trials,
                                     const IntegratorConfig& cfg, std::uint64_t master_seed,
                                     unsigned threads = 0);

struct ExponentialFit {
  double rate = 0.0;  // 1/mean, the maximum-likelihood estimate
  double cv = 0.0;    // sample std / mean
  double ks = 0.0;    // sup |F_n - F_Exp(rate)|
};

ExponentialFit fit_exponential(std::span<const double> taus);

struct SweepRow {
  double eps = 0.0;
  MfetEstimate estimate;
};

struct SweepResult {
  std::vector<SweepRow> rows;      // every requested ε, in request order
  std::vector<double> excluded;    // ε values left out of the fit (timeouts)
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares fit of log(mean τ) = intercept + slope/ε over rows without
/// timeouts. `weighted` uses weights (mean/stderr)².
SweepResult fit_sweep(std::vector<SweepRow> rows, bool weighted = false);

/// estimate_mfet at every ε (same master seed for each row, so rows share
/// random numbers), then fit_sweep.
SweepResult sweep_mfet(const Diffusion& model, const DomainSpec& domain, std::span<const double> eps_list,
                       std::span<const double> x0, std::size_t n_trials, const IntegratorConfig& cfg,
                       std::uint64_t master_seed, unsigned threads = 0, bool weighted = false);

/// Sample covariance of the states after dropping the leading `burn_in` fraction.
Matrix empirical_covariance(const Trajectory& traj, double burn_in);

/// `eps,inv_eps,mean_tau,stderr,n,timeouts`
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
/// `slope,intercept,r_squared`
void write_regression_csv(std::ostream& out, const SweepResult& sweep);

}  // namespace reach
