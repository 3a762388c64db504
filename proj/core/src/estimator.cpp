#include "wesper/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "detail/linalg.hpp"
#include "wesper/detail/rng.hpp"
#include "wesper/errors.hpp"

namespace wesper {

double w2_squared(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("w2_squared: length mismatch");
  if (a.empty()) throw std::invalid_argument("w2_squared: empty input");
  if (!std::is_sorted(a.begin(), a.end()) || !std::is_sorted(b.begin(), b.end())) {
    throw std::invalid_argument("w2_squared: inputs must be sorted ascending");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double dlt = a[i] - b[i];
    acc += dlt * dlt;
  }
  return acc / static_cast<double>(a.size());
}

double wasserstein2(const SpectralDistribution& a, const SpectralDistribution& b) {
  // quantile coupling of two step inverse-CDFs
  double acc = 0.0, q = 0.0;
  std::size_t i = 0, j = 0;
  double qa = a.weights()[0], qb = b.weights()[0];
  while (q < 1.0 - 1e-15) {
    double next = std::min(qa, qb);
    double dlt = a.atoms()[i] - b.atoms()[j];
    acc += (next - q) * dlt * dlt;
    q = next;
    if (qa <= q && i + 1 < a.size()) qa += a.weights()[++i];
    else if (qa <= q) qa = 1.0 + 1.0;  // exhausted
    if (qb <= q && j + 1 < b.size()) qb += b.weights()[++j];
    else if (qb <= q) qb = 1.0 + 1.0;
  }
  return std::sqrt(std::max(acc, 0.0));
}

namespace {

struct ReplicaResult {
  double loss = 0.0;
  std::vector<double> grad;
};

// Noise matrix scaled by the weights only: A = G G^T / N is tau-independent,
// so finite differences reuse it.
Eigen::MatrixXd weighted_noise(int n, const std::vector<double>& weights, std::uint64_t seed) {
  const int n_samples = static_cast<int>(weights.size());
  detail::Rng rng(seed);
  Eigen::MatrixXd g(n, n_samples);
  for (int j = 0; j < n_samples; ++j) {
    double sw = std::sqrt(weights[j]);
    for (int i = 0; i < n; ++i) g(i, j) = sw * rng.normal();
  }
  return g;
}

Eigen::MatrixXd scaled_covariance(const Eigen::MatrixXd& a, const std::vector<double>& tau) {
  const int n = static_cast<int>(tau.size());
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s[i] = std::sqrt(tau[i]);
  return s.asDiagonal() * a * s.asDiagonal();
}

ReplicaResult replica_perturbation(const Eigen::MatrixXd& a, const std::vector<double>& tau,
                                   const std::vector<double>& obs) {
  const int n = static_cast<int>(tau.size());
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  detail::symmetric_eigen(scaled_covariance(a, tau), evals, evecs);

  ReplicaResult out;
  out.grad.assign(n, 0.0);
  for (int k = 0; k < n; ++k) {
    double dlt = evals[k] - obs[k];
    out.loss += dlt * dlt;
  }
  out.loss /= n;

  // subspace-averaged squared eigenvector components over degenerate runs
  Eigen::MatrixXd v2 = evecs.array().square();
  int k = 0;
  while (k < n) {
    int j = k;
    while (j + 1 < n && evals[j + 1] - evals[j] <= 1e-12 * std::max(1.0, std::abs(evals[j]))) ++j;
    if (j > k) {
      Eigen::VectorXd mean = v2.middleCols(k, j - k + 1).rowwise().mean();
      for (int col = k; col <= j; ++col) v2.col(col) = mean;
    }
    k = j + 1;
  }

  for (int kk = 0; kk < n; ++kk) {
    double coef = (2.0 / n) * (evals[kk] - obs[kk]) * evals[kk];
    if (coef == 0.0) continue;
    for (int i = 0; i < n; ++i) {
      out.grad[i] += coef * v2(i, kk) / tau[i];
    }
  }
  return out;
}

double replica_loss_only(const Eigen::MatrixXd& a, const std::vector<double>& tau,
                         const std::vector<double>& obs) {
  Eigen::MatrixXd b = scaled_covariance(a, tau);
  Eigen::VectorXd evals = detail::symmetric_eigenvalues(b);
  double loss = 0.0;
  for (int k = 0; k < static_cast<int>(obs.size()); ++k) {
    double dlt = evals[k] - obs[k];
    loss += dlt * dlt;
  }
  return loss / static_cast<double>(obs.size());
}

ReplicaResult replica_finite_difference(const Eigen::MatrixXd& a, const std::vector<double>& tau,
                                        const std::vector<double>& obs) {
  const int n = static_cast<int>(tau.size());
  ReplicaResult out;
  out.loss = replica_loss_only(a, tau, obs);
  out.grad.assign(n, 0.0);
  std::vector<double> t2 = tau;
  for (int i = 0; i < n; ++i) {
    double h = 1e-4 * tau[i];
    t2[i] = tau[i] + h;
    double lp = replica_loss_only(a, t2, obs);
    t2[i] = tau[i] - h;
    double lm = replica_loss_only(a, t2, obs);
    t2[i] = tau[i];
    out.grad[i] = (lp - lm) / (2.0 * h);
  }
  return out;
}

}  // namespace

LossGrad loss_and_gradient(const std::vector<double>& tau,
                           const std::vector<double>& observed_sorted,
                           const std::vector<double>& weights, int replicas,
                           std::uint64_t seed, std::uint64_t iteration, GradientMode mode,
                           int threads) {
  const int n = static_cast<int>(tau.size());
  if (observed_sorted.size() != tau.size()) {
    throw std::invalid_argument("loss_and_gradient: observed spectrum size mismatch");
  }
  if (!std::is_sorted(observed_sorted.begin(), observed_sorted.end())) {
    throw std::invalid_argument("loss_and_gradient: observed spectrum must be sorted");
  }
  for (double t : tau) {
    if (!(t > 0.0)) throw std::invalid_argument("loss_and_gradient: tau must be positive");
  }
  if (replicas < 1) throw std::invalid_argument("loss_and_gradient: replicas must be >= 1");

  std::vector<ReplicaResult> results(replicas);
  auto run_replica = [&](int r) {
    Eigen::MatrixXd g = weighted_noise(n, weights, detail::derive_seed(seed, iteration, r));
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    a.selfadjointView<Eigen::Lower>().rankUpdate(g, 1.0 / static_cast<double>(weights.size()));
    a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
    results[r] = (mode == GradientMode::Perturbation)
                     ? replica_perturbation(a, tau, observed_sorted)
                     : replica_finite_difference(a, tau, observed_sorted);
  };

  int workers = std::max(1, std::min(threads, replicas));
  if (workers == 1) {
    for (int r = 0; r < replicas; ++r) run_replica(r);
  } else {
    std::vector<std::thread> pool;
    std::atomic_int next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < replicas; r = next.fetch_add(1)) run_replica(r);
      });
    }
    for (auto& th : pool) th.join();
  }

  // fixed-order reduction
  LossGrad out{0.0, std::vector<double>(n, 0.0)};
  for (const auto& res : results) {
    out.loss += res.loss / replicas;
    for (int i = 0; i < n; ++i) out.gradient[i] += res.grad[i] / replicas;
  }
  return out;
}

WeightDistribution discretize_weights(const std::vector<double>& raw, int max_atoms) {
  if (raw.empty()) throw std::invalid_argument("discretize_weights: empty input");
  std::vector<double> sorted = raw;
  std::sort(sorted.begin(), sorted.end());
  if (!(sorted.front() > 0.0)) {
    throw std::invalid_argument("discretize_weights: weights must be positive");
  }
  const int n = static_cast<int>(sorted.size());

  std::vector<double> atoms, counts;
  for (double v : sorted) {
    if (!atoms.empty() && v - atoms.back() <= 1e-12 * std::max(v, atoms.back())) {
      counts.back() += 1.0;
    } else {
      atoms.push_back(v);
      counts.push_back(1.0);
    }
  }
  if (static_cast<int>(atoms.size()) > max_atoms) {
    // equal-mass quantile bins, atom at the bin mean
    atoms.clear();
    counts.clear();
    for (int b = 0; b < max_atoms; ++b) {
      int lo = b * n / max_atoms, hi = (b + 1) * n / max_atoms;
      if (hi <= lo) continue;
      double mean = std::accumulate(sorted.begin() + lo, sorted.begin() + hi, 0.0) / (hi - lo);
      atoms.push_back(mean);
      counts.push_back(static_cast<double>(hi - lo));
    }
  }
  double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  for (double& cw : counts) cw /= total;
  return WeightDistribution::dirac_mixture(std::move(atoms), std::move(counts));
}

EstimationResult estimate(const std::vector<double>& observed_eigs,
                          const std::vector<double>& realized_weights,
                          const WeightDistribution& d_for_support, double c,
                          const EstimationConfig& config) {
  const int n = static_cast<int>(observed_eigs.size());
  if (n < 1) throw std::invalid_argument("estimate: empty observed spectrum");
  const int n_samples = static_cast<int>(realized_weights.size());
  if (n_samples != static_cast<int>(std::llround(n / c))) {
    throw std::invalid_argument("estimate: weight count must equal round(n/c)");
  }

  EstimationResult result;

  std::vector<double> obs = observed_eigs;
  std::sort(obs.begin(), obs.end());
  if (config.clip_quantile > 0.0) {
    int keep = static_cast<int>(std::ceil((1.0 - config.clip_quantile) * n)) - 1;
    keep = std::clamp(keep, 0, n - 1);
    double cap = obs[keep];
    for (double& v : obs) v = std::min(v, cap);
    result.warnings.push_back("observed eigenvalues winsorized at quantile " +
                              std::to_string(1.0 - config.clip_quantile));
  }

  // log-parametrization enforces positivity
  const double floor = 1e-8 * std::max(obs.back(), 1e-300);
  std::vector<double> theta(n);
  if (!config.init_tau.empty()) {
    if (static_cast<int>(config.init_tau.size()) != n) {
      throw std::invalid_argument("estimate: init_tau size mismatch");
    }
    for (int i = 0; i < n; ++i) theta[i] = std::log(std::max(config.init_tau[i], floor));
  } else {
    for (int i = 0; i < n; ++i) theta[i] = std::log(std::max(obs[i], floor));
  }

  std::vector<double> m1(n, 0.0), m2(n, 0.0), tau(n);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  GradientMode mode = config.gradient_mode;

  for (int it = 1; it <= config.iterations; ++it) {
    for (int i = 0; i < n; ++i) tau[i] = std::exp(theta[i]);
    double lr = config.learning_rate *
                std::pow(config.lr_decay, (it - 1) / std::max(config.lr_decay_every, 1));
    LossGrad lg;
    try {
      lg = loss_and_gradient(tau, obs, realized_weights, config.replicas, config.seed, it,
                             mode, config.threads);
    } catch (const std::runtime_error& e) {
      if (mode == GradientMode::Perturbation) {
        result.warnings.push_back(std::string("perturbation gradient failed (") + e.what() +
                                  "), falling back to finite differences");
        mode = GradientMode::FiniteDifference;
        lg = loss_and_gradient(tau, obs, realized_weights, config.replicas, config.seed, it,
                               mode, config.threads);
      } else {
        throw;
      }
    }
    result.loss_trace.push_back(lg.loss);
    for (int i = 0; i < n; ++i) {
      double g = lg.gradient[i] * tau[i];  // chain to theta
      m1[i] = b1 * m1[i] + (1.0 - b1) * g;
      m2[i] = b2 * m2[i] + (1.0 - b2) * g * g;
      double m1h = m1[i] / (1.0 - std::pow(b1, it));
      double m2h = m2[i] / (1.0 - std::pow(b2, it));
      theta[i] -= lr * m1h / (std::sqrt(m2h) + eps);
    }
  }

  for (int i = 0; i < n; ++i) tau[i] = std::exp(theta[i]);
  std::sort(tau.begin(), tau.end());
  result.tau_hat = tau;
  SpectralDistribution h_hat(tau, std::vector<double>(n, 1.0 / n));
  result.h_hat_atoms = h_hat.atoms();
  result.h_hat_weights = h_hat.weights();

  try {
    SpectralDistribution h_support = h_hat.merged(config.support_merge_tol);
    result.support = find_support(h_support, d_for_support, c);
    result.grid = build_grid(result.support, config.grid_budget, config.grid_strategy,
                             config.grid_mu, &obs);
    result.density = density_curve(h_support, d_for_support, c, result.grid.points);
    result.support_ok = true;
  } catch (const std::exception& e) {
    result.warnings.push_back(std::string("support/density stage failed: ") + e.what());
    return result;
  }

  // outliers beyond the computed support hint at heavy-tailed noise
  double edge = result.support.upper_edge();
  int outliers = 0;
  for (double v : obs) {
    if (v > 1.25 * edge) ++outliers;
  }
  if (outliers > 0.005 * n) {
    result.warnings.push_back(
        "more than 0.5% of observed eigenvalues exceed the computed support edge by >25%; "
        "consider rejecting the highest quantiles (clip_quantile option)");
  }
  return result;
}

}  // namespace wesper
