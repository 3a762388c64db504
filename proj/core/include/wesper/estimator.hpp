#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wesper/distributions.hpp"
#include "wesper/grid.hpp"
#include "wesper/resolvent.hpp"
#include "wesper/support.hpp"

namespace wesper {

enum class GradientMode { Perturbation, FiniteDifference };

struct EstimationConfig {
  int iterations = 500;
  int replicas = 4;  // simulated spectra per gradient step
  double learning_rate = 0.05;
  double lr_decay = 0.5;
  int lr_decay_every = 200;
  GradientMode gradient_mode = GradientMode::Perturbation;
  std::uint64_t seed = 0;
  std::vector<double> init_tau;  // empty: start from the observed eigenvalues
  int threads = 1;
  double clip_quantile = 0.0;  // winsorize the top quantile of observations; 0 = off
  int grid_budget = 1000;
  GridStrategy grid_strategy = GridStrategy::Mixed;
  double grid_mu = 0.1;
  double support_merge_tol = 1e-6;  // atom merge before the support stage
  int max_weight_atoms = 64;        // quantile binning of raw weights
};

struct EstimationResult {
  std::vector<double> tau_hat;  // ascending, all positive
  std::vector<double> h_hat_atoms;
  std::vector<double> h_hat_weights;
  SupportIntervals support;
  Grid grid;
  DensityCurve density;
  std::vector<double> loss_trace;
  std::vector<std::string> warnings;
  bool support_ok = false;

  SpectralDistribution h_hat() const { return {h_hat_atoms, h_hat_weights}; }
};

/// Squared 2-Wasserstein distance between two equal-weight empirical
/// measures given by sorted vectors of equal length: (1/n) Σ (a_i - b_i)².
double w2_squared(const std::vector<double>& a, const std::vector<double>& b);

/// 2-Wasserstein distance between two finite weighted Dirac mixtures
/// (quantile coupling).
double wasserstein2(const SpectralDistribution& a, const SpectralDistribution& b);

struct LossGrad {
  double loss;
  std::vector<double> gradient;  // d loss / d tau
};

/// Monte-Carlo loss (1/R) Σ_r W2²(spec(B(τ, Z_r)), λ_obs) and its gradient
/// in τ. Replica r of iteration `iteration` uses the derived seed
/// (seed, iteration, r), so results are deterministic and independent of
/// thread count. The perturbation mode differentiates eigenvalues through
/// v_k^T (∂B/∂τ_i) v_k with subspace averaging on degenerate clusters.
LossGrad loss_and_gradient(const std::vector<double>& tau,
                           const std::vector<double>& observed_sorted,
                           const std::vector<double>& weights, int replicas,
                           std::uint64_t seed, std::uint64_t iteration, GradientMode mode,
                           int threads = 1);

/// Raw per-observation weights -> Dirac mixture (equal-mass quantile bins
/// when there are more than `max_atoms` distinct values).
WeightDistribution discretize_weights(const std::vector<double>& raw, int max_atoms = 64);

/// Full pipeline: recover tau by Adam on log tau, then support, grid and
/// density for the recovered spectrum. On a support-stage failure the
/// partial result (tau_hat, loss trace) is returned with support_ok unset.
EstimationResult estimate(const std::vector<double>& observed_eigs,
                          const std::vector<double>& realized_weights,
                          const WeightDistribution& d_for_support, double c,
                          const EstimationConfig& config);

}  // namespace wesper
