#pragma once

#include <cstdint>
#include <vector>

#include "wesper/distributions.hpp"
#include "wesper/resolvent.hpp"

namespace wesper {

enum class NoiseKind { Gaussian, Student };

/// Configuration of one weighted sample covariance draw
/// B = (1/N) sqrt(T) Z W Z^T sqrt(T), real noise.
struct SimulationConfig {
  int dimension = 0;          // n
  double concentration = 0.0; // c; N = round(n/c)
  NoiseKind noise = NoiseKind::Gaussian;
  double nu = 0.0;            // Student degrees of freedom (> 2)
  std::uint64_t seed = 0;
  SpectralDistribution h;
  WeightDistribution d;

  int sample_count() const;  // N
  std::uint64_t hash() const;
};

/// Student draws with nu below this are outside the regime the asymptotic
/// theory assumes; callers should surface a warning.
inline constexpr double kHeavyTailNu = 12.0;

struct EmpiricalSpectrum {
  std::vector<double> eigenvalues;  // ascending, clamped to >= 0
  std::uint64_t config_hash = 0;
};

/// n population eigenvalues from H by weight-proportional counts
/// (largest-remainder rounding), ascending.
std::vector<double> expand_population(const SpectralDistribution& h, int n);

/// N realized weights, decreasing. EWMA uses the discrete exponential scheme
/// beta_N e^{-alpha i/N} whose mean is exactly e^{-2 alpha/N}; Uniform uses
/// quantiles at midlevels (i-1/2)/N; Dirac mixtures use weight-proportional
/// counts.
std::vector<double> realize_weights(const WeightDistribution& d, int n_samples);

/// Draws B and returns its spectrum. Deterministic given the seed: noise is
/// generated column-major from the documented mt19937_64 pipeline.
EmpiricalSpectrum sample_spectrum(const SimulationConfig& config);

/// Piecewise-linear CDF assembled from a density curve plus the point mass
/// at zero.
struct CdfCurve {
  std::vector<double> x;
  std::vector<double> p;  // CDF values at x
  double zero_mass = 0.0;

  double operator()(double v) const;
  double total_mass() const { return p.empty() ? zero_mass : p.back(); }
};

/// Trapezoid integration of the density. `points_per_interval` (when given)
/// marks the curve's interval structure so no mass is accumulated across
/// support gaps.
CdfCurve integrate_density(const DensityCurve& curve, double zero_mass,
                           const std::vector<int>* points_per_interval = nullptr);

/// sup |ECDF - F| over the jump points and the curve nodes.
double ks_distance(const std::vector<double>& sorted_eigs, const CdfCurve& cdf);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(const std::vector<double>& sorted_a, const std::vector<double>& sorted_b);

}  // namespace wesper
