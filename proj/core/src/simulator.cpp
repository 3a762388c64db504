#include "wesper/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "detail/linalg.hpp"
#include "wesper/detail/hash.hpp"
#include "wesper/detail/rng.hpp"

namespace wesper {

int SimulationConfig::sample_count() const {
  if (dimension <= 0) throw std::invalid_argument("dimension must be positive");
  if (!(concentration > 0.0)) throw std::invalid_argument("concentration must be positive");
  auto n_samples = static_cast<int>(std::llround(dimension / concentration));
  if (n_samples < 1) throw std::invalid_argument("concentration too large for the dimension");
  return n_samples;
}

std::uint64_t SimulationConfig::hash() const {
  using detail::fnv1a64;
  std::uint64_t h0 = fnv1a64(static_cast<double>(dimension));
  h0 = fnv1a64(concentration, h0);
  h0 = fnv1a64(static_cast<double>(static_cast<int>(noise)), h0);
  h0 = fnv1a64(nu, h0);
  h0 = fnv1a64(static_cast<double>(seed), h0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    h0 = fnv1a64(h.atoms()[i], h0);
    h0 = fnv1a64(h.weights()[i], h0);
  }
  h0 = fnv1a64(static_cast<double>(static_cast<int>(d.kind())), h0);
  h0 = fnv1a64(d.alpha(), h0);
  for (std::size_t i = 0; i < d.atoms().size(); ++i) {
    h0 = fnv1a64(d.atoms()[i], h0);
    h0 = fnv1a64(d.weights()[i], h0);
  }
  return h0;
}

namespace {

std::vector<int> proportional_counts(const std::vector<double>& weights, int total) {
  std::vector<int> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> rema(weights.size());
  int used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double raw = weights[i] * total;
    counts[i] = static_cast<int>(std::floor(raw));
    used += counts[i];
    rema[i] = {raw - counts[i], i};
  }
  std::stable_sort(rema.begin(), rema.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int r = 0; r < total - used; ++r) counts[rema[r % rema.size()].second] += 1;
  return counts;
}

}  // namespace

std::vector<double> expand_population(const SpectralDistribution& h, int n) {
  if (n < 1) throw std::invalid_argument("population size must be >= 1");
  std::vector<int> counts = proportional_counts(h.weights(), n);
  std::vector<double> tau;
  tau.reserve(n);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    tau.insert(tau.end(), counts[i], h.atoms()[i]);
  }
  return tau;
}

std::vector<double> realize_weights(const WeightDistribution& d, int n_samples) {
  if (n_samples < 1) throw std::invalid_argument("sample count must be >= 1");
  const int n = n_samples;
  std::vector<double> w;
  w.reserve(n);
  if (d.kind() == WeightKind::Ewma && d.atoms().empty()) {
    double alpha = d.alpha();
    double beta_n = n * std::exp(-alpha / n) * -std::expm1(-alpha / n) / -std::expm1(-alpha);
    for (int i = 1; i <= n; ++i) w.push_back(beta_n * std::exp(-alpha * i / n));
  } else if (d.kind() == WeightKind::Uniform && d.atoms().empty()) {
    for (int i = 1; i <= n; ++i) w.push_back(d.quantile((n - i + 0.5) / n));
  } else {
    std::vector<int> counts = proportional_counts(d.weights(), n);
    for (std::size_t i = counts.size(); i-- > 0;) {
      w.insert(w.end(), counts[i], d.atoms()[i]);
    }
  }
  return w;
}

EmpiricalSpectrum sample_spectrum(const SimulationConfig& config) {
  const int n = config.dimension;
  const int n_samples = config.sample_count();
  if (config.noise == NoiseKind::Student && !(config.nu > 2.0)) {
    throw std::invalid_argument("Student noise requires nu > 2 for unit variance");
  }

  std::vector<double> tau = expand_population(config.h, n);
  std::vector<double> wts = realize_weights(config.d, n_samples);

  std::vector<double> sqrt_tau(n);
  for (int i = 0; i < n; ++i) sqrt_tau[i] = std::sqrt(tau[i]);

  detail::Rng rng(config.seed);
  const bool student = config.noise == NoiseKind::Student;
  const double t_scale = student ? std::sqrt((config.nu - 2.0) / config.nu) : 1.0;

  Eigen::MatrixXd g(n, n_samples);
  for (int j = 0; j < n_samples; ++j) {
    double sw = std::sqrt(wts[j]);
    for (int i = 0; i < n; ++i) {
      double z = student ? t_scale * rng.student_t(config.nu) : rng.normal();
      g(i, j) = sqrt_tau[i] * sw * z;
    }
  }

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  b.selfadjointView<Eigen::Lower>().rankUpdate(g, 1.0 / n_samples);
  g.resize(0, 0);

  Eigen::VectorXd evals = detail::symmetric_eigenvalues(b);

  EmpiricalSpectrum out;
  out.eigenvalues.assign(evals.data(), evals.data() + n);
  for (double& v : out.eigenvalues) v = std::max(v, 0.0);
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
  out.config_hash = config.hash();
  return out;
}

double CdfCurve::operator()(double v) const {
  if (v < 0.0) return 0.0;
  if (x.empty() || v < x.front()) return zero_mass;
  if (v >= x.back()) return p.back();
  auto it = std::upper_bound(x.begin(), x.end(), v);
  std::size_t i = static_cast<std::size_t>(it - x.begin());
  double x0 = x[i - 1], x1 = x[i];
  if (x1 == x0) return p[i];
  double f = (v - x0) / (x1 - x0);
  return p[i - 1] + f * (p[i] - p[i - 1]);
}

CdfCurve integrate_density(const DensityCurve& curve, double zero_mass,
                           const std::vector<int>* points_per_interval) {
  CdfCurve out;
  out.zero_mass = zero_mass;
  out.x = curve.xi;
  out.p.resize(curve.xi.size());
  if (curve.xi.empty()) return out;

  // mark the first point of each support interval: the step across a gap
  // carries no mass
  std::vector<char> starts(curve.xi.size(), 0);
  if (points_per_interval) {
    std::size_t at = 0;
    for (int cnt : *points_per_interval) {
      if (at < starts.size()) starts[at] = 1;
      at += static_cast<std::size_t>(cnt);
    }
  }

  double acc = zero_mass;
  for (std::size_t i = 0; i < curve.xi.size(); ++i) {
    if (i > 0 && !starts[i]) {
      acc += 0.5 * (curve.density[i] + curve.density[i - 1]) * (curve.xi[i] - curve.xi[i - 1]);
    }
    out.p[i] = acc;
  }
  return out;
}

double ks_distance(const std::vector<double>& sorted_eigs, const CdfCurve& cdf) {
  const double n = static_cast<double>(sorted_eigs.size());
  double dist = 0.0;
  for (std::size_t i = 0; i < sorted_eigs.size(); ++i) {
    double f = cdf(sorted_eigs[i]);
    dist = std::max(dist, std::abs(f - (i + 1) / n));
    dist = std::max(dist, std::abs(f - i / n));
  }
  for (std::size_t i = 0; i < cdf.x.size(); ++i) {
    auto it = std::upper_bound(sorted_eigs.begin(), sorted_eigs.end(), cdf.x[i]);
    double ecdf = static_cast<double>(it - sorted_eigs.begin()) / n;
    dist = std::max(dist, std::abs(ecdf - cdf.p[i]));
  }
  return dist;
}

double ks_distance(const std::vector<double>& sorted_a, const std::vector<double>& sorted_b) {
  const double na = static_cast<double>(sorted_a.size());
  const double nb = static_cast<double>(sorted_b.size());
  double dist = 0.0;
  std::size_t i = 0, j = 0;
  while (i < sorted_a.size() && j < sorted_b.size()) {
    if (sorted_a[i] <= sorted_b[j]) ++i; else ++j;
    dist = std::max(dist, std::abs(i / na - j / nb));
  }
  return dist;
}

}  // namespace wesper
