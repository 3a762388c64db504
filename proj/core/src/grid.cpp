#include "wesper/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wesper {

namespace {

// floor + largest-remainder so counts sum exactly to the budget
std::vector<int> round_counts(const std::vector<double>& raw, int budget) {
  std::vector<int> counts(raw.size());
  std::vector<std::pair<double, std::size_t>> rema(raw.size());
  int used = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    counts[i] = static_cast<int>(std::floor(raw[i]));
    used += counts[i];
    rema[i] = {raw[i] - counts[i], i};
  }
  std::stable_sort(rema.begin(), rema.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int r = 0; r < budget - used; ++r) {
    counts[rema[r % rema.size()].second] += 1;
  }
  return counts;
}

}  // namespace

Grid build_grid(const SupportIntervals& support, int omega_total, GridStrategy strategy,
                double mu, const std::vector<double>* sample_eigs) {
  const std::size_t nu = support.intervals.size();
  if (nu == 0) throw std::invalid_argument("build_grid: empty support");
  if (omega_total < static_cast<int>(nu)) {
    throw std::invalid_argument("build_grid: point budget smaller than interval count");
  }
  if ((strategy == GridStrategy::Frequentist || strategy == GridStrategy::Mixed) &&
      sample_eigs == nullptr) {
    throw std::invalid_argument("build_grid: strategy requires sample eigenvalues");
  }
  if (strategy == GridStrategy::Uniform) mu = 1.0;
  if (strategy == GridStrategy::Frequentist) mu = 0.0;

  std::vector<double> uniform_raw(nu, static_cast<double>(omega_total) / nu);

  std::vector<double> freq_raw = uniform_raw;
  if (strategy != GridStrategy::Uniform) {
    std::vector<double> inside(nu, 0.0);
    double total = 0.0;
    for (double lam : *sample_eigs) {
      int idx = support.interval_index(lam);
      if (idx >= 0) {
        inside[idx] += 1.0;
        total += 1.0;
      }
    }
    if (total > 0.0) {
      for (std::size_t i = 0; i < nu; ++i) freq_raw[i] = omega_total * inside[i] / total;
    }
    // no eigenvalue inside the support: keep the uniform split
  }

  std::vector<double> raw(nu);
  for (std::size_t i = 0; i < nu; ++i) {
    raw[i] = mu * uniform_raw[i] + (1.0 - mu) * freq_raw[i];
  }

  Grid g;
  g.strategy = strategy;
  g.mu = mu;
  g.omega_total = omega_total;
  g.omegas = round_counts(raw, omega_total);

  for (std::size_t i = 0; i < nu; ++i) {
    double lo = support.intervals[i].lo, hi = support.intervals[i].hi;
    int w = g.omegas[i];
    for (int j = 0; j <= w + 1; ++j) {
      double s = std::sin(M_PI * j / (2.0 * (w + 1)));
      g.points.push_back(lo + (hi - lo) * s * s);
    }
  }
  return g;
}

}  // namespace wesper
