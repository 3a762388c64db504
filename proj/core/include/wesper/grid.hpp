#pragma once

#include <vector>

#include "wesper/support.hpp"

namespace wesper {

enum class GridStrategy { Uniform, Frequentist, Mixed };

/// Arcsine-clustered discretization of a support. Each interval [lo, hi]
/// carries ω_i interior points plus both endpoints:
///   ξ_j = lo + (hi - lo) sin²(π j / (2(ω_i + 1))),  j = 0..ω_i+1,
/// so the total point count is Ω + 2ν.
struct Grid {
  std::vector<double> points;  // ascending, interval by interval
  std::vector<int> omegas;     // ω_i per interval
  GridStrategy strategy = GridStrategy::Uniform;
  double mu = 0.0;
  int omega_total = 0;  // Ω

  std::vector<int> points_per_interval() const {
    std::vector<int> out(omegas.size());
    for (std::size_t i = 0; i < omegas.size(); ++i) out[i] = omegas[i] + 2;
    return out;
  }
};

/// Splits the budget Ω across intervals (uniform, frequentist by sample
/// eigenvalue counts, or the μ-mix of both), rounding by largest fractional
/// remainder with ties to the lower index.
Grid build_grid(const SupportIntervals& support, int omega_total, GridStrategy strategy,
                double mu = 0.1, const std::vector<double>* sample_eigs = nullptr);

}  // namespace wesper
