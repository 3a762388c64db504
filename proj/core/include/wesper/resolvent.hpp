#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "wesper/distributions.hpp"

namespace wesper {

/// A solved point of the fundamental equation f_z(X) = 0.
struct ResolventPoint {
  Complex z;
  Complex x;             // X(z), or the real-line limit X̌(λ)
  double residual;       // |f_z(X)| at the returned point
  bool on_real_line;     // true when x approximates X̌(λ)
  bool degenerate = false;  // support edge or ε-boundary ambiguity
};

/// Resolvent functionals at a real point λ.
struct ThetaValue {
  double lambda;
  Complex m_check;       // m̌(λ)
  Complex theta1_check;  // Θ̌^(1)(λ)
  double im_theta_g;     // Im Θ̌^g(λ) for the supplied g
};

/// Solves f_z(X) = 0 for z in the upper half plane; the solution is unique
/// there and has Im X > 0. Damped Newton on the residual with restarts; a
/// warm start (e.g. the neighbouring grid point's solution) is only a seed
/// and never changes the converged value.
/// Throws ConvergenceError when the residual contract |f| <= 1e-10 max(1,|z|)
/// cannot be met.
ResolventPoint solve_x_upper(const SpectralDistribution& h, const WeightDistribution& d,
                             double c, Complex z, std::optional<Complex> warm = std::nullopt);

/// Computes the real-line limit X̌(λ), λ != 0: first tries f_λ(X) = 0
/// restricted to Im X >= ε (in-support case), otherwise approaches from
/// above with η-extrapolation and polishes the real root.
ResolventPoint solve_x_real(const SpectralDistribution& h, const WeightDistribution& d,
                            double c, double lambda, std::optional<Complex> warm = std::nullopt);

ThetaValue theta_at(const SpectralDistribution& h, const WeightDistribution& d, double c,
                    double lambda, const std::function<double(double)>& g,
                    std::optional<Complex> warm = std::nullopt);

/// F'(λ) = Im m̌(λ) / π, snapped to 0 within 1e-12.
double density_at(const SpectralDistribution& h, const WeightDistribution& d, double c,
                  double lambda, std::optional<Complex> warm = std::nullopt);

/// Density evaluated on a sweep of points (typically a support grid),
/// warm-starting each solve from its neighbour.
struct DensityCurve {
  std::vector<double> xi;
  std::vector<double> density;
  std::vector<Complex> x_check;
};

DensityCurve density_curve(const SpectralDistribution& h, const WeightDistribution& d,
                           double c, const std::vector<double>& points);

}  // namespace wesper
