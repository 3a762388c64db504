#include "wesper/resolvent.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "wesper/errors.hpp"

namespace wesper {

namespace {

constexpr double kEpsUpper = 1e-7;  // Im floor for the in-support search

bool finite(Complex v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

// Evaluator of the fundamental equation and its X-derivative.
struct FundEq {
  const SpectralDistribution& h;
  const WeightDistribution& d;
  double c;

  Complex s(Complex x) const {
    Complex acc = 0.0;
    const auto& tau = h.atoms();
    const auto& w = h.weights();
    for (std::size_t i = 0; i < tau.size(); ++i) {
      acc += w[i] * tau[i] / (tau[i] * x + 1.0);
    }
    return c * acc;
  }

  Complex s_prime(Complex x) const {
    Complex acc = 0.0;
    const auto& tau = h.atoms();
    const auto& w = h.weights();
    for (std::size_t i = 0; i < tau.size(); ++i) {
      Complex r = tau[i] * x + 1.0;
      acc += w[i] * tau[i] * tau[i] / (r * r);
    }
    return -c * acc;
  }

  // I = ∫ δ/(z-δs) dD and J = ∫ δ²/(z-δs)² dD.
  bool weight_integrals(Complex z, Complex sv, Complex& iv, Complex& jv) const {
    if (d.kind() == WeightKind::DiracMixture || !d.atoms().empty()) {
      Complex i_acc = 0.0, j_acc = 0.0;
      const auto& del = d.atoms();
      const auto& w = d.weights();
      for (std::size_t i = 0; i < del.size(); ++i) {
        Complex r = z - del[i] * sv;
        if (r == 0.0) return false;
        i_acc += w[i] * del[i] / r;
        j_acc += w[i] * del[i] * del[i] / (r * r);
      }
      iv = i_acc;
      jv = j_acc;
      return finite(iv) && finite(jv);
    }
    if (sv == 0.0) {
      if (z == 0.0) return false;
      iv = d.moment(1) / z;
      jv = d.moment(2) / (z * z);
      return finite(iv) && finite(jv);
    }
    Complex x = z / sv;
    if (x.imag() == 0.0 && d.contains(x.real())) return false;
    Complex mld = d.m_ld(x);
    Complex mldp = d.m_ld_prime(x);
    iv = -mld / sv;
    jv = (mld + x * mldp) / (sv * sv);
    return finite(iv) && finite(jv);
  }

  bool eval(Complex z, Complex x, Complex& f, Complex& fp) const {
    Complex sv = s(x);
    if (!finite(sv)) return false;
    Complex iv, jv;
    if (!weight_integrals(z, sv, iv, jv)) return false;
    f = x + iv;
    fp = 1.0 + jv * s_prime(x);
    return finite(f) && finite(fp);
  }
};

struct Attempt {
  Complex x;
  double resid = std::numeric_limits<double>::infinity();
  bool converged = false;
  bool at_floor = false;
};

Attempt damped_newton(const FundEq& eq, Complex z, Complex x0, double tol,
                      double im_floor, int max_iter) {
  Complex x = x0;
  if (x.imag() < im_floor) x = {x.real(), im_floor};
  Complex f, fp;
  if (!eq.eval(z, x, f, fp)) return {x0, std::numeric_limits<double>::infinity(), false, false};

  Attempt best{x, std::abs(f), false, false};
  int stall = 0;
  for (int it = 0; it < max_iter; ++it) {
    double fn = std::abs(f);
    if (fn <= tol) {
      return {x, fn, true, x.imag() <= im_floor * 1.0000001};
    }
    Complex step = (std::abs(fp) > 1e-300) ? -f / fp : -f;
    bool accepted = false;
    double damp = 1.0;
    for (int k = 0; k < 32; ++k) {
      Complex xn = x + damp * step;
      if (xn.imag() < im_floor) xn = {xn.real(), im_floor};
      Complex f2, fp2;
      if (eq.eval(z, xn, f2, fp2) && std::abs(f2) < fn) {
        x = xn;
        f = f2;
        fp = fp2;
        accepted = true;
        break;
      }
      damp *= 0.5;
    }
    if (!accepted) break;
    double now = std::abs(f);
    if (now < best.resid) {
      if (now > 0.99 * best.resid) ++stall; else stall = 0;
      best = {x, now, false, x.imag() <= im_floor * 1.0000001};
    } else {
      ++stall;
    }
    if (stall > 8) break;
  }
  if (std::abs(f) <= tol) return {x, std::abs(f), true, x.imag() <= im_floor * 1.0000001};
  return best;
}

std::vector<Complex> seed_list(const FundEq& eq, Complex z, std::optional<Complex> warm,
                               double im_floor) {
  double m1 = eq.d.moment(1);
  Complex base = -m1 / z;
  std::vector<Complex> seeds;
  if (warm && finite(*warm)) seeds.push_back(*warm);
  seeds.push_back(base);
  seeds.push_back(Complex(base.real(), std::max(std::abs(base), 0.5)));
  seeds.push_back(Complex(0.0, std::max(1.0, std::abs(base))));
  // deterministic perturbations of the asymptotic seed
  static constexpr std::array<Complex, 4> twists = {Complex(0.6, 0.4), Complex(1.7, -0.2),
                                                    Complex(0.3, 1.1), Complex(2.5, 0.8)};
  for (Complex t : twists) {
    Complex s = base * t;
    if (s.imag() < im_floor) s = {s.real(), std::max(im_floor, std::abs(s))};
    seeds.push_back(s);
  }
  return seeds;
}

}  // namespace

ResolventPoint solve_x_upper(const SpectralDistribution& h, const WeightDistribution& d,
                             double c, Complex z, std::optional<Complex> warm) {
  if (!(z.imag() > 0.0)) throw std::invalid_argument("solve_x_upper requires Im z > 0");
  FundEq eq{h, d, c};
  const double tol = 1e-10 * std::max(1.0, std::abs(z));

  Attempt best;
  for (Complex seed : seed_list(eq, z, warm, 0.0)) {
    Attempt a = damped_newton(eq, z, seed, tol, 0.0, 80);
    if (a.converged && a.x.imag() >= 0.0) {
      return {z, a.x, a.resid, false, false};
    }
    if (a.resid < best.resid) best = a;
  }
  throw ConvergenceError("fundamental equation solve failed in C+", best.resid);
}

namespace {

// 1D Newton polish of a real root of f_λ restricted to the real axis.
bool polish_real_root(const FundEq& eq, double lambda, double& x, double tol) {
  Complex f, fp;
  for (int it = 0; it < 60; ++it) {
    if (!eq.eval(lambda, Complex(x, 0.0), f, fp)) return false;
    double fr = f.real();
    if (std::abs(fr) <= tol) return true;
    double dp = fp.real();
    if (dp == 0.0 || !std::isfinite(dp)) return false;
    double step = fr / dp;
    double damp = 1.0;
    bool accepted = false;
    for (int k = 0; k < 24; ++k) {
      double xn = x - damp * step;
      Complex f2, fp2;
      if (eq.eval(lambda, Complex(xn, 0.0), f2, fp2) && std::abs(f2.real()) < std::abs(fr)) {
        x = xn;
        accepted = true;
        break;
      }
      damp *= 0.5;
    }
    if (!accepted) return false;
  }
  if (!eq.eval(lambda, Complex(x, 0.0), f, fp)) return false;
  return std::abs(f.real()) <= tol;
}

}  // namespace

ResolventPoint solve_x_real(const SpectralDistribution& h, const WeightDistribution& d,
                            double c, double lambda, std::optional<Complex> warm) {
  if (lambda == 0.0) throw std::invalid_argument("solve_x_real requires lambda != 0");
  FundEq eq{h, d, c};
  const double tol = 1e-10 * std::max(1.0, std::abs(lambda));

  // In-support search, restricted to Im X >= ε.
  bool boundary_ambiguous = false;
  {
    Attempt best;
    int tries = 0;
    for (Complex seed : seed_list(eq, Complex(lambda, 0.0), warm, kEpsUpper)) {
      if (++tries > 5) break;
      Attempt a = damped_newton(eq, Complex(lambda, 0.0), seed, tol, kEpsUpper, 60);
      if (a.converged && !a.at_floor) {
        return {Complex(lambda, 0.0), a.x, a.resid, true, false};
      }
      if (a.converged && a.at_floor) boundary_ambiguous = true;
      if (a.resid < best.resid) best = a;
    }
  }

  // Real-line limit by approach from above with one Richardson step.
  const double eta = 1e-6 * std::max(1.0, std::abs(lambda));
  ResolventPoint p1 = solve_x_upper(h, d, c, Complex(lambda, eta), warm);
  ResolventPoint p2 = solve_x_upper(h, d, c, Complex(lambda, 0.5 * eta), p1.x);
  Complex extrap = 2.0 * p2.x - p1.x;

  if (extrap.imag() > kEpsUpper) {
    // The limit is genuinely interior: refine without the ε restriction.
    Attempt a = damped_newton(eq, Complex(lambda, 0.0), extrap, tol, 1e-14, 60);
    if (a.converged) {
      return {Complex(lambda, 0.0), a.x, a.resid, true, boundary_ambiguous};
    }
    Complex f, fp;
    double resid = eq.eval(lambda, extrap, f, fp) ? std::abs(f) : p2.residual;
    return {Complex(lambda, 0.0), extrap, resid, true, true};
  }

  double xr = extrap.real();
  if (polish_real_root(eq, lambda, xr, tol)) {
    Complex f, fp;
    eq.eval(lambda, Complex(xr, 0.0), f, fp);
    return {Complex(lambda, 0.0), Complex(xr, 0.0), std::abs(f), true, boundary_ambiguous};
  }
  // Support edge (double root) or other degenerate point: report the
  // extrapolated value with the honest residual and a flag.
  Complex f, fp;
  double resid = eq.eval(lambda, Complex(xr, 0.0), f, fp)
                     ? std::abs(f)
                     : std::numeric_limits<double>::infinity();
  return {Complex(lambda, 0.0), Complex(xr, 0.0), resid, true, true};
}

ThetaValue theta_at(const SpectralDistribution& h, const WeightDistribution& d, double c,
                    double lambda, const std::function<double(double)>& g,
                    std::optional<Complex> warm) {
  ResolventPoint rp = solve_x_real(h, d, c, lambda, warm);
  const auto& tau = h.atoms();
  const auto& w = h.weights();
  Complex m = 0.0, th1 = 0.0;
  double im_g = 0.0;
  double im_x = rp.x.imag();
  for (std::size_t i = 0; i < tau.size(); ++i) {
    Complex r = tau[i] * rp.x + 1.0;
    m += w[i] / r;
    th1 += w[i] * tau[i] / r;
    im_g += w[i] * g(tau[i]) * tau[i] * im_x / std::norm(r);
  }
  m /= -lambda;
  th1 /= -lambda;
  im_g /= lambda;
  return {lambda, m, th1, im_g};
}

double density_at(const SpectralDistribution& h, const WeightDistribution& d, double c,
                  double lambda, std::optional<Complex> warm) {
  ResolventPoint rp = solve_x_real(h, d, c, lambda, warm);
  const auto& tau = h.atoms();
  const auto& w = h.weights();
  Complex m = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    m += w[i] / (tau[i] * rp.x + 1.0);
  }
  m /= -lambda;
  double f = m.imag() / M_PI;
  if (std::abs(f) <= 1e-12) return 0.0;
  return std::max(f, 0.0);
}

DensityCurve density_curve(const SpectralDistribution& h, const WeightDistribution& d,
                           double c, const std::vector<double>& points) {
  DensityCurve out;
  out.xi = points;
  out.density.resize(points.size());
  out.x_check.resize(points.size());
  std::optional<Complex> warm;
  for (std::size_t i = 0; i < points.size(); ++i) {
    ResolventPoint rp = solve_x_real(h, d, c, points[i], warm);
    warm = rp.x;
    const auto& tau = h.atoms();
    const auto& w = h.weights();
    Complex m = 0.0;
    for (std::size_t k = 0; k < tau.size(); ++k) {
      m += w[k] / (tau[k] * rp.x + 1.0);
    }
    m /= -points[i];
    double f = m.imag() / M_PI;
    out.density[i] = (std::abs(f) <= 1e-12) ? 0.0 : std::max(f, 0.0);
    out.x_check[i] = rp.x;
  }
  return out;
}

}  // namespace wesper
