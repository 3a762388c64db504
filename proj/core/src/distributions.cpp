#include "wesper/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "wesper/errors.hpp"

namespace wesper {

namespace {

constexpr double kWeightSumTol = 1e-9;
constexpr double kAtomMergeRel = 1e-12;

void sort_merge_atoms(std::vector<double>& atoms, std::vector<double>& weights) {
  if (atoms.size() != weights.size() || atoms.empty()) {
    throw std::invalid_argument("atoms and weights must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!(atoms[i] > 0.0) || !std::isfinite(atoms[i])) {
      throw std::invalid_argument("atoms must be strictly positive and finite");
    }
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw std::invalid_argument("weights must be strictly positive and finite");
    }
  }
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });

  std::vector<double> a2, w2;
  a2.reserve(atoms.size());
  w2.reserve(atoms.size());
  for (std::size_t idx : order) {
    double a = atoms[idx], w = weights[idx];
    if (!a2.empty() && a - a2.back() <= kAtomMergeRel * std::max(a, a2.back())) {
      // merge: weight-average position keeps the merged atom stable
      double wt = w2.back() + w;
      a2.back() = (a2.back() * w2.back() + a * w) / wt;
      w2.back() = wt;
    } else {
      a2.push_back(a);
      w2.push_back(w);
    }
  }
  double sum = std::accumulate(w2.begin(), w2.end(), 0.0);
  if (std::abs(sum - 1.0) > kWeightSumTol) {
    throw std::invalid_argument("weights must sum to 1");
  }
  for (double& w : w2) w /= sum;
  atoms = std::move(a2);
  weights = std::move(w2);
}

// Safeguarded Newton within a bracket [lo, hi] where g is strictly monotone
// increasing and g(lo) < 0 < g(hi). gp returns g'.
template <typename F, typename Fp>
double newton_in_bracket(F&& g, Fp&& gp, double lo, double hi, double x0, double tol) {
  double x = std::clamp(x0, lo, hi);
  for (int it = 0; it < 200; ++it) {
    double gx = g(x);
    if (std::abs(gx) <= tol) return x;
    if (gx > 0.0) hi = x; else lo = x;
    double d = gp(x);
    double step = (d > 0.0 && std::isfinite(d)) ? gx / d : std::numeric_limits<double>::quiet_NaN();
    double xn = x - step;
    if (!std::isfinite(xn) || xn <= lo || xn >= hi) xn = 0.5 * (lo + hi);
    if (xn == x) return x;  // bracket exhausted at double precision
    x = xn;
  }
  return x;
}

}  // namespace

SpectralDistribution::SpectralDistribution(std::vector<double> atoms,
                                           std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  sort_merge_atoms(atoms_, weights_);
  mean_ = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) mean_ += atoms_[i] * weights_[i];
}

SpectralDistribution SpectralDistribution::merged(double rel_tol) const {
  std::vector<double> a, w;
  a.reserve(atoms_.size());
  w.reserve(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (!a.empty() && atoms_[i] - a.back() <= rel_tol * std::max(atoms_[i], a.back())) {
      double wt = w.back() + weights_[i];
      a.back() = (a.back() * w.back() + atoms_[i] * weights_[i]) / wt;
      w.back() = wt;
    } else {
      a.push_back(atoms_[i]);
      w.push_back(weights_[i]);
    }
  }
  return SpectralDistribution(std::move(a), std::move(w));
}

WeightDistribution WeightDistribution::dirac_mixture(std::vector<double> atoms,
                                                     std::vector<double> weights) {
  WeightDistribution d;
  d.kind_ = WeightKind::DiracMixture;
  d.atoms_ = std::move(atoms);
  d.weights_ = std::move(weights);
  sort_merge_atoms(d.atoms_, d.weights_);
  d.support_.reserve(d.atoms_.size());
  for (double a : d.atoms_) d.support_.push_back({a, a});
  return d;
}

WeightDistribution WeightDistribution::ewma(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("EWMA decay alpha must be positive");
  }
  WeightDistribution d;
  d.kind_ = WeightKind::Ewma;
  d.alpha_ = alpha;
  if (alpha < 1e-8) {
    // numerically a point mass at 1
    d.atoms_ = {1.0};
    d.weights_ = {1.0};
    d.beta_ = 1.0;
    d.support_ = {{1.0, 1.0}};
    return d;
  }
  d.beta_ = alpha / -std::expm1(-alpha);
  d.support_ = {{d.beta_ * std::exp(-alpha), d.beta_}};
  return d;
}

WeightDistribution WeightDistribution::uniform(double alpha) {
  if (!(alpha >= 0.0) || alpha >= 2.0) {
    throw std::invalid_argument("uniform width alpha must lie in [0, 2)");
  }
  WeightDistribution d;
  d.kind_ = WeightKind::Uniform;
  d.alpha_ = alpha;
  if (alpha < 1e-8) {
    d.atoms_ = {1.0};
    d.weights_ = {1.0};
    d.support_ = {{1.0, 1.0}};
    return d;
  }
  d.support_ = {{1.0 - 0.5 * alpha, 1.0 + 0.5 * alpha}};
  return d;
}

bool WeightDistribution::contains(double x) const {
  for (const auto& iv : support_) {
    if (x >= iv.lo && x <= iv.hi) return true;
  }
  return false;
}

double WeightDistribution::moment(int k) const {
  if (k < 1) throw std::invalid_argument("moment order must be >= 1");
  if (!atoms_.empty()) {
    double s = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      s += weights_[i] * std::pow(atoms_[i], k);
    }
    return s;
  }
  if (kind_ == WeightKind::Ewma) {
    return std::pow(beta_, k) * -std::expm1(-alpha_ * k) / (alpha_ * k);
  }
  double lo = support_[0].lo, hi = support_[0].hi;
  return (std::pow(hi, k + 1) - std::pow(lo, k + 1)) / (alpha_ * (k + 1));
}

bool WeightDistribution::mean_is_one() const { return std::abs(mean() - 1.0) <= 1e-12; }

double WeightDistribution::m_ld(double x) const {
  if (contains(x)) throw std::domain_error("m_LD evaluated inside S_D");
  if (!atoms_.empty()) {
    double s = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      s += weights_[i] * atoms_[i] / (atoms_[i] - x);
    }
    return s;
  }
  double lo = support_[0].lo, hi = support_[0].hi;
  if (kind_ == WeightKind::Ewma) {
    return std::log((hi - x) / (lo - x)) / alpha_;
  }
  if (x == 0.0) return 1.0;
  return 1.0 + (x / alpha_) * std::log((hi - x) / (lo - x));
}

Complex WeightDistribution::m_ld(Complex x) const {
  if (x.imag() == 0.0) return Complex(m_ld(x.real()), 0.0);
  if (!atoms_.empty()) {
    Complex s = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      s += weights_[i] * atoms_[i] / (atoms_[i] - x);
    }
    return s;
  }
  double lo = support_[0].lo, hi = support_[0].hi;
  // (hi-x)/(lo-x) never touches the negative real axis for Im x != 0, so the
  // principal log is the analytic continuation of the real formula.
  Complex ratio = (hi - x) / (lo - x);
  if (kind_ == WeightKind::Ewma) return std::log(ratio) / alpha_;
  return 1.0 + (x / alpha_) * std::log(ratio);
}

MldDerivatives WeightDistribution::m_ld_derivatives(double x) const {
  if (contains(x)) throw std::domain_error("m_LD derivative evaluated inside S_D");
  if (!atoms_.empty()) {
    double d1v = 0.0, d2v = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      double r = atoms_[i] - x;
      d1v += weights_[i] * atoms_[i] / (r * r);
      d2v += 2.0 * weights_[i] * atoms_[i] / (r * r * r);
    }
    return {d1v, d2v};
  }
  double lo = support_[0].lo, hi = support_[0].hi;
  double s1 = 1.0 / (lo - x), s2 = 1.0 / (hi - x);
  if (kind_ == WeightKind::Ewma) {
    return {(s1 - s2) / alpha_, (s1 * s1 - s2 * s2) / alpha_};
  }
  double len = std::log((hi - x) / (lo - x));
  double first = (len + x * (s1 - s2)) / alpha_;
  double second = (2.0 * (s1 - s2) + x * (s1 * s1 - s2 * s2)) / alpha_;
  return {first, second};
}

Complex WeightDistribution::m_ld_prime(Complex x) const {
  if (!atoms_.empty()) {
    Complex s = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      Complex r = atoms_[i] - x;
      s += weights_[i] * atoms_[i] / (r * r);
    }
    return s;
  }
  double lo = support_[0].lo, hi = support_[0].hi;
  Complex s1 = 1.0 / (lo - x), s2 = 1.0 / (hi - x);
  if (kind_ == WeightKind::Ewma) return (s1 - s2) / alpha_;
  Complex len = std::log((hi - x) / (lo - x));
  return (len + x * (s1 - s2)) / alpha_;
}

namespace {

// Ascending-coefficient product by (a - X).
void mul_linear(std::vector<double>& poly, double a) {
  std::vector<double> out(poly.size() + 1, 0.0);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    out[i] += a * poly[i];
    out[i + 1] -= poly[i];
  }
  poly = std::move(out);
}

std::vector<double> companion_real_roots(const std::vector<double>& coeffs) {
  // coeffs ascending; trailing (leading-degree) entry nonzero.
  int deg = static_cast<int>(coeffs.size()) - 1;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -coeffs[i] / coeffs[deg];
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
  std::vector<double> roots;
  roots.reserve(deg);
  for (int i = 0; i < deg; ++i) {
    Complex r = es.eigenvalues()(i);
    if (std::abs(r.imag()) <= 1e-8 * (1.0 + std::abs(r.real()))) {
      roots.push_back(r.real());
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace

std::vector<double> WeightDistribution::m_ld_inverse_all(double y) const {
  const int m = branch_count();
  std::vector<double> out(m, std::numeric_limits<double>::quiet_NaN());
  for (int k = 1; k <= m; ++k) {
    if (k == m && y == 0.0) continue;
    out[k - 1] = m_ld_inverse(k, y);
  }
  return out;
}

double WeightDistribution::m_ld_inverse(int branch, double y) const {
  const int m = branch_count();
  if (branch < 1 || branch > m) throw std::invalid_argument("branch index out of range");
  if (branch == m && y == 0.0) {
    throw NoSolutionError("branch M of m_LD never attains 0");
  }

  const double tol = 1e-12 * std::max(1.0, std::abs(y));

  // EWMA closed form, in overflow-safe form on each side.
  if (kind_ == WeightKind::Ewma && atoms_.empty()) {
    double lo = support_[0].lo;
    double x;
    if (y > 0.0) {
      double q = std::exp(-alpha_ * y);            // in (0,1)
      x = lo - alpha_ * q / (1.0 - q);             // lo - alpha/(e^{ay}-1)
    } else {
      x = lo + alpha_ / -std::expm1(alpha_ * y);   // right of the support
    }
    return x;
  }

  // Point mass: algebraic inverse.
  if (atoms_.size() == 1) {
    double d = atoms_[0];
    return d * (1.0 - 1.0 / y);
  }

  if (kind_ == WeightKind::Uniform && atoms_.empty()) {
    double lo = support_[0].lo, hi = support_[0].hi;
    // m_LD is increasing from 0 to +inf on ]-inf, lo[ and from -inf to 0 on
    // ]hi, +inf[; bracket on the correct side then refine.
    double width = hi - lo;
    double a, b;
    if (y > 0.0) {
      b = lo - width * 1e-14;
      while (m_ld(b) < y) {
        double nb = lo - 0.5 * (lo - b) * 1e-2;
        if (nb == b) break;
        b = nb;
      }
      a = lo - width;
      while (m_ld(a) > y) a = lo - 2.0 * (lo - a);
    } else {
      a = hi + width * 1e-14;
      while (m_ld(a) > y) {
        double na = hi + 0.5 * (a - hi) * 1e-2;
        if (na == a) break;
        a = na;
      }
      b = hi + width;
      while (m_ld(b) < y) b = hi + 2.0 * (b - hi);
    }
    auto g = [&](double x) { return m_ld(x) - y; };
    auto gp = [&](double x) { return m_ld_derivatives(x).first; };
    double seed = (std::abs(y) < 0.5) ? -1.0 / y : 0.5 * (a + b);  // m_LD ~ -1/x tail
    return newton_in_bracket(g, gp, a, b, seed, tol);
  }

  // Dirac mixture, M >= 2.
  const auto& d = atoms_;
  const auto& w = weights_;

  auto in_branch = [&](int k, double x) {
    if (k == m) return x < d.front() || x > d.back();
    return x > d[k - 1] && x < d[k];
  };

  double root = std::numeric_limits<double>::quiet_NaN();

  if (y == 0.0) {
    // roots of P (degree M-1), one per inner gap
    std::vector<double> p(1, 0.0);
    {
      std::vector<double> acc;
      for (std::size_t i = 0; i < d.size(); ++i) {
        acc = {w[i] * d[i]};
        for (std::size_t j = 0; j < d.size(); ++j) {
          if (j != i) mul_linear(acc, d[j]);
        }
        if (acc.size() > p.size()) p.resize(acc.size(), 0.0);
        for (std::size_t t = 0; t < acc.size(); ++t) p[t] += acc[t];
      }
    }
    for (double r : companion_real_roots(p)) {
      if (in_branch(branch, r)) { root = r; break; }
    }
  } else if (m == 2) {
    // quadratic y x^2 + (mbar - y(d1+d2)) x + d1 d2 (y-1) = 0
    double mbar = w[0] * d[0] + w[1] * d[1];
    double a = y;
    double b = mbar - y * (d[0] + d[1]);
    double c = d[0] * d[1] * (y - 1.0);
    double disc = std::max(b * b - 4.0 * a * c, 0.0);
    double q = -0.5 * (b + std::copysign(std::sqrt(disc), b == 0.0 ? 1.0 : b));
    double r1 = q / a;
    double r2 = (q != 0.0) ? c / q : -b / a;
    root = in_branch(branch, r1) ? r1 : r2;
    if (!in_branch(branch, root)) root = std::numeric_limits<double>::quiet_NaN();
  } else {
    // P - yQ in the monomial basis, roots via companion matrix
    std::vector<double> q{1.0};
    for (double di : d) mul_linear(q, di);
    std::vector<double> p(q.size(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
      std::vector<double> acc{w[i] * d[i]};
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (j != i) mul_linear(acc, d[j]);
      }
      for (std::size_t t = 0; t < acc.size(); ++t) p[t] += acc[t];
    }
    std::vector<double> poly(q.size());
    for (std::size_t t = 0; t < q.size(); ++t) poly[t] = p[t] - y * q[t];
    while (poly.size() > 1 && poly.back() == 0.0) poly.pop_back();
    for (double r : companion_real_roots(poly)) {
      if (in_branch(branch, r)) { root = r; break; }
    }
  }

  // Fallback and polish: on every branch m_LD - y is monotone with a
  // guaranteed sign change, so a bracketed solve always recovers.
  double blo, bhi;
  if (branch < m) {
    double gap = d[branch] - d[branch - 1];
    blo = d[branch - 1] + 1e-14 * gap;
    bhi = d[branch] - 1e-14 * gap;
  } else if (y > 0.0) {
    bhi = d.front() - 1e-14 * d.front();
    blo = d.front() - std::max(1.0, d.back());
    while (m_ld(blo) > y) blo = d.front() - 2.0 * (d.front() - blo);
  } else {
    blo = d.back() + 1e-14 * d.back();
    bhi = d.back() + std::max(1.0, d.back());
    while (m_ld(bhi) < y) bhi = d.back() + 2.0 * (bhi - d.back());
  }
  auto g = [&](double x) { return m_ld(x) - y; };
  auto gp = [&](double x) { return m_ld_derivatives(x).first; };
  if (!std::isfinite(root) || !in_branch(branch, root)) {
    if (branch < m) {
      // tighten toward the poles until the bracket straddles y
      while (g(blo) > 0.0) blo = d[branch - 1] + 0.5 * (blo - d[branch - 1]);
      while (g(bhi) < 0.0) bhi = d[branch] - 0.5 * (d[branch] - bhi);
    }
    root = 0.5 * (blo + bhi);
  }
  root = newton_in_bracket(g, gp, blo, bhi, root, tol);
  return root;
}

double WeightDistribution::quantile(double q) const {
  if (!(q > 0.0) || !(q < 1.0)) throw std::invalid_argument("quantile level must be in (0,1)");
  if (!atoms_.empty()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      acc += weights_[i];
      if (q <= acc + 1e-15) return atoms_[i];
    }
    return atoms_.back();
  }
  if (kind_ == WeightKind::Ewma) return beta_ * std::exp(alpha_ * (q - 1.0));
  return support_[0].lo + alpha_ * q;
}

TTransform t_transform(const SpectralDistribution& h, double c, double u) {
  const auto& tau = h.atoms();
  const auto& w = h.weights();
  double t = 0.0, dt = 0.0, d2t = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    double r = tau[i] - u;
    if (r == 0.0) throw std::domain_error("t(u) evaluated at an atom of H");
    double a = w[i] * tau[i] / r;
    t += a;
    dt += a / r;
    d2t += 2.0 * a / (r * r);
  }
  return {c * t, c * dt, c * d2t};
}

}  // namespace wesper
