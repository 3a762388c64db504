#include "wesper/support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "wesper/errors.hpp"

namespace wesper {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

bool SupportIntervals::contains(double x) const { return interval_index(x) >= 0; }

int SupportIntervals::interval_index(double x) const {
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (x >= intervals[i].lo && x <= intervals[i].hi) return static_cast<int>(i);
  }
  return -1;
}

double root_find(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (std::signbit(fa) == std::signbit(fb)) {
    throw std::invalid_argument("root_find: bracket endpoints have the same sign");
  }
  // Brent: inverse quadratic / secant with bisection safeguard.
  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int it = 0; it < 200; ++it) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    double scale = std::max({std::abs(fa), std::abs(fb), 1.0});
    double tol = 1e-13 * (1.0 + std::abs(b));
    double m = 0.5 * (c - b);
    if (std::abs(fb) <= 1e-12 * scale || std::abs(m) <= tol) return b;
    if (std::abs(e) < tol || std::abs(fa) <= std::abs(fb)) {
      d = e = m;  // bisect
    } else {
      double s = fb / fa, p, q;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        double r = fb / fc, t = fa / fc;
        p = s * (2.0 * m * t * (t - r) - (b - a) * (r - 1.0));
        q = (t - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q; else p = -p;
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = e = m;
      }
    }
    a = b; fa = fb;
    b += (std::abs(d) > tol) ? d : std::copysign(tol, m);
    fb = f(b);
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a; fc = fa;
      d = e = b - a;
    }
  }
  return b;
}

namespace {

struct InvPoint {
  double v;
  double inv_mp;  // 1 / m_LD'(v)
  double r3;      // m_LD''(v) / m_LD'(v)^3
};

InvPoint inverse_point(const WeightDistribution& d, int k, double y) {
  double v = d.m_ld_inverse(k, y);
  // Roots driven into (or onto) a pole of m_LD saturate; the chain terms
  // 1/m' and m''/m'^3 both vanish in that limit.
  if (d.contains(v)) return {v, 0.0, 0.0};
  MldDerivatives md = d.m_ld_derivatives(v);
  if (!std::isfinite(md.first) || !std::isfinite(md.second) || md.first > 1e100) {
    return {v, 0.0, 0.0};
  }
  double cube = md.first * md.first * md.first;
  double r3 = std::isfinite(cube) ? md.second / cube : 0.0;
  return {v, 1.0 / md.first, r3};
}

// One branch of the y_F family with precomputed weight moments. The last
// branch's inverse diverges like -m1/t as t -> 0; the product t*v(t) stays
// smooth, so we switch to its expansion near t = 0 to dodge the cancellation
// in v + t/m'(v).
class BranchFn {
public:
  BranchFn(const SpectralDistribution& h, const WeightDistribution& d, double c, int k)
      : h_(h), d_(d), c_(c), k_(k), last_(k == d.branch_count()) {
    m1_ = d.moment(1);
    m2_ = d.moment(2);
    m3_ = d.moment(3);
  }

  int branch() const { return k_; }
  bool is_last() const { return last_; }

  BranchEval operator()(double u) const {
    TTransform tt = t_transform(h_, c_, u);
    if (last_ && std::abs(tt.t) <= 1e-5 * m1_) {
      double b = m2_ / m1_;
      double c2 = m2_ * m2_ / (m1_ * m1_ * m1_) - m3_ / (m1_ * m1_);
      double w = -m1_ + b * tt.t + c2 * tt.t * tt.t;
      double wp = b + 2.0 * c2 * tt.t;
      double wpp = 2.0 * c2;
      return {-u * w,
              -w - u * wp * tt.dt,
              -2.0 * wp * tt.dt - u * (wpp * tt.dt * tt.dt + wp * tt.d2t)};
    }
    InvPoint ip = inverse_point(d_, k_, tt.t);
    double y = -u * tt.t * ip.v;
    double dy = -tt.t * ip.v - u * tt.dt * (tt.t * ip.inv_mp + ip.v);
    double d2y = -(2.0 * tt.dt + u * tt.d2t) * ip.v
                 - (2.0 * (tt.t + u * tt.dt) * tt.dt + u * tt.t * tt.d2t) * ip.inv_mp
                 - u * tt.t * tt.dt * tt.dt * ip.r3;
    return {y, dy, d2y};
  }

  // lim y_F^(k)(u) as |u| -> inf for an inner branch: c E[tau] * x0 where
  // x0 is the zero of m_LD in the k-th gap.
  double inner_limit() const {
    return c_ * h_.mean() * d_.m_ld_inverse(k_, 0.0);
  }

private:
  const SpectralDistribution& h_;
  const WeightDistribution& d_;
  double c_;
  int k_;
  bool last_;
  double m1_, m2_, m3_;
};

enum class EndKind { Atom, UnboundedLeft, UnboundedRight, XZero };

// A connected piece of the scan domain. In u-space lo/hi are u bounds; an
// XSpace component scans X on ]-1/tauK, 0[ with u = -1/X.
struct Component {
  double lo, hi;  // scan-variable bounds (may be +-inf in u-space)
  EndKind lo_kind, hi_kind;
  bool x_space = false;
};

struct ImageRun {
  double img_lo = 0.0, img_hi = 0.0;
  double gen_lo = 0.0, gen_hi = 0.0;  // X* generators; 0 marks a limit edge
  int branch = 0;
};

std::vector<double> scan_points(const Component& comp, int n) {
  std::vector<double> pts;
  if (std::isfinite(comp.lo) && std::isfinite(comp.hi)) {
    pts.reserve(n);
    for (int j = 1; j <= n; ++j) {
      double f = std::sin(M_PI * j / (2.0 * (n + 1)));
      pts.push_back(comp.lo + (comp.hi - comp.lo) * f * f);
    }
  } else if (std::isfinite(comp.hi)) {
    double sc = std::max(1.0, std::abs(comp.hi));
    pts.reserve(n);
    for (int j = n - 1; j >= 0; --j) {
      double g = sc * std::pow(10.0, -9.0 + 21.0 * j / (n - 1.0));
      pts.push_back(comp.hi - g);
    }
  } else {
    double sc = std::max(1.0, std::abs(comp.lo));
    pts.reserve(n);
    for (int j = 0; j < n; ++j) {
      double g = sc * std::pow(10.0, -9.0 + 21.0 * j / (n - 1.0));
      pts.push_back(comp.lo + g);
    }
  }
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

// Scans one component of one branch and returns the image intervals of its
// maximal increasing runs.
std::vector<ImageRun> scan_component(const BranchFn& fn, const Component& comp) {
  auto to_u = [&](double s) { return comp.x_space ? -1.0 / s : s; };
  auto eval = [&](double s) { return fn(to_u(s)); };

  const int kScan = 512;
  std::vector<double> s = scan_points(comp, std::isfinite(comp.lo) && std::isfinite(comp.hi)
                                                ? kScan
                                                : 320);
  std::vector<double> dy(s.size()), d2y(s.size());
  std::vector<bool> ok(s.size(), false);
  for (std::size_t i = 0; i < s.size(); ++i) {
    try {
      BranchEval be = eval(s[i]);
      if (std::isfinite(be.dy)) {
        dy[i] = be.dy;
        d2y[i] = be.d2y;
        ok[i] = true;
      }
    } catch (const std::exception&) {
      // skip points that fall on a pole
    }
  }

  auto dy_at = [&](double sv) { return eval(sv).dy; };

  std::vector<double> zeros;
  std::size_t prev = s.size();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!ok[i]) continue;
    if (prev < s.size()) {
      if (dy[prev] == 0.0) {
        zeros.push_back(s[prev]);
      } else if (std::signbit(dy[prev]) != std::signbit(dy[i]) && dy[i] != 0.0) {
        zeros.push_back(root_find(dy_at, s[prev], s[i]));
      }
      // Narrow positive bumps between scan points: a sign change of y''
      // marks an extremum of y'; if y' is positive there while negative at
      // both neighbors, two extra zeros hide in between.
      if (std::isfinite(d2y[prev]) && std::isfinite(d2y[i]) && d2y[prev] != 0.0 &&
          std::signbit(d2y[prev]) != std::signbit(d2y[i]) && dy[prev] < 0.0 && dy[i] < 0.0) {
        try {
          double s0 = root_find([&](double sv) { return eval(sv).d2y; }, s[prev], s[i]);
          if (dy_at(s0) > 0.0) {
            zeros.push_back(root_find(dy_at, s[prev], s0));
            zeros.push_back(root_find(dy_at, s0, s[i]));
          }
        } catch (const std::exception&) {
        }
      }
    }
    prev = i;
  }
  std::sort(zeros.begin(), zeros.end());
  zeros.erase(std::unique(zeros.begin(), zeros.end(),
                          [](double a, double b) {
                            return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a));
                          }),
              zeros.end());

  // First/last valid scan points stand in for the component ends.
  std::size_t first = 0, last = s.size();
  while (first < s.size() && !ok[first]) ++first;
  if (first == s.size()) return {};
  last = s.size() - 1;
  while (last > first && !ok[last]) --last;

  struct Seg { double lo, hi; bool positive; };
  std::vector<Seg> segs;
  std::vector<double> knots;
  knots.push_back(s[first]);
  for (double z : zeros) {
    if (z > knots.back() && z < s[last]) knots.push_back(z);
  }
  knots.push_back(s[last]);
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    double mid = 0.5 * (knots[i] + knots[i + 1]);
    double sign_val;
    try {
      sign_val = dy_at(mid);
    } catch (const std::exception&) {
      sign_val = -1.0;
    }
    segs.push_back({knots[i], knots[i + 1], sign_val > 0.0});
  }
  if (segs.empty()) return {};

  // Extend the extreme segments to the true component ends.
  bool lo_is_end = true, hi_is_end = true;
  if (!zeros.empty()) {
    lo_is_end = segs.front().lo < zeros.front();
    hi_is_end = segs.back().hi > zeros.back();
  }

  std::vector<ImageRun> runs;
  std::size_t i = 0;
  while (i < segs.size()) {
    if (!segs[i].positive) { ++i; continue; }
    std::size_t j = i;
    while (j + 1 < segs.size() && segs[j + 1].positive) ++j;

    ImageRun run;
    run.branch = fn.branch();
    bool at_lo_end = (i == 0) && lo_is_end;
    bool at_hi_end = (j == segs.size() - 1) && hi_is_end;

    if (at_lo_end) {
      if (!comp.x_space && comp.lo_kind == EndKind::UnboundedLeft) {
        run.img_lo = fn.is_last() ? -kInf : fn.inner_limit();
        run.gen_lo = 0.0;
      } else {
        // y' should plunge negative at atom ends; reaching here is a
        // numerical corner, pin the run at the first scanned point.
        run.img_lo = eval(segs[i].lo).y;
        run.gen_lo = 0.0;
      }
    } else {
      double z = segs[i].lo;
      run.img_lo = eval(z).y;
      double u = to_u(z);
      run.gen_lo = comp.x_space ? z : (u != 0.0 ? -1.0 / u : 0.0);
    }
    if (at_hi_end) {
      if (!comp.x_space && comp.hi_kind == EndKind::UnboundedRight) {
        run.img_hi = fn.is_last() ? kInf : fn.inner_limit();
        run.gen_hi = 0.0;
      } else if (comp.x_space && comp.hi_kind == EndKind::XZero) {
        run.img_hi = fn.is_last() ? kInf : fn.inner_limit();
        run.gen_hi = 0.0;
      } else {
        run.img_hi = eval(segs[j].hi).y;
        run.gen_hi = 0.0;
      }
    } else {
      double z = segs[j].hi;
      run.img_hi = eval(z).y;
      double u = to_u(z);
      run.gen_hi = comp.x_space ? z : (u != 0.0 ? -1.0 / u : 0.0);
    }

    if (run.img_hi > run.img_lo) runs.push_back(run);
    i = j + 1;
  }
  return runs;
}

std::vector<Component> branch_components(const SpectralDistribution& h, bool x_space_right) {
  const auto& tau = h.atoms();
  std::vector<Component> comps;
  comps.push_back({-kInf, tau.front(), EndKind::UnboundedLeft, EndKind::Atom, false});
  for (std::size_t i = 0; i + 1 < tau.size(); ++i) {
    comps.push_back({tau[i], tau[i + 1], EndKind::Atom, EndKind::Atom, false});
  }
  if (x_space_right) {
    comps.push_back({-1.0 / tau.back(), 0.0, EndKind::Atom, EndKind::XZero, true});
  } else {
    comps.push_back({tau.back(), kInf, EndKind::Atom, EndKind::UnboundedRight, false});
  }
  return comps;
}

SupportIntervals assemble_support(std::vector<ImageRun> runs, double c) {
  if (runs.empty()) {
    throw ConvergenceError("support analysis produced no increasing intervals", 0.0);
  }
  std::sort(runs.begin(), runs.end(),
            [](const ImageRun& a, const ImageRun& b) { return a.img_lo < b.img_lo; });

  double scale = 1.0;
  for (const auto& r : runs) {
    if (std::isfinite(r.img_hi)) scale = std::max(scale, std::abs(r.img_hi));
    if (std::isfinite(r.img_lo)) scale = std::max(scale, std::abs(r.img_lo));
  }
  const double merge_eps = 1e-9 * scale;

  std::vector<ImageRun> merged;
  for (const auto& r : runs) {
    if (!merged.empty() && r.img_lo <= merged.back().img_hi + merge_eps) {
      if (r.img_hi > merged.back().img_hi) {
        merged.back().img_hi = r.img_hi;
        merged.back().gen_hi = r.gen_hi;
        merged.back().branch = r.branch;
      }
    } else {
      merged.push_back(r);
    }
  }

  if (!std::isinf(merged.front().img_lo) || merged.front().img_lo > 0.0) {
    throw ConvergenceError("support analysis: no unbounded left complement component", 0.0);
  }
  if (!std::isinf(merged.back().img_hi)) {
    throw ConvergenceError("support analysis: no unbounded right complement component", 0.0);
  }

  SupportIntervals out;
  out.zero_mass = std::max(0.0, 1.0 - 1.0 / c);
  for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
    Interval iv{std::max(merged[i].img_hi, 0.0), merged[i + 1].img_lo};
    if (iv.hi <= 0.0 || iv.hi <= iv.lo) continue;
    out.intervals.push_back(iv);
    out.boundaries.push_back({iv.lo, merged[i].gen_hi, merged[i].branch});
    out.boundaries.push_back({iv.hi, merged[i + 1].gen_lo, merged[i + 1].branch});
  }
  if (out.intervals.empty()) {
    throw ConvergenceError("support analysis produced an empty support", 0.0);
  }
  return out;
}

SupportIntervals find_support_engine(const SpectralDistribution& h,
                                     const WeightDistribution& d, double c,
                                     const std::vector<int>& branches) {
  std::vector<ImageRun> runs;
  for (int k : branches) {
    BranchFn fn(h, d, c, k);
    bool x_space_right = !fn.is_last();
    for (const Component& comp : branch_components(h, x_space_right)) {
      auto r = scan_component(fn, comp);
      runs.insert(runs.end(), r.begin(), r.end());
    }
  }
  return assemble_support(std::move(runs), c);
}

}  // namespace

BranchEval eval_branch(const SpectralDistribution& h, const WeightDistribution& d,
                       double c, int branch, double u) {
  if (branch < 1 || branch > d.branch_count()) {
    throw std::invalid_argument("eval_branch: branch index out of range");
  }
  return BranchFn(h, d, c, branch)(u);
}

SupportIntervals find_support_convex(const SpectralDistribution& h,
                                     const WeightDistribution& d, double c) {
  if (d.branch_count() != 1) {
    throw std::invalid_argument("find_support_convex requires convex S_D (one component)");
  }
  return find_support_engine(h, d, c, {1});
}

SupportIntervals find_support_mixture(const SpectralDistribution& h,
                                      const WeightDistribution& d, double c,
                                      std::optional<std::vector<int>> branches) {
  if (d.kind() != WeightKind::DiracMixture) {
    throw std::invalid_argument("find_support_mixture requires a Dirac-mixture weight law");
  }
  std::vector<int> ks;
  if (branches) {
    ks = *branches;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (int k : ks) {
      if (k < 1 || k > d.branch_count()) {
        throw std::invalid_argument("find_support_mixture: branch subset out of range");
      }
    }
    if (std::find(ks.begin(), ks.end(), d.branch_count()) == ks.end()) {
      // the last branch provides the unbounded complement pieces; the
      // analysis cannot close the support without it
      ks.push_back(d.branch_count());
    }
  } else {
    ks.resize(d.branch_count());
    for (int k = 1; k <= d.branch_count(); ++k) ks[k - 1] = k;
  }
  return find_support_engine(h, d, c, ks);
}

SupportIntervals find_support(const SpectralDistribution& h,
                              const WeightDistribution& d, double c) {
  if (d.branch_count() == 1) return find_support_convex(h, d, c);
  return find_support_mixture(h, d, c);
}

}  // namespace wesper
