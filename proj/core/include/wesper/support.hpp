#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "wesper/distributions.hpp"

namespace wesper {

struct Interval {
  double lo;
  double hi;
  double length() const { return hi - lo; }
};

/// Generator of a support edge: the point X* where x_F^(k)' vanishes and
/// whose image x_F^(k)(X*) is the edge. X* == 0 marks an edge produced as a
/// limit at |u| -> infinity rather than by a derivative zero.
struct BoundaryPoint {
  double x;       // the edge value
  double x_star;  // X* = -1/u*
  int branch;
};

/// S_F as a sorted union of disjoint closed intervals, plus the point mass
/// at zero (max(0, 1 - 1/c), present when c > 1).
struct SupportIntervals {
  std::vector<Interval> intervals;
  double zero_mass = 0.0;
  std::vector<BoundaryPoint> boundaries;

  bool contains(double x) const;
  /// Index of the interval containing x, or -1.
  int interval_index(double x) const;
  double lower_edge() const { return intervals.front().lo; }
  double upper_edge() const { return intervals.back().hi; }
};

/// y_F^(k)(u) = x_F^(k)(-1/u) and its first two derivatives.
struct BranchEval {
  double y;
  double dy;
  double d2y;
};

/// Evaluates branch k of the edge-function family at u in S_H^c, using the
/// chain-rule formulas through t(u) and the branch inverse of m_LD. The
/// h(X) = 0 point (t(u) = 0) is evaluated by the continuous extension.
BranchEval eval_branch(const SpectralDistribution& h, const WeightDistribution& d,
                       double c, int branch, double u);

/// Brent root finder on a bracket with a sign change. Converges to
/// |f(x)| <= 1e-12*scale or bracket width <= 1e-13*(1+|x|).
double root_find(const std::function<double(double)>& f, double a, double b);

/// Support finder for convex S_D (EWMA, Uniform, single-atom Dirac).
SupportIntervals find_support_convex(const SpectralDistribution& h,
                                     const WeightDistribution& d, double c);

/// Support finder for S_D a finite union of intervals (Dirac mixtures).
/// `branches` restricts the analysis to a subset of 1..M; by default all
/// branches are scanned. Restricting to {M} is the fast heuristic that finds
/// most gaps when S_D has no large gap.
SupportIntervals find_support_mixture(const SpectralDistribution& h,
                                      const WeightDistribution& d, double c,
                                      std::optional<std::vector<int>> branches = std::nullopt);

/// Dispatches on the weight kind.
SupportIntervals find_support(const SpectralDistribution& h,
                              const WeightDistribution& d, double c);

}  // namespace wesper
