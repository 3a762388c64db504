#pragma once

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

namespace wesper {

using Complex = std::complex<double>;

/// Population spectrum H: a finite mixture of positive Dirac atoms.
///
/// Atoms are sorted ascending and deduplicated on construction (atoms closer
/// than 1e-12 relative are merged by summing their weights). Weights must be
/// positive and sum to 1; they are rescaled to sum exactly to 1 when the
/// input sum is within 1e-9.
class SpectralDistribution {
public:
  SpectralDistribution(std::vector<double> atoms, std::vector<double> weights);

  static SpectralDistribution dirac(double atom) { return {{atom}, {1.0}}; }

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }

  double min_atom() const { return atoms_.front(); }  // h1
  double max_atom() const { return atoms_.back(); }   // h2
  double mean() const { return mean_; }               // ∫τ dH

  /// Merge atoms closer than `rel_tol` relative; used before support finding
  /// on estimated spectra where near-duplicates would fabricate zero-width
  /// spectral gaps.
  SpectralDistribution merged(double rel_tol) const;

private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
  double mean_ = 0.0;
};

enum class WeightKind { DiracMixture, Ewma, Uniform };

struct WeightInterval {
  double lo;
  double hi;
};

/// First and second derivative of m_LD at a real point.
struct MldDerivatives {
  double first;
  double second;
};

/// Weight law D with its transform family m_LD.
///
/// Three kinds are supported, matching what the branch-inverse machinery
/// requires: a finite Dirac mixture, the EWMA law on [βe^-α, β] with
/// β = α/(1-e^-α), and the uniform law on [1-α/2, 1+α/2]. EWMA and Uniform
/// have mean exactly 1; a Dirac mixture need not be mean-normalized (callers
/// may warn, construction does not reject).
class WeightDistribution {
public:
  static WeightDistribution dirac_mixture(std::vector<double> atoms,
                                          std::vector<double> weights);
  static WeightDistribution dirac(double atom) {
    return dirac_mixture({atom}, {1.0});
  }
  static WeightDistribution ewma(double alpha);
  static WeightDistribution uniform(double alpha);

  WeightKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }  // EWMA scale α/(1-e^-α)

  /// Dirac atoms / weights; empty for EWMA and Uniform kinds.
  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Connected components [δ1^(k), δ2^(k)] of S_D, ascending. M = size().
  const std::vector<WeightInterval>& support() const { return support_; }
  int branch_count() const { return static_cast<int>(support_.size()); }

  double d1() const { return support_.front().lo; }
  double d2() const { return support_.back().hi; }

  double mean() const { return moment(1); }
  /// ∫δ^k dD for k >= 1, closed form per kind.
  double moment(int k) const;
  bool mean_is_one() const;

  bool contains(double x) const;  // x inside some component of S_D

  /// m_LD(x) = ∫ δ/(δ-x) dD for real x off S_D. Throws std::domain_error
  /// inside the support.
  double m_ld(double x) const;
  /// Analytic continuation off the real support (principal branch).
  Complex m_ld(Complex x) const;

  MldDerivatives m_ld_derivatives(double x) const;
  Complex m_ld_prime(Complex x) const;

  /// Inverse of the k-th branch restriction of m_LD, k in [1, M].
  /// Branch k < M maps onto the k-th gap of S_D; branch M onto the unbounded
  /// component (its range excludes y = 0). The result satisfies
  /// |m_LD(x) - y| <= 1e-10 max(1, |y|).
  double m_ld_inverse(int branch, double y) const;

  /// All branch inverses at once: element k-1 holds branch k's preimage.
  /// Branch M's slot is NaN when y == 0. For Dirac mixtures with M >= 3 this
  /// costs one companion-matrix eigensolve instead of M bracketed solves.
  std::vector<double> m_ld_inverse_all(double y) const;

  /// Quantile of D at level q in (0, 1).
  double quantile(double q) const;

private:
  WeightDistribution() = default;

  WeightKind kind_ = WeightKind::DiracMixture;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  std::vector<double> atoms_;
  std::vector<double> weights_;
  std::vector<WeightInterval> support_;
};

/// H-side transform t(u) = c ∫ τ/(τ-u) dH and its first two derivatives.
struct TTransform {
  double t;
  double dt;
  double d2t;
};

/// Evaluates t, t', t'' at u off the atoms of H. Throws std::domain_error at
/// an atom.
TTransform t_transform(const SpectralDistribution& h, double c, double u);

}  // namespace wesper
