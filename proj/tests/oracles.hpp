// Test-only oracles, independent of the library's solver paths.
#pragma once

#include <cmath>
#include <complex>
#include <functional>

namespace oracle {

using Complex = std::complex<double>;

// Marcenko-Pastur law with ratio c (dimension/samples), unit population
// variance. X(z) solves the quadratic z X^2 + (z+1-c) X + 1 = 0; the upper
// half-plane root is the companion-transform branch.
struct MarcenkoPastur {
  double c;

  double edge_lo() const {
    double s = std::sqrt(c);
    return (1.0 - s) * (1.0 - s);
  }
  double edge_hi() const {
    double s = std::sqrt(c);
    return (1.0 + s) * (1.0 + s);
  }
  double density(double x) const {
    double a = edge_lo(), b = edge_hi();
    if (x <= a || x >= b) return 0.0;
    return std::sqrt((b - x) * (x - a)) / (2.0 * M_PI * c * x);
  }
  Complex x_of_z(Complex z) const {
    Complex b = z + Complex(1.0 - c, 0.0);
    Complex disc = std::sqrt(b * b - 4.0 * z);
    Complex r1 = (-b + disc) / (2.0 * z);
    Complex r2 = (-b - disc) / (2.0 * z);
    return (r1.imag() >= r2.imag()) ? r1 : r2;
  }
  // limit from above; eta error is O(1e-9)
  Complex x_check(double lambda) const { return x_of_z(Complex(lambda, 1e-9)); }
  Complex m_of_z(Complex z) const { return -1.0 / (z * (x_of_z(z) + 1.0)); }
};

// Composite Simpson rule on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        int n = 4000) {
  if (n % 2 != 0) ++n;
  double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) {
    acc += f(a + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
  }
  return acc * h / 3.0;
}

inline double fd_first(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double fd_second(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

}  // namespace oracle
