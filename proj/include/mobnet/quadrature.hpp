#pragma once

// Globally adaptive Gauss-Kronrod (7/15) integration on an interval, with
// optional interior breakpoints. A breakpoint may carry a non-integer exponent
// beta in (-1, 1): the integrand is then assumed to behave like |x - p|^beta
// next to it, and the two adjacent pieces are integrated after the change of
// variables x = p +- h w^q that smooths it out (q = 1/(1+beta) for poles,
// 1/beta for cusps).

#include <functional>
#include <vector>

namespace mobnet {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
  bool converged = true;
};

struct Breakpoint {
  double x = 0.0;
  double exponent = 0.0;  // local |x - p|^exponent behaviour; 0 or >= 1 means a plain split
};

using Integrand = std::function<double(double)>;

// The integrand seen from a knot p: value at p + d, for callers that can
// evaluate the singular factor from d without cancellation.
using OffsetIntegrand = std::function<double(double p, double d)>;

// One GK15 panel on [a, b]: value and |G7 - K15| error estimate.
QuadResult gauss_kronrod15(const Integrand& f, double a, double b);

QuadResult integrate_adaptive(const Integrand& f, double a, double b, double rel_tol,
                              double abs_tol = 0.0, int max_intervals = 4000);

// Splits [a, b] at the breakpoints inside it and sums the pieces. When
// `near` is given, pieces next to a singular knot are evaluated through it.
QuadResult integrate_with_breakpoints(const Integrand& f, double a, double b,
                                      std::vector<Breakpoint> points, double rel_tol,
                                      double abs_tol = 0.0, int max_intervals = 4000,
                                      const OffsetIntegrand* near = nullptr);

}  // namespace mobnet
