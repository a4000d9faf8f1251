#include "mobnet/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>

namespace mobnet {

namespace {

// Kronrod abscissae and weights for the 15-point rule, Gauss 7-point weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

bool is_singular(double beta) { return beta > -1.0 && beta < 1.0 && beta != 0.0; }

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

}  // namespace

QuadResult gauss_kronrod15(const Integrand& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    kron += kWgk[j] * s;
    if (j % 2 == 1) gauss += kWg[j / 2] * s;
  }
  QuadResult r;
  r.value = kron * h;
  r.error = std::abs((kron - gauss) * h);
  r.intervals = 1;
  return r;
}

QuadResult integrate_adaptive(const Integrand& f, double a, double b, double rel_tol,
                              double abs_tol, int max_intervals) {
  QuadResult out;
  if (a == b) return out;
  std::priority_queue<Panel> heap;
  const auto first = gauss_kronrod15(f, a, b);
  heap.push({a, b, first.value, first.error});
  double total = first.value;
  double err = first.error;
  int count = 1;
  while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (count >= max_intervals) {
      out.converged = false;
      break;
    }
    const Panel p = heap.top();
    const double mid = 0.5 * (p.a + p.b);
    if (!(mid > p.a && mid < p.b)) {
      out.converged = false;  // interval exhausted at double resolution
      break;
    }
    heap.pop();
    const auto left = gauss_kronrod15(f, p.a, mid);
    const auto right = gauss_kronrod15(f, mid, p.b);
    total += left.value + right.value - p.value;
    err += left.error + right.error - p.error;
    heap.push({p.a, mid, left.value, left.error});
    heap.push({mid, p.b, right.value, right.error});
    ++count;
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = err;
  out.intervals = count;
  if (err <= std::max(abs_tol, rel_tol * std::abs(total))) out.converged = true;
  return out;
}

QuadResult integrate_with_breakpoints(const Integrand& f, double a, double b,
                                      std::vector<Breakpoint> points, double rel_tol,
                                      double abs_tol, int max_intervals, const OffsetIntegrand* near) {
  std::erase_if(points, [&](const Breakpoint& p) { return !(p.x >= a && p.x <= b); });
  std::sort(points.begin(), points.end(), [](const auto& l, const auto& r) { return l.x < r.x; });
  // Knots: a, interior breakpoints, b. Endpoint exponents come from points at a or b.
  std::vector<Breakpoint> knots{{a, 0.0}};
  for (const auto& p : points) {
    if (p.x == knots.back().x) {
      double& e = knots.back().exponent;
      if (is_singular(p.exponent) && (!is_singular(e) || p.exponent < e)) e = p.exponent;
    } else {
      knots.push_back(p);
    }
  }
  if (knots.back().x != b) knots.push_back({b, 0.0});

  // Two singular knots a distance d apart make each other near-singular on the
  // far side; grade the mesh geometrically there (d, 4d, 16d, ...).
  std::vector<Breakpoint> graded;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    if (!is_singular(knots[i].exponent) || !is_singular(knots[i + 1].exponent)) continue;
    const double d = knots[i + 1].x - knots[i].x;
    if (i > 0) {
      for (double s = d; knots[i].x - s > knots[i - 1].x + s; s *= 4.0) graded.push_back({knots[i].x - s, 0.0});
    }
    if (i + 2 < knots.size()) {
      for (double s = d; knots[i + 1].x + s < knots[i + 2].x - s; s *= 4.0)
        graded.push_back({knots[i + 1].x + s, 0.0});
    }
  }
  if (!graded.empty()) {
    knots.insert(knots.end(), graded.begin(), graded.end());
    std::sort(knots.begin(), knots.end(), [](const auto& l, const auto& r) { return l.x < r.x; });
  }

  QuadResult out;
  const int pieces = static_cast<int>(knots.size()) - 1;
  if (pieces <= 0) return out;
  const int budget = std::max(50, max_intervals / std::max(1, 2 * pieces));
  auto add = [&](const QuadResult& r) {
    out.value += r.value;
    out.error += r.error;
    out.intervals += r.intervals;
    out.converged = out.converged && r.converged;
  };
  // Piece-level tolerances are absolute, from a rough first pass.
  double scale = 0.0;
  for (int i = 0; i < pieces; ++i) {
    scale += std::abs(gauss_kronrod15(f, knots[i].x, knots[i + 1].x).value);
  }
  const double piece_abs = std::max(abs_tol, rel_tol * scale) / (2.0 * pieces);

  auto singular_half = [&](double p, double h, double beta) {
    // x = p + h w^q, w in [0,1], h may be negative. q flattens |x - p|^beta:
    // the Jacobian absorbs a pole, and a root-type cusp becomes linear in w.
    const double q = beta < 0.0 ? 1.0 / (1.0 + beta) : 1.0 / beta;
    Integrand g = [&, p, h, q](double w) {
      if (near) {
        const double v = (*near)(p, h * std::pow(w, q)) * std::abs(h) * q * std::pow(w, q - 1.0);
        return std::isfinite(v) ? v : 0.0;
      }
      double x = p + h * std::pow(w, q);
      if (x == p) x = std::nextafter(p, p + h);  // w^q below the resolution of p
      const double v = f(x) * std::abs(h) * q * std::pow(w, q - 1.0);
      // The transformed integrand is bounded; an overflow here only means f
      // was evaluated on its singular point after rounding.
      return std::isfinite(v) ? v : 0.0;
    };
    return integrate_adaptive(g, 0.0, 1.0, rel_tol, piece_abs, budget);
  };

  for (int i = 0; i < pieces; ++i) {
    const double lo = knots[i].x;
    const double hi = knots[i + 1].x;
    if (!(hi > lo)) continue;
    const bool sing_lo = is_singular(knots[i].exponent);
    const bool sing_hi = is_singular(knots[i + 1].exponent);
    if (!sing_lo && !sing_hi) {
      add(integrate_adaptive(f, lo, hi, rel_tol, piece_abs, budget));
      continue;
    }
    const double mid = 0.5 * (lo + hi);
    if (sing_lo)
      add(singular_half(lo, mid - lo, knots[i].exponent));
    else
      add(integrate_adaptive(f, lo, mid, rel_tol, piece_abs, budget));
    if (sing_hi)
      add(singular_half(hi, mid - hi, knots[i + 1].exponent));
    else
      add(integrate_adaptive(f, mid, hi, rel_tol, piece_abs, budget));
  }
  if (!out.converged && out.error <= std::max(abs_tol, rel_tol * std::abs(out.value))) {
    out.converged = true;
  }
  return out;
}

}  // namespace mobnet
