#include "fedgraph/chi2.hpp"

#include "fedgraph/errors.hpp"

#include <cmath>
#include <limits>

namespace fedgraph {

namespace {

constexpr int kMaxTerms = 10000;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// log(x^a e^-x / Gamma(a))
double log_prefactor(double a, double x) {
  return a * std::log(x) - x - std::lgamma(a);
}

// Series for P(a, x), valid for x < a + 1.
double series_p(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int n = 0; n < kMaxTerms; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(log_prefactor(a, x));
}

// Continued fraction for Q(a, x) (modified Lentz), valid for x >= a + 1.
double continued_fraction_q(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(log_prefactor(a, x)) * h;
}

void check_args(double a, double x) {
  if (!(a > 0.0)) throw ValidationError("incomplete gamma needs a > 0");
  if (!(x >= 0.0)) throw ValidationError("incomplete gamma needs x >= 0");
}

}  // namespace

double gamma_p(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return series_p(a, x);
  return 1.0 - continued_fraction_q(a, x);
}

double gamma_q(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - series_p(a, x);
  return continued_fraction_q(a, x);
}

double chi2_cdf(double dof, double x) { return gamma_p(0.5 * dof, 0.5 * x); }

double chi2_sf(double dof, double x) { return gamma_q(0.5 * dof, 0.5 * x); }

double chi2_quantile(double dof, double upper_tail) {
  if (!(dof > 0.0)) throw ValidationError("chi-square degrees of freedom must be positive");
  if (!(upper_tail > 0.0 && upper_tail < 1.0)) {
    throw ValidationError("chi-square tail probability must lie in (0, 1)");
  }
  const double a = 0.5 * dof;
  // Work with y = x / 2 and solve Q(a, y) = q. Q is decreasing in y.
  double lo = 0.0;
  double hi = std::max(1.0, a);
  while (gamma_q(a, hi) > upper_tail) {
    lo = hi;
    hi *= 2.0;
  }
  // Safeguarded Newton: fall back to bisection whenever a step leaves the bracket.
  double y = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double q = gamma_q(a, y);
    const double f = q - upper_tail;
    if (f > 0.0) {
      lo = y;
    } else {
      hi = y;
    }
    // dQ/dy = -y^{a-1} e^{-y} / Gamma(a)
    const double density = std::exp((a - 1.0) * std::log(y) - y - std::lgamma(a));
    double next = density > 0.0 ? y + f / density : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - y) <= 1e-14 * std::max(1.0, y) || hi - lo <= 1e-15 * hi) {
      y = next;
      break;
    }
    y = next;
  }
  return 2.0 * y;
}

}  // namespace fedgraph
