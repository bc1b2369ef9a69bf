#include "pam/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pam/errors.hpp"
#include "pam/rng.hpp"

namespace pam::kernel {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive(double v, const char* name) {
    if (!(v > 0.0))
        throw DomainError(std::string("kernel: ") + name + " must be positive, got " +
                          std::to_string(v));
}

}  // namespace

double heat_kernel(double t, double x) {
    require_positive(t, "t");
    return std::exp(-x * x / (2.0 * t)) / std::sqrt(2.0 * kPi * t);
}

double log_heat_kernel(double t, double x) {
    require_positive(t, "t");
    return -x * x / (2.0 * t) - 0.5 * std::log(2.0 * kPi * t);
}

PairResult kernel_ratio_identity(double s, double t, double a, double b) {
    require_positive(t, "t");
    if (!(s > 0.0) || !(s < t))
        throw DomainError("kernel: ratio identity needs 0 < s < t");
    PairResult r;
    r.lhs = heat_kernel(t - s, a) * heat_kernel(s, b) / heat_kernel(t, a + b);
    r.rhs = heat_kernel(s * (t - s) / t, b - (s / t) * (a + b));
    return r;
}

PairResult kernel_product_identity(double sigma, double tau, double x) {
    require_positive(sigma, "sigma");
    require_positive(tau, "tau");
    PairResult r;
    r.lhs = heat_kernel(sigma, x) * heat_kernel(tau, x);
    r.rhs = heat_kernel(sigma + tau, 0.0) * heat_kernel(sigma * tau / (sigma + tau), x);
    return r;
}

PairResult kernel_scaling_identity(double t, double alpha, double x) {
    require_positive(t, "t");
    require_positive(alpha, "alpha");
    PairResult r;
    r.lhs = heat_kernel(t, alpha * x);
    r.rhs = heat_kernel(t / (alpha * alpha), x) / alpha;
    return r;
}

double relative_gap(double lhs, double rhs) {
    constexpr double kFloor = 1e-290;
    const double scale = std::max({std::fabs(lhs), std::fabs(rhs), kFloor});
    return std::fabs(lhs - rhs) / scale;
}

namespace {

// After r = sin^2(phi) the integrand of B(t, x) is 2 exp(-c tan^2 phi) with
// c = x^2/(4t), smooth on [0, pi/2). Adaptive Simpson with recursion control.
double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double integrand(double c, double phi) {
    const double tn = std::tan(phi);
    return 2.0 * std::exp(-c * tn * tn);
}

double adaptive(double c, double a, double b, double fa, double fm, double fb,
                double whole, double tol, int depth) {
    if (depth > 60)
        throw NumericError("kernel: covariance quadrature failed to converge (depth > 60, c=" +
                           std::to_string(c) + ")");
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = integrand(c, lm), frm = integrand(c, rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    if (std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive(c, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           adaptive(c, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

}  // namespace

double covariance_integral_bound(double t, double x) {
    require_positive(t, "t");
    const double c = x * x / (4.0 * t);
    // tan(phi) overflows at pi/2; the integrand is exp(-c tan^2) ~ 0 there for
    // c > 0 and exactly 1 for c = 0, so stop a hair short and add the sliver.
    const double hi = std::nextafter(kPi / 2.0, 0.0);
    const double fa = integrand(c, 0.0);
    const double fb = (c == 0.0) ? 2.0 : 0.0;
    const double fm = integrand(c, 0.5 * hi);
    const double whole = simpson(0.0, hi, fa, fm, fb);
    return adaptive(c, 0.0, hi, fa, fm, fb, whole, 1e-8, 0);
}

TheoryParams theory_constants(double t) {
    require_positive(t, "t");
    TheoryParams p;
    p.t = t;
    p.tail_coefficient = (4.0 / 3.0) * std::sqrt(2.0 / t);
    p.lower_const = 0.25 * std::cbrt(t / 2.0);
    p.upper_const = 0.75 * std::cbrt(2.0 * t / 3.0);
    return p;
}

IdentitySuiteReport run_identity_suite(std::size_t n, std::uint64_t seed, double perturb) {
    IdentitySuiteReport rep;
    rep.samples_per_identity = n;
    rng::SplitMix64 g(seed);
    const double bump = 1.0 + perturb;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = g.uniform(0.05, 5.0);
        const double s = t * g.uniform(0.05, 0.95);
        // Spatial arguments on their diffusive scales keep all three kernels
        // of the left side inside double range; wider offsets only underflow
        // both sides together, which the floored comparison treats as equal.
        const double a = 3.0 * std::sqrt(t - s) * g.uniform(-1.0, 1.0);
        const double b = 3.0 * std::sqrt(s) * g.uniform(-1.0, 1.0);
        auto r = kernel_ratio_identity(s, t, a, b);
        rep.max_gap_ratio = std::max(rep.max_gap_ratio, relative_gap(r.lhs * bump, r.rhs));

        const double sigma = g.uniform(0.05, 5.0);
        const double tau = g.uniform(0.05, 5.0);
        auto p = kernel_product_identity(sigma, tau, g.uniform(-4.0, 4.0));
        rep.max_gap_product = std::max(rep.max_gap_product, relative_gap(p.lhs * bump, p.rhs));

        const double alpha = g.uniform(0.1, 4.0);
        auto sc = kernel_scaling_identity(g.uniform(0.05, 5.0), alpha, g.uniform(-4.0, 4.0));
        rep.max_gap_scaling = std::max(rep.max_gap_scaling, relative_gap(sc.lhs * bump, sc.rhs));
    }
    rep.pass = rep.max_gap_ratio <= rep.tolerance && rep.max_gap_product <= rep.tolerance &&
               rep.max_gap_scaling <= rep.tolerance;
    return rep;
}

}  // namespace pam::kernel
