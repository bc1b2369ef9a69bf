#ifndef PAM_KERNEL_HPP
#define PAM_KERNEL_HPP

#include <cstddef>
#include <cstdint>

namespace pam::kernel {

// Gaussian heat kernel p_t(x) = (2 pi t)^{-1/2} exp(-x^2 / (2t)).
// DomainError if t <= 0.
double heat_kernel(double t, double x);
double log_heat_kernel(double t, double x);

struct PairResult {
    double lhs = 0.0;
    double rhs = 0.0;
};

// lhs = p_{t-s}(a) p_s(b) / p_t(a+b), rhs = p_{s(t-s)/t}(b - (s/t)(a+b)).
// Requires 0 < s < t.
PairResult kernel_ratio_identity(double s, double t, double a, double b);

// lhs = p_sigma(x) p_tau(x), rhs = p_{sigma+tau}(0) p_{sigma tau/(sigma+tau)}(x).
PairResult kernel_product_identity(double sigma, double tau, double x);

// lhs = p_t(alpha x), rhs = alpha^{-1} p_{t/alpha^2}(x).
PairResult kernel_scaling_identity(double t, double alpha, double x);

// Relative disagreement |lhs - rhs| / max(|lhs|, |rhs|, floor). The floor
// keeps deep-tail comparisons meaningful when both sides underflow.
double relative_gap(double lhs, double rhs);

// Integral bound on the log-ratio covariance:
//   B(t, x) = int_0^1 exp(-r x^2 / (4 t (1-r))) dr / sqrt(r (1-r)),
// evaluated by adaptive quadrature after the substitution r = sin^2(phi)
// that removes both endpoint singularities. B(t, 0) = pi; B(t, x) decays
// at least as fast as sqrt(4 pi t)/|x|. Absolute tolerance 1e-8.
double covariance_integral_bound(double t, double x);

struct TheoryParams {
    double t = 0.0;
    double tail_coefficient = 0.0;  // (4/3) sqrt(2/t)
    double lower_const = 0.0;       // (1/4) (t/2)^{1/3}
    double upper_const = 0.0;       // (3/4) (2t/3)^{1/3}
};

TheoryParams theory_constants(double t);

struct IdentitySuiteReport {
    std::size_t samples_per_identity = 0;
    double max_gap_ratio = 0.0;
    double max_gap_product = 0.0;
    double max_gap_scaling = 0.0;
    double tolerance = 1e-12;
    bool pass = false;
};

// Exercises all three identities on `n` random inputs each. `perturb`
// multiplies one side by (1 + perturb); nonzero values are a sabotage
// mode used to confirm the suite can fail.
IdentitySuiteReport run_identity_suite(std::size_t n, std::uint64_t seed,
                                       double perturb = 0.0);

}  // namespace pam::kernel

#endif
