#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pam/errors.hpp"
#include "pam/kernel.hpp"
#include "pam/rng.hpp"

using namespace pam;

namespace {
constexpr double kTightRel = 1e-12;
}

TEST_CASE("heat kernel point values") {
    CHECK(kernel::heat_kernel(1.0, 0.0) == doctest::Approx(0.39894228040143268).epsilon(1e-14));
    CHECK(kernel::heat_kernel(2.0, 0.0) == doctest::Approx(0.28209479177387814).epsilon(1e-14));
    // e^{-1/2}/sqrt(2 pi), evaluated independently
    CHECK(kernel::heat_kernel(1.0, 1.0) == doctest::Approx(0.24197072451914335).epsilon(1e-14));
}

TEST_CASE("heat kernel symmetry, positivity, domain") {
    rng::SplitMix64 g(7);
    for (int i = 0; i < 200; ++i) {
        const double t = g.uniform(0.01, 10.0);
        const double x = g.uniform(-5.0, 5.0);
        const double v = kernel::heat_kernel(t, x);
        CHECK(v > 0.0);
        CHECK(v == kernel::heat_kernel(t, -x));
    }
    CHECK_THROWS_AS((void)kernel::heat_kernel(0.0, 1.0), DomainError);
    CHECK_THROWS_AS((void)kernel::heat_kernel(-1.0, 0.0), DomainError);
    CHECK(std::exp(kernel::log_heat_kernel(3.0, 1.5)) ==
          doctest::Approx(kernel::heat_kernel(3.0, 1.5)).epsilon(1e-13));
}

TEST_CASE("ratio identity examples") {
    auto r = kernel::kernel_ratio_identity(1.0, 2.0, 0.0, 0.0);
    CHECK(r.lhs == doctest::Approx(0.56418958354775628).epsilon(1e-12));
    CHECK(kernel::relative_gap(r.lhs, r.rhs) < kTightRel);

    r = kernel::kernel_ratio_identity(1.0, 2.0, 1.0, 0.0);
    CHECK(r.lhs == doctest::Approx(0.43939128946772240).epsilon(1e-12));
    CHECK(kernel::relative_gap(r.lhs, r.rhs) < kTightRel);

    r = kernel::kernel_ratio_identity(0.5, 1.0, 0.0, 1.0);
    CHECK(r.lhs == doctest::Approx(kernel::heat_kernel(0.25, 0.5)).epsilon(1e-12));
    CHECK(kernel::relative_gap(r.lhs, r.rhs) < kTightRel);

    CHECK_THROWS_AS((void)kernel::kernel_ratio_identity(2.0, 1.0, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS((void)kernel::kernel_ratio_identity(0.0, 1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("product identity examples") {
    auto r = kernel::kernel_product_identity(1.0, 1.0, 0.0);
    CHECK(r.lhs == doctest::Approx(0.15915494309189535).epsilon(1e-12));
    CHECK(r.rhs == doctest::Approx(0.15915494309189535).epsilon(1e-12));

    r = kernel::kernel_product_identity(1.0, 1.0, 1.0);
    const double p11 = kernel::heat_kernel(1.0, 1.0);
    CHECK(r.lhs == doctest::Approx(p11 * p11).epsilon(1e-13));

    r = kernel::kernel_product_identity(2.0, 3.0, 0.7);
    CHECK(r.lhs == doctest::Approx(0.052975620189251806).epsilon(1e-12));
    CHECK(kernel::relative_gap(r.lhs, r.rhs) < kTightRel);

    CHECK_THROWS_AS((void)kernel::kernel_product_identity(0.0, 1.0, 0.0), DomainError);
}

TEST_CASE("scaling identity examples") {
    auto r = kernel::kernel_scaling_identity(1.0, 2.0, 1.0);
    CHECK(r.lhs == doctest::Approx(0.053990966513188063).epsilon(1e-12));
    CHECK(kernel::relative_gap(r.lhs, r.rhs) < kTightRel);

    rng::SplitMix64 g(11);
    for (int i = 0; i < 50; ++i) {
        const double x = g.uniform(-4.0, 4.0);
        auto s = kernel::kernel_scaling_identity(1.0, 1.0, x);
        CHECK(s.lhs == s.rhs);  // alpha = 1 is the identity map
    }

    r = kernel::kernel_scaling_identity(4.0, 0.5, 2.0);
    CHECK(r.lhs == doctest::Approx(0.17603266338214974).epsilon(1e-12));
    CHECK(kernel::relative_gap(r.lhs, r.rhs) < kTightRel);

    CHECK_THROWS_AS((void)kernel::kernel_scaling_identity(1.0, 0.0, 1.0), DomainError);
}

TEST_CASE("identity suite: 1e4 random inputs within 1e-12, sabotage detected") {
    const auto rep = kernel::run_identity_suite(10000, 42);
    CHECK(rep.pass);
    CHECK(rep.max_gap_ratio <= 1e-12);
    CHECK(rep.max_gap_product <= 1e-12);
    CHECK(rep.max_gap_scaling <= 1e-12);

    const auto bad = kernel::run_identity_suite(1000, 42, 1e-9);
    CHECK_FALSE(bad.pass);
}

TEST_CASE("covariance integral: pi at x = 0, symmetry, tolerance vs closed form") {
    CHECK(kernel::covariance_integral_bound(1.0, 0.0) ==
          doctest::Approx(std::numbers::pi).epsilon(1e-10));
    CHECK(kernel::covariance_integral_bound(2.0, 0.0) ==
          doctest::Approx(std::numbers::pi).epsilon(1e-10));
    CHECK(kernel::covariance_integral_bound(1.0, 3.0) ==
          kernel::covariance_integral_bound(1.0, -3.0));

    // Independent oracle: B(t, x) = pi e^a erfc(sqrt(a)), a = x^2/(4t).
    struct Case {
        double t, x, value;
    };
    const Case cases[] = {
        {1.0, 1.0, 1.9342482622026671},
        {1.0, 5.0, 0.66226772466446408},
        {1.0, 10.0, 0.34778887662052782},
        {2.0, 0.5, 2.6014404259418771},
        {2.0, 16.0, 0.30864606061315858},
    };
    for (const auto& c : cases)
        CHECK(std::fabs(kernel::covariance_integral_bound(c.t, c.x) - c.value) < 1e-8);

    CHECK_THROWS_AS((void)kernel::covariance_integral_bound(0.0, 1.0), DomainError);
}

TEST_CASE("covariance integral decay: decreasing in |x|, x*B below 2 sqrt(pi t)") {
    const double cap1 = 2.0 * std::sqrt(std::numbers::pi);        // t = 1
    const double cap2 = 2.0 * std::sqrt(2.0 * std::numbers::pi);  // t = 2
    double prev = kernel::covariance_integral_bound(1.0, 0.5);
    for (double x = 1.0; x <= 100.0; x *= 1.3) {
        const double b = kernel::covariance_integral_bound(1.0, x);
        CHECK(b < prev);
        CHECK(x * b < cap1);
        prev = b;
    }
    for (double x = 1.0; x <= 100.0; x *= 1.7)
        CHECK(x * kernel::covariance_integral_bound(2.0, x) < cap2);
    // decays at least as fast as sqrt(4 pi t)/|x|
    CHECK(kernel::covariance_integral_bound(1.0, 10.0) < cap1 / 10.0);
}

TEST_CASE("theory constants") {
    const auto p = kernel::theory_constants(2.0);
    CHECK(p.tail_coefficient == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(p.lower_const == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(p.upper_const == doctest::Approx(0.82548181222365667).epsilon(1e-13));

    rng::SplitMix64 g(3);
    for (int i = 0; i < 1000; ++i) {
        const double t = g.uniform(0.01, 100.0);
        const auto q = kernel::theory_constants(t);
        CHECK(q.lower_const < q.upper_const);
        CHECK(q.tail_coefficient > 0.0);
    }
    CHECK_THROWS_AS((void)kernel::theory_constants(0.0), DomainError);
}

TEST_CASE("semigroup property under numerical convolution") {
    rng::SplitMix64 g(17);
    for (int rep = 0; rep < 12; ++rep) {
        const double s = g.uniform(0.1, 5.0);
        const double t = g.uniform(0.1, 5.0);
        const double x = g.uniform(-2.0, 2.0);
        const double dx = 0.01;
        const double reach = std::fabs(x) + 6.0 * std::sqrt(s + t) + 1.0;
        const int m = static_cast<int>(reach / dx);
        double conv = 0.0;
        for (int k = -m; k <= m; ++k) {
            const double y = k * dx;
            conv += kernel::heat_kernel(s, x - y) * kernel::heat_kernel(t, y) * dx;
        }
        const double exact = kernel::heat_kernel(s + t, x);
        CHECK(std::fabs(conv - exact) / exact < 1e-3);  // O(dx^2) quadrature error
    }
}
