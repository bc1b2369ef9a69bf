#include <cmath>

#include "doctest.h"
#include "pam/rng.hpp"

using namespace pam;

TEST_CASE("philox is a pure function of counter and key") {
    const auto a = rng::philox4x64({1, 2, 3, 4}, 5, 6);
    const auto b = rng::philox4x64({1, 2, 3, 4}, 5, 6);
    CHECK(a == b);

    const auto c = rng::philox4x64({1, 2, 3, 5}, 5, 6);
    CHECK(a != c);
    const auto d = rng::philox4x64({1, 2, 3, 4}, 5, 7);
    CHECK(a != d);

    // Output words should not be degenerate.
    CHECK(a[0] != a[1]);
    CHECK(a[2] != a[3]);
}

TEST_CASE("unit interval mapping stays strictly inside (0,1)") {
    CHECK(rng::to_unit_open(0) > 0.0);
    CHECK(rng::to_unit_open(~0ULL) < 1.0);
    CHECK(rng::to_unit_open(1ULL << 63) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("inverse normal CDF point values and antisymmetry") {
    CHECK(rng::inverse_normal_cdf(0.5) == 0.0);
    CHECK(rng::inverse_normal_cdf(0.975) == doctest::Approx(1.9599639845400545).epsilon(1e-12));
    CHECK(rng::inverse_normal_cdf(0.999) == doctest::Approx(3.0902323061678136).epsilon(1e-12));
    rng::SplitMix64 g(1);
    for (int i = 0; i < 200; ++i) {
        const double p = g.uniform(1e-12, 1.0 - 1e-12);
        CHECK(rng::inverse_normal_cdf(p) ==
              doctest::Approx(-rng::inverse_normal_cdf(1.0 - p)).epsilon(1e-10));
    }
}

TEST_CASE("inverse normal CDF round-trips against erfc") {
    // Independent oracle: Phi(x) = erfc(-x/sqrt(2))/2 from libm.
    auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    for (double u = 1e-10; u < 1.0; u = (u < 0.5) ? u * 1.7 : 1.0 - (1.0 - u) / 1.7) {
        const double x = rng::inverse_normal_cdf(u);
        CHECK(std::fabs(phi(x) - u) / u < 1e-12);
        if (1.0 - u < 1e-9) break;
    }
}

TEST_CASE("splitmix is deterministic") {
    rng::SplitMix64 a(99), b(99);
    for (int i = 0; i < 16; ++i) CHECK(a.next() == b.next());
}
