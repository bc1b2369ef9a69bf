#ifndef PAM_RNG_HPP
#define PAM_RNG_HPP

#include <array>
#include <cstdint>

namespace pam::rng {

// Philox4x64-10 counter-based generator (Salmon et al., SC'11).
// A pure function of (counter, key): no sequential state, so any address
// can be evaluated independently and reproducibly from any thread.
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::uint64_t key0, std::uint64_t key1);

// Map a 64-bit word to the open interval (0, 1), using the top 53 bits.
inline double to_unit_open(std::uint64_t w) {
    return static_cast<double>(w >> 11) * 0x1p-53 + 0x1p-54;
}

// Inverse of the standard normal CDF (Wichura's AS241, double precision).
double inverse_normal_cdf(double p);

// Convenience: one uniform stream for test-side sampling (thresholds,
// random identity inputs). Deterministic; not used by the solver path.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return to_unit_open(next()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() { return inverse_normal_cdf(uniform()); }

  private:
    std::uint64_t state_;
};

}  // namespace pam::rng

#endif
