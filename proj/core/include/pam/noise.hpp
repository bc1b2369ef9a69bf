#ifndef PAM_NOISE_HPP
#define PAM_NOISE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pam/grid.hpp"
#include "pam/rng.hpp"

namespace pam {

// Discretized space-time white noise, addressable by (seed, replica, step, cell).
//
// Each address yields one standard Gaussian, deterministically: the 256-bit
// tuple (seed, replica, step, cell-block) keys a Philox4x64-10 evaluation and
// the draw is the inverse normal CDF of one of its four output words. Distinct
// addresses are independent; replicas share no sequential state.
class NoiseStream {
  public:
    NoiseStream(std::uint64_t seed, std::uint64_t replica)
        : seed_(seed), replica_(replica) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t replica() const { return replica_; }

    // One N(0,1) draw. Cells may be negative (sliding-frame runs).
    double standard_normal(std::uint64_t step, std::int64_t cell) const {
        const std::uint64_t c = static_cast<std::uint64_t>(cell);
        const auto words = rng::philox4x64({replica_, step, c >> 2, 0}, seed_, kDomainTag);
        return rng::inverse_normal_cdf(rng::to_unit_open(words[c & 3]));
    }

    // Fill out[i] with the N(0,1) draw at cell first_cell + i, amortizing one
    // Philox evaluation over four adjacent cells.
    void fill_standard(std::uint64_t step, std::int64_t first_cell, std::span<double> out) const;

    // Spec surface: one noise slice for the given grid, values ~ N(0, 1/(dt*dx)),
    // cell i addressed as i - center so that slices match solver runs at frame
    // velocity zero. Throws IndexError if step >= n_steps.
    void sample_slice(const GridSpec& grid, std::uint64_t step, std::span<double> out) const;

  private:
    static constexpr std::uint64_t kDomainTag = 0x70616d6c61623031ULL;  // distinguishes noise keys
    std::uint64_t seed_;
    std::uint64_t replica_;
};

struct ScaledNoiseReport {
    double coarse_variance = 0.0;   // empirical variance of the rescaled field
    double expected_variance = 0.0; // 1 / ((2 dt)(2 dx)), white noise on the coarse grid
    double standard_error = 0.0;    // of the empirical variance
    std::size_t n = 0;
    bool pass = false;
};

// Verifies the variance scaling behind the identity that (1/2) xi(s/2, y/2) is
// again a space-time white noise: halving the amplitude of fine-grid cell
// averages and reading them as cells of a grid with doubled dx and dt must
// reproduce the coarse-grid white-noise variance.
ScaledNoiseReport scaled_noise_check(const NoiseStream& stream, const GridSpec& grid,
                                     std::size_t n_samples);

// Same check applied to caller-provided fine-grid values (test injection path).
ScaledNoiseReport scaled_noise_check_values(std::span<const double> fine_values,
                                            double dt, double dx);

}  // namespace pam

#endif
