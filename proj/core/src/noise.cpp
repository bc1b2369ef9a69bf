#include "pam/noise.hpp"

#include <cmath>
#include <string>

#include "pam/errors.hpp"

namespace pam {

void NoiseStream::fill_standard(std::uint64_t step, std::int64_t first_cell,
                                std::span<double> out) const {
    std::size_t i = 0;
    while (i < out.size()) {
        const std::uint64_t c = static_cast<std::uint64_t>(first_cell + static_cast<std::int64_t>(i));
        const auto words = rng::philox4x64({replica_, step, c >> 2, 0}, seed_, kDomainTag);
        std::uint64_t lane = c & 3;
        for (; lane < 4 && i < out.size(); ++lane, ++i)
            out[i] = rng::inverse_normal_cdf(rng::to_unit_open(words[lane]));
    }
}

void NoiseStream::sample_slice(const GridSpec& grid, std::uint64_t step,
                               std::span<double> out) const {
    if (step >= static_cast<std::uint64_t>(grid.n_steps()))
        throw IndexError("noise: step " + std::to_string(step) + " >= n_steps " +
                         std::to_string(grid.n_steps()));
    if (out.size() != static_cast<std::size_t>(grid.n_cells()))
        throw ContractError("noise: slice span size does not match grid");
    fill_standard(step, -static_cast<std::int64_t>(grid.center()), out);
    const double scale = 1.0 / std::sqrt(grid.step_dt() * grid.dx);
    for (double& v : out) v *= scale;
}

ScaledNoiseReport scaled_noise_check_values(std::span<const double> fine_values,
                                            double dt, double dx) {
    // A coarse cell of size (2dt) x (2dx) maps under (s,y) -> (s/2, y/2) to
    // exactly one fine cell, so the rescaled coarse average is half the fine
    // value and its variance must be 1/(4 dt dx) = 1/((2dt)(2dx)).
    ScaledNoiseReport rep;
    rep.n = fine_values.size();
    rep.expected_variance = 1.0 / (4.0 * dt * dx);
    if (rep.n < 2) return rep;
    double sum = 0.0, sum2 = 0.0;
    for (double v : fine_values) {
        const double c = 0.5 * v;
        sum += c;
        sum2 += c * c;
    }
    const double n = static_cast<double>(rep.n);
    const double mean = sum / n;
    rep.coarse_variance = (sum2 - n * mean * mean) / (n - 1.0);
    // Var of the sample variance of N(0, s^2) is 2 s^4 / (n-1).
    rep.standard_error = rep.expected_variance * std::sqrt(2.0 / (n - 1.0));
    rep.pass = std::fabs(rep.coarse_variance - rep.expected_variance) <= 3.0 * rep.standard_error;
    return rep;
}

ScaledNoiseReport scaled_noise_check(const NoiseStream& stream, const GridSpec& grid,
                                     std::size_t n_samples) {
    const std::size_t cells = static_cast<std::size_t>(grid.n_cells());
    const double scale = 1.0 / std::sqrt(grid.step_dt() * grid.dx);
    std::vector<double> slice(cells);
    std::vector<double> values;
    values.reserve(n_samples);
    std::uint64_t step = 0;
    while (values.size() < n_samples) {
        stream.fill_standard(step++, -static_cast<std::int64_t>(grid.center()), slice);
        for (std::size_t i = 0; i < cells && values.size() < n_samples; ++i)
            values.push_back(slice[i] * scale);
    }
    return scaled_noise_check_values(values, grid.step_dt(), grid.dx);
}

}  // namespace pam
