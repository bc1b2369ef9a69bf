#ifndef PAM_GRID_HPP
#define PAM_GRID_HPP

#include <cmath>
#include <string>

#include "pam/errors.hpp"

namespace pam {

// Uniform space-time discretization of [-L, L] x [0, horizon].
//
// The spatial grid always has an odd cell count 2*floor(L/dx)+1 so the
// origin falls exactly on a cell center. The nominal time step dt must
// satisfy dt <= dx^2; the step actually taken is horizon/n_steps, which
// never exceeds dt.
struct GridSpec {
    double dx = 0.1;
    double dt = 4e-3;
    double half_width = 10.0;
    double horizon = 2.0;

    int half_cells() const { return static_cast<int>(std::floor(half_width / dx + 1e-12)); }
    int n_cells() const { return 2 * half_cells() + 1; }
    long n_steps() const { return static_cast<long>(std::ceil(horizon / dt - 1e-9)); }
    double step_dt() const { return horizon / static_cast<double>(n_steps()); }

    // Cell index -> coordinate of the cell center.
    double x_of(int i) const { return (i - half_cells()) * dx; }
    int center() const { return half_cells(); }

    // Nearest cell to x; IndexError if x lies outside the grid.
    int index_of(double x) const {
        const int i = half_cells() + static_cast<int>(std::lround(x / dx));
        if (i < 0 || i >= n_cells())
            throw IndexError("grid: coordinate " + std::to_string(x) + " outside [-L, L]");
        return i;
    }

    void validate() const {
        if (!(dx > 0.0) || !(dt > 0.0) || !(half_width > 0.0) || !(horizon > 0.0))
            throw ConfigError("grid: dx, dt, half_width, horizon must all be positive");
        if (dt > dx * dx * (1.0 + 1e-12))
            throw ConfigError("grid: stability requires dt <= dx^2 (dt=" + std::to_string(dt) +
                              ", dx^2=" + std::to_string(dx * dx) + ")");
        if (half_width < dx)
            throw ConfigError("grid: half_width smaller than one cell");
    }

    // Boundary-effect control for scans reaching |x| = r_max.
    void require_margin(double r_max) const {
        const double needed = r_max + 6.0 * std::sqrt(horizon);
        if (half_width + 1e-9 < needed)
            throw ConfigError("grid: half_width " + std::to_string(half_width) +
                              " < R_max + 6*sqrt(t) = " + std::to_string(needed));
    }

    bool operator==(const GridSpec&) const = default;
};

}  // namespace pam

#endif
