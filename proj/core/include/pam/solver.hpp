#ifndef PAM_SOLVER_HPP
#define PAM_SOLVER_HPP

#include <cstdint>
#include <ostream>
#include <vector>

#include "pam/grid.hpp"
#include "pam/noise.hpp"

namespace pam {

// Time-stepping backends. Both apply the same Lie-Trotter split step:
// an exact exponential (Ito-corrected) multiplicative noise substep
// followed by a heat substep.
//
//  crank_nicolson: field stored as u; heat substep is an implicit
//    Crank-Nicolson solve with zero Dirichlet boundary. Positivity holds
//    for dt <= dx^2 (M-matrix inverse, nonnegative explicit half). Valid
//    while u stays inside double range, i.e. |x|^2/(2t) < ~700.
//
//  log_domain: field stored as log u; heat substep convolves with a
//    sampled Gaussian kernel via log-sum-exp. Unconditionally positive and
//    immune to underflow, so spatial scans can reach |x| where u ~ e^{-x^2/2t}
//    is far below double range. Wants dt close to dx^2 so the sampled kernel
//    resolves the Gaussian (aliasing error ~ e^{-2 pi^2 dt/dx^2}).
enum class Scheme { crank_nicolson, log_domain };

struct Field {
    GridSpec grid;
    double time = 0.0;
    std::vector<double> values;  // u per cell
};

struct RatioField {
    GridSpec grid;
    double time = 0.0;
    std::vector<double> values;  // U = u / p_t per cell, strictly positive
};

// Discrete delta: 1/dx at the center cell, zero elsewhere; total mass
// sum(values) * dx == 1 exactly. ConfigError if the grid has no exact center.
Field init_narrow_wedge(const GridSpec& grid);

struct RunOptions {
    Scheme scheme = Scheme::crank_nicolson;
    bool noise = true;
    // Simulate in a frame sliding at this velocity by shearing the noise
    // addresses. Galilean invariance of the equation makes the frame field a
    // narrow-wedge solution whose ratio field at frame coordinate z has the
    // law of U(t, v*t + z); this is how far-away points are sampled without
    // resolving the full domain.
    double frame_velocity = 0.0;
};

struct RunResult {
    Field u;
    RatioField ratio;
};

// Step the narrow-wedge initial condition to the grid horizon.
// Deterministic per (grid, stream, options). NumericError aborts the
// replica on non-finite values or collapse of the center cell below 1e-300
// (the delta's dormant far cells are legitimately zero and are not treated
// as underflow).
RunResult run(const GridSpec& grid, const NoiseStream& stream, const RunOptions& opts = {});

// Noise-off heat flow of the discrete delta (the deterministic oracle path).
Field run_deterministic(const GridSpec& grid, Scheme scheme = Scheme::crank_nicolson);

// log U per cell; NumericError on non-positive entries.
std::vector<double> log_field(const RatioField& ratio);

// Offset relating the two normalizations: log u + x^2/(2t) = log U - offset,
// offset = (1/2) log(2 pi t).
double log_kernel_offset(double t);

// Snapshot export: header "x,u,U,logU" and one row per cell.
void write_snapshot_csv(std::ostream& os, const RunResult& result);

// Single-step engines, exposed for tests and benchmarks.

class CrankNicolsonStepper {
  public:
    explicit CrankNicolsonStepper(const GridSpec& grid);
    // One full split step at step index k (noise substep first).
    void step(std::vector<double>& u, const NoiseStream& stream, long k,
              double frame_velocity, bool noise_on);
    void heat_substep(std::vector<double>& u);

  private:
    GridSpec grid_;
    double amp_, drift_, kappa_;
    std::vector<double> cprime_, inv_denom_;  // constant-matrix Thomas factors
    std::vector<double> rhs_, gauss_;
};

class LogDomainStepper {
  public:
    explicit LogDomainStepper(const GridSpec& grid, double frame_velocity = 0.0);
    void step(std::vector<double>& logu, const NoiseStream& stream, long k,
              double frame_velocity, bool noise_on);
    void heat_substep(std::vector<double>& logu);
    int kernel_half_width() const { return half_width_; }

  private:
    GridSpec grid_;
    double amp_, drift_;
    int half_width_;
    std::vector<double> log_weights_;
    std::vector<double> scratch_, gauss_;
    int alive_lo_, alive_hi_;
};

}  // namespace pam

#endif
