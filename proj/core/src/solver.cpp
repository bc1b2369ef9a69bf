#include "pam/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "pam/errors.hpp"
#include "pam/kernel.hpp"

namespace pam {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kCenterFloor = 1e-300;

std::int64_t noise_shift(long k, double dt, double v, double dx) {
    if (v == 0.0) return 0;
    return static_cast<std::int64_t>(std::llround(static_cast<double>(k) * dt * v / dx));
}

[[noreturn]] void abort_replica(const char* what, const NoiseStream& s, long k) {
    throw NumericError(std::string("solver: ") + what + " (seed=" + std::to_string(s.seed()) +
                       " replica=" + std::to_string(s.replica()) + " step=" + std::to_string(k) +
                       ")");
}

}  // namespace

Field init_narrow_wedge(const GridSpec& grid) {
    grid.validate();
    const int n = grid.n_cells();
    if (n % 2 == 0)
        throw ConfigError("solver: grid without an exact center cell");
    Field f;
    f.grid = grid;
    f.time = 0.0;
    f.values.assign(static_cast<std::size_t>(n), 0.0);
    f.values[static_cast<std::size_t>(grid.center())] = 1.0 / grid.dx;
    return f;
}

CrankNicolsonStepper::CrankNicolsonStepper(const GridSpec& grid) : grid_(grid) {
    grid.validate();
    const double dt = grid.step_dt();
    amp_ = std::sqrt(dt / grid.dx);
    drift_ = dt / (2.0 * grid.dx);
    kappa_ = dt / (4.0 * grid.dx * grid.dx);
    const std::size_t n = static_cast<std::size_t>(grid.n_cells());
    // (I - kappa T) with T = tridiag(1, -2, 1): diagonal 1 + 2 kappa,
    // off-diagonal -kappa. Forward elimination factors are field-independent.
    cprime_.resize(n);
    inv_denom_.resize(n);
    const double b = 1.0 + 2.0 * kappa_;
    double denom = b;
    cprime_[0] = -kappa_ / denom;
    inv_denom_[0] = 1.0 / denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = b + kappa_ * cprime_[i - 1];
        cprime_[i] = -kappa_ / denom;
        inv_denom_[i] = 1.0 / denom;
    }
    rhs_.resize(n);
    gauss_.resize(n);
}

void CrankNicolsonStepper::heat_substep(std::vector<double>& u) {
    const std::size_t n = u.size();
    // Explicit half with zero Dirichlet ghosts.
    const double diag = 1.0 - 2.0 * kappa_;
    for (std::size_t i = 0; i < n; ++i) {
        const double left = (i > 0) ? u[i - 1] : 0.0;
        const double right = (i + 1 < n) ? u[i + 1] : 0.0;
        rhs_[i] = diag * u[i] + kappa_ * (left + right);
    }
    // Implicit half: Thomas with precomputed factors.
    u[0] = rhs_[0] * inv_denom_[0];
    for (std::size_t i = 1; i < n; ++i)
        u[i] = (rhs_[i] + kappa_ * u[i - 1]) * inv_denom_[i];
    for (std::size_t i = n - 1; i-- > 0;)
        u[i] -= cprime_[i] * u[i + 1];
}

void CrankNicolsonStepper::step(std::vector<double>& u, const NoiseStream& stream, long k,
                                double frame_velocity, bool noise_on) {
    if (noise_on) {
        const std::int64_t shift =
            noise_shift(k, grid_.step_dt(), frame_velocity, grid_.dx);
        stream.fill_standard(static_cast<std::uint64_t>(k), shift - grid_.center(), gauss_);
        for (std::size_t i = 0; i < u.size(); ++i)
            u[i] *= std::exp(amp_ * gauss_[i] - drift_);
    }
    heat_substep(u);
}

LogDomainStepper::LogDomainStepper(const GridSpec& grid, double frame_velocity)
    : grid_(grid) {
    grid.validate();
    const double dt = grid.step_dt();
    const double dx = grid.dx;
    if (dt < 0.2 * dx * dx)
        throw ConfigError("solver: log-domain scheme wants dt in [0.2 dx^2, dx^2] so the "
                          "sampled heat kernel resolves the Gaussian");
    amp_ = std::sqrt(dt / dx);
    drift_ = dt / (2.0 * dx);
    // The per-step kernel must cover the drift of the steepest exponential
    // profile the run can hold (slope up to L/t plus the sliding frame).
    const double vmax = grid.half_width / grid.horizon + std::fabs(frame_velocity);
    half_width_ = static_cast<int>(std::ceil((vmax * dt + 8.0 * std::sqrt(dt)) / dx));
    const std::size_t m = static_cast<std::size_t>(2 * half_width_ + 1);
    std::vector<double> w(m);
    double sum = 0.0;
    for (int j = -half_width_; j <= half_width_; ++j) {
        const double y = j * dx;
        w[static_cast<std::size_t>(j + half_width_)] = std::exp(-y * y / (2.0 * dt));
        sum += w[static_cast<std::size_t>(j + half_width_)];
    }
    log_weights_.resize(m);
    for (std::size_t j = 0; j < m; ++j) log_weights_[j] = std::log(w[j] / sum);
    scratch_.resize(static_cast<std::size_t>(grid.n_cells()));
    gauss_.resize(static_cast<std::size_t>(grid.n_cells()));
    alive_lo_ = grid.center();
    alive_hi_ = grid.center();
}

void LogDomainStepper::heat_substep(std::vector<double>& logu) {
    const int n = static_cast<int>(logu.size());
    const int K = half_width_;
    const int lo = std::max(0, alive_lo_ - K);
    const int hi = std::min(n - 1, alive_hi_ + K);
    for (int i = lo; i <= hi; ++i) {
        const int jlo = std::max(-K, -i);
        const int jhi = std::min(K, n - 1 - i);
        double m = kNegInf;
        for (int j = jlo; j <= jhi; ++j)
            m = std::max(m, log_weights_[static_cast<std::size_t>(j + K)] +
                                logu[static_cast<std::size_t>(i + j)]);
        if (m == kNegInf) {
            scratch_[static_cast<std::size_t>(i)] = kNegInf;
            continue;
        }
        double acc = 0.0;
        for (int j = jlo; j <= jhi; ++j)
            acc += std::exp(log_weights_[static_cast<std::size_t>(j + K)] +
                            logu[static_cast<std::size_t>(i + j)] - m);
        scratch_[static_cast<std::size_t>(i)] = m + std::log(acc);
    }
    for (int i = lo; i <= hi; ++i) logu[static_cast<std::size_t>(i)] = scratch_[static_cast<std::size_t>(i)];
    alive_lo_ = lo;
    alive_hi_ = hi;
}

void LogDomainStepper::step(std::vector<double>& logu, const NoiseStream& stream, long k,
                            double frame_velocity, bool noise_on) {
    if (noise_on) {
        const std::int64_t shift =
            noise_shift(k, grid_.step_dt(), frame_velocity, grid_.dx);
        const std::size_t lo = static_cast<std::size_t>(alive_lo_);
        const std::size_t count = static_cast<std::size_t>(alive_hi_ - alive_lo_ + 1);
        stream.fill_standard(static_cast<std::uint64_t>(k),
                             shift - grid_.center() + alive_lo_,
                             std::span<double>(gauss_.data(), count));
        for (std::size_t i = 0; i < count; ++i)
            logu[lo + i] += amp_ * gauss_[i] - drift_;
    }
    heat_substep(logu);
}

namespace {

RunResult finalize_from_u(const GridSpec& grid, std::vector<double>&& u) {
    RunResult out;
    out.u.grid = grid;
    out.u.time = grid.horizon;
    out.u.values = std::move(u);
    out.ratio.grid = grid;
    out.ratio.time = grid.horizon;
    const int n = grid.n_cells();
    out.ratio.values.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.ratio.values[static_cast<std::size_t>(i)] =
            out.u.values[static_cast<std::size_t>(i)] /
            kernel::heat_kernel(grid.horizon, grid.x_of(i));
    return out;
}

RunResult finalize_from_log(const GridSpec& grid, const std::vector<double>& logu) {
    RunResult out;
    out.u.grid = grid;
    out.u.time = grid.horizon;
    out.ratio.grid = grid;
    out.ratio.time = grid.horizon;
    const int n = grid.n_cells();
    out.u.values.resize(static_cast<std::size_t>(n));
    out.ratio.values.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::size_t s = static_cast<std::size_t>(i);
        out.u.values[s] = std::exp(logu[s]);  // may flush to zero far out; the ratio never does
        out.ratio.values[s] =
            std::exp(logu[s] - kernel::log_heat_kernel(grid.horizon, grid.x_of(i)));
    }
    return out;
}

}  // namespace

RunResult run(const GridSpec& grid, const NoiseStream& stream, const RunOptions& opts) {
    grid.validate();
    const long steps = grid.n_steps();
    const std::size_t center = static_cast<std::size_t>(grid.center());

    if (opts.scheme == Scheme::crank_nicolson) {
        // u must stay inside double range out to the boundary.
        if (kernel::log_heat_kernel(grid.horizon, grid.half_width) < -600.0)
            throw ConfigError("solver: domain too wide for the linear-space scheme "
                              "(u underflows near the boundary); use Scheme::log_domain");
        Field f = init_narrow_wedge(grid);
        CrankNicolsonStepper stepper(grid);
        for (long k = 0; k < steps; ++k) {
            stepper.step(f.values, stream, k, opts.frame_velocity, opts.noise);
            double sum = 0.0;
            for (double v : f.values) sum += v;
            if (!std::isfinite(sum)) abort_replica("non-finite field value", stream, k);
            if (!(f.values[center] > kCenterFloor))
                abort_replica("center cell collapsed below numeric floor", stream, k);
        }
        return finalize_from_u(grid, std::move(f.values));
    }

    std::vector<double> logu(static_cast<std::size_t>(grid.n_cells()), kNegInf);
    logu[center] = -std::log(grid.dx);
    LogDomainStepper stepper(grid, opts.frame_velocity);
    for (long k = 0; k < steps; ++k) {
        stepper.step(logu, stream, k, opts.frame_velocity, opts.noise);
        for (double v : logu)
            if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
                abort_replica("non-finite log-field value", stream, k);
        if (!(logu[center] > std::log(kCenterFloor)))
            abort_replica("center cell collapsed below numeric floor", stream, k);
    }
    return finalize_from_log(grid, logu);
}

Field run_deterministic(const GridSpec& grid, Scheme scheme) {
    NoiseStream unused(0, 0);
    RunOptions opts;
    opts.scheme = scheme;
    opts.noise = false;
    return run(grid, unused, opts).u;
}

std::vector<double> log_field(const RatioField& ratio) {
    std::vector<double> out(ratio.values.size());
    for (std::size_t i = 0; i < ratio.values.size(); ++i) {
        if (!(ratio.values[i] > 0.0))
            throw NumericError("solver: log of non-positive ratio value at cell " +
                               std::to_string(i));
        out[i] = std::log(ratio.values[i]);
    }
    return out;
}

double log_kernel_offset(double t) {
    if (!(t > 0.0)) throw DomainError("solver: offset needs t > 0");
    return 0.5 * std::log(2.0 * std::numbers::pi * t);
}

void write_snapshot_csv(std::ostream& os, const RunResult& result) {
    os << "x,u,U,logU\n";
    char buf[128];
    const int n = result.u.grid.n_cells();
    for (int i = 0; i < n; ++i) {
        const std::size_t s = static_cast<std::size_t>(i);
        const double u_val = result.u.values[s];
        const double ratio = result.ratio.values[s];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", result.u.grid.x_of(i),
                      u_val, ratio, ratio > 0.0 ? std::log(ratio) : kNegInf);
        os << buf;
    }
}

}  // namespace pam
