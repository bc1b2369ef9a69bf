#ifndef PAM_ESTIMATOR_HPP
#define PAM_ESTIMATOR_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pam/solver.hpp"

namespace pam {

// Per-replica observations of log U(t, x) at labelled spatial points.
// Rows are keyed by replica id and kept sorted, which makes merging exact:
// statistics computed from a merged set are bit-identical no matter how the
// replicas were partitioned across workers or checkpoints.
struct SampleSet {
    std::vector<double> points;
    std::vector<std::uint32_t> replica_ids;  // ascending, unique
    std::vector<double> log_u;               // row-major, n() x points.size()

    std::size_t n() const { return replica_ids.size(); }
    std::size_t width() const { return points.size(); }
    double at(std::size_t row, std::size_t col) const { return log_u[row * width() + col]; }
    std::span<const double> row(std::size_t r) const {
        return {log_u.data() + r * width(), width()};
    }
    std::vector<double> column(std::size_t col) const;
    std::size_t point_index(double x) const;  // ContractError if absent

    // ContractError on mismatched point labels or overlapping replica ids.
    static SampleSet merged(const SampleSet& a, const SampleSet& b);
};

// ---- upper tail -----------------------------------------------------------

struct TailFit {
    std::vector<double> thresholds;
    std::vector<long> counts;          // #{sample >= threshold}
    std::vector<double> survival;      // counts / n
    std::vector<double> survival_se;
    std::vector<bool> usable;          // count >= min_tail_count and < n
    double coefficient = 0.0;          // -slope of log P vs theta^{3/2}
    double ci_lo = 0.0, ci_hi = 0.0;   // bootstrap percentile CI
    double intercept = 0.0;
    std::size_t n = 0;
    std::size_t n_usable = 0;
};

// Least-squares fit of log P(log U >= theta) against theta^{3/2}.
// InsufficientDataError with fewer than 3 usable thresholds.
TailFit tail_fit(std::span<const double> samples, std::span<const double> thresholds,
                 long min_tail_count = 30, std::size_t n_bootstrap = 400,
                 std::uint64_t bootstrap_seed = 0x7a11f17u);

// Calibration generator with exact survival P(X >= theta) = exp(-theta^{3/2}).
std::vector<double> synthetic_tail_samples(std::size_t n, std::uint64_t seed);

// ---- covariance decay -----------------------------------------------------

struct CovarianceEstimate {
    double value = 0.0;
    double se = 0.0;  // delete-one jackknife
    std::size_t n = 0;
};

// Unbiased covariance of paired (same-replica) observations.
CovarianceEstimate log_covariance(std::span<const double> a, std::span<const double> b);

// ---- association / positive quadrant dependence ---------------------------

struct GapReport {
    int grid = 0;                      // cells per margin
    std::vector<double> a_cuts, b_cuts;
    std::vector<double> gap;           // row-major grid x grid
    std::vector<double> se;            // null (independence) standard error per cell
    double min_normalized = 0.0;       // min over cells of gap / se
    double sup_gap = 0.0;
    double covariance = 0.0, covariance_se = 0.0;
    double ratio = 0.0;                // sup_gap / cov^{1/3} when cov > 0
    bool pqd_pass = false;             // every cell >= -3 se
    bool covariance_anomaly = false;   // cov < -3 se: association violation
};

// Empirical sup over a quantile grid of P{X<=a, Y<=b} - P{X<=a} P{Y<=b}.
GapReport cdf_gap_test(std::span<const double> x_samples,
                       std::span<const double> zero_samples, int grid_per_margin = 20);

struct AssociationPair {
    std::string h1, h2;
    double covariance = 0.0;
    double se = 0.0;
};

struct AssociationReport {
    std::vector<AssociationPair> pairs;
    double min_normalized = 0.0;  // min cov/se
    bool pass = false;            // every pair >= -3 se
};

// Covariances of a fixed library of coordinatewise nondecreasing functionals
// (projections, maxima over subsets, a softplus sum): association predicts
// every one of them nonnegative.
AssociationReport association_test(const SampleSet& samples);

// ---- density boundedness --------------------------------------------------

struct DensityReport {
    double bandwidth = 0.0;
    double sup = 0.0, sup_half = 0.0;
    double rel_change = 0.0;
    bool stable = false;  // sup moves < 10% under bandwidth halving
    std::vector<double> grid, density, density_half;
    // Upper-tail shape: P(sample >= y) against c1 exp(-c2 y^{3/2}).
    std::vector<double> tail_y, tail_survival;
    std::vector<long> tail_counts;
    std::vector<bool> tail_usable;
    double tail_exponent = 0.0;  // slope of log(-log P) vs log y, ~ 3/2
    double tail_c2 = 0.0, tail_c1 = 0.0;
    bool exponent_in_range = false;  // [1.2, 1.8]
    std::size_t n = 0;
};

// Gaussian KDE with halving-stability report plus the upper-tail shape fit.
// bandwidth: engaged if provided (DomainError if <= 0), else Silverman.
DensityReport density_boundedness(std::span<const double> samples,
                                  std::optional<double> bandwidth = std::nullopt,
                                  std::span<const double> tail_y_grid = {});

// ---- spatial maximum ------------------------------------------------------

// Per-replica M(R) = max over grid cells |x| <= R of (log U - offset) for each
// radius, offset = log_kernel_offset(t). Radii must be ascending and satisfy
// R + 6 sqrt(t) <= half_width (DomainError otherwise).
std::vector<double> spatial_max_row(const RatioField& ratio, std::span<const double> radii);

struct MaxScanSummary {
    std::vector<double> radii;
    std::vector<double> median, q25, q75;        // of M(R)/(log R)^{2/3}
    std::vector<double> median_m;                // of M(R) itself
    double lower_const = 0.0, upper_const = 0.0; // paper bracket for reference
    bool monotone_per_replica = false;
};

MaxScanSummary summarize_max_scan(const std::vector<std::vector<double>>& rows,
                                  std::span<const double> radii, double t);

// ---- blocking grid --------------------------------------------------------

// x_j = 2 j R / floor(R^a), j = 1..floor(R^a). DomainError unless a in (0, 1/6)
// and R > 1.
std::vector<double> blocking_points(double R, double a);

// (beta log R)^{2/3}
double blocking_threshold(double R, double beta);

struct BlockingEstimate {
    double R = 0.0;
    double threshold = 0.0;
    double probability = 0.0;  // P{max_j log U(t, x_j) <= threshold}
    double se = 0.0;
    std::size_t n_points = 0;
    std::size_t n = 0;
};

// max_values: per replica, max_j log U(t, x_j) for this R's blocking points.
BlockingEstimate estimate_blocking(std::span<const double> max_values, double R, double beta,
                                   std::size_t n_points);

}  // namespace pam

#endif
