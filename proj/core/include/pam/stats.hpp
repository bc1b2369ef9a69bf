#ifndef PAM_STATS_HPP
#define PAM_STATS_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace pam::stats {

double mean(std::span<const double> v);
double variance(std::span<const double> v);         // unbiased
double standard_error_of_mean(std::span<const double> v);

// Unbiased sample covariance of paired observations; ContractError on size
// mismatch or n < 2.
double sample_covariance(std::span<const double> a, std::span<const double> b);

// Delete-one jackknife standard error of the sample covariance.
double jackknife_covariance_se(std::span<const double> a, std::span<const double> b);

double normal_cdf(double x);

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
    std::size_t n = 0;
    std::size_t m = 0;  // second sample size (two-sample only)
};

// Survival function of the Kolmogorov distribution, Q(lambda) = 2 sum (-1)^{k-1} e^{-2 k^2 lambda^2}.
double kolmogorov_survival(double lambda);

// One-sample KS against N(0, 1).
KsResult ks_test_standard_normal(std::span<const double> sample);

// Two-sample KS.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Empirical quantile by linear interpolation of the sorted sample.
double quantile_sorted(std::span<const double> sorted, double level);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

// Silverman's rule-of-thumb bandwidth for Gaussian KDE.
double silverman_bandwidth(std::span<const double> sample);

// Gaussian kernel density estimate evaluated at each grid point.
std::vector<double> gaussian_kde(std::span<const double> sample,
                                 std::span<const double> grid, double bandwidth);

// Lag-1 autocorrelation of a sequence.
double lag1_autocorrelation(std::span<const double> v);

// Pearson correlation of paired sequences.
double correlation(std::span<const double> a, std::span<const double> b);

}  // namespace pam::stats

#endif
