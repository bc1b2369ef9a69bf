#include "pam/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pam/errors.hpp"

namespace pam::stats {

double mean(std::span<const double> v) {
    if (v.empty()) throw ContractError("stats: mean of empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
    if (v.size() < 2) throw ContractError("stats: variance needs n >= 2");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double standard_error_of_mean(std::span<const double> v) {
    return std::sqrt(variance(v) / static_cast<double>(v.size()));
}

double sample_covariance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ContractError("stats: covariance of unpaired samples");
    if (a.size() < 2) throw ContractError("stats: covariance needs n >= 2");
    const double ma = mean(a), mb = mean(b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / static_cast<double>(a.size() - 1);
}

double jackknife_covariance_se(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ContractError("stats: jackknife on unpaired samples");
    const std::size_t n = a.size();
    if (n < 3) throw ContractError("stats: jackknife needs n >= 3");
    double sa = 0.0, sb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sa += a[i];
        sb += b[i];
        sab += a[i] * b[i];
    }
    const double dn = static_cast<double>(n);
    std::vector<double> loo(n);
    double loo_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sa_i = sa - a[i], sb_i = sb - b[i], sab_i = sab - a[i] * b[i];
        const double m = dn - 1.0;
        loo[i] = (sab_i - sa_i * sb_i / m) / (m - 1.0);
        loo_mean += loo[i];
    }
    loo_mean /= dn;
    double s = 0.0;
    for (double v : loo) s += (v - loo_mean) * (v - loo_mean);
    return std::sqrt((dn - 1.0) / dn * s);
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double kolmogorov_survival(double lambda) {
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16 * std::max(sum, 1e-300)) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

// Stephens-style effective-size correction for finite samples.
double ks_p_value(double d, double n_eff) {
    const double s = std::sqrt(n_eff);
    return kolmogorov_survival((s + 0.12 + 0.11 / s) * d);
}

}  // namespace

KsResult ks_test_standard_normal(std::span<const double> sample) {
    if (sample.empty()) throw ContractError("stats: KS on empty sample");
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = normal_cdf(s[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    KsResult r;
    r.statistic = d;
    r.n = s.size();
    r.p_value = ks_p_value(d, n);
    return r;
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ContractError("stats: KS on empty sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < sa.size() && j < sb.size()) {
        const double v = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] <= v) ++i;
        while (j < sb.size() && sb[j] <= v) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    KsResult r;
    r.statistic = d;
    r.n = sa.size();
    r.m = sb.size();
    r.p_value = ks_p_value(d, na * nb / (na + nb));
    return r;
}

double quantile_sorted(std::span<const double> sorted, double level) {
    if (sorted.empty()) throw ContractError("stats: quantile of empty sample");
    if (level <= 0.0) return sorted.front();
    if (level >= 1.0) return sorted.back();
    const double pos = level * (static_cast<double>(sorted.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ContractError("stats: least squares needs paired n >= 2");
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw ContractError("stats: degenerate abscissae in least squares");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

double silverman_bandwidth(std::span<const double> sample) {
    if (sample.size() < 2) throw ContractError("stats: bandwidth needs n >= 2");
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    const double sd = std::sqrt(variance(sample));
    const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.349);
    if (spread == 0.0) spread = sd;
    return 0.9 * spread * std::pow(static_cast<double>(s.size()), -0.2);
}

std::vector<double> gaussian_kde(std::span<const double> sample,
                                 std::span<const double> grid, double bandwidth) {
    if (!(bandwidth > 0.0)) throw DomainError("stats: KDE bandwidth must be positive");
    // Sorting lets each grid point see only samples within 8 bandwidths.
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    const double norm =
        1.0 / (static_cast<double>(s.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double lo = grid[g] - 8.0 * bandwidth, hi = grid[g] + 8.0 * bandwidth;
        auto first = std::lower_bound(s.begin(), s.end(), lo);
        auto last = std::upper_bound(s.begin(), s.end(), hi);
        double acc = 0.0;
        for (auto it = first; it != last; ++it) {
            const double z = (grid[g] - *it) / bandwidth;
            acc += std::exp(-0.5 * z * z);
        }
        out[g] = acc * norm;
    }
    return out;
}

double lag1_autocorrelation(std::span<const double> v) {
    if (v.size() < 3) throw ContractError("stats: autocorrelation needs n >= 3");
    const double m = mean(v);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        den += (v[i] - m) * (v[i] - m);
        if (i + 1 < v.size()) num += (v[i] - m) * (v[i + 1] - m);
    }
    return num / den;
}

double correlation(std::span<const double> a, std::span<const double> b) {
    const double c = sample_covariance(a, b);
    return c / std::sqrt(variance(a) * variance(b));
}

}  // namespace pam::stats
