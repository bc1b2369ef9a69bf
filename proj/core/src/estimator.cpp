#include "pam/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pam/errors.hpp"
#include "pam/kernel.hpp"
#include "pam/rng.hpp"
#include "pam/stats.hpp"

namespace pam {

std::vector<double> SampleSet::column(std::size_t col) const {
    std::vector<double> out(n());
    for (std::size_t r = 0; r < n(); ++r) out[r] = at(r, col);
    return out;
}

std::size_t SampleSet::point_index(double x) const {
    for (std::size_t i = 0; i < points.size(); ++i)
        if (std::fabs(points[i] - x) < 1e-9) return i;
    throw ContractError("samples: no observations at x = " + std::to_string(x));
}

SampleSet SampleSet::merged(const SampleSet& a, const SampleSet& b) {
    if (a.points != b.points)
        throw ContractError("samples: merge with mismatched point labels");
    SampleSet out;
    out.points = a.points;
    out.replica_ids.reserve(a.n() + b.n());
    out.log_u.reserve(a.log_u.size() + b.log_u.size());
    std::size_t i = 0, j = 0;
    const std::size_t w = a.width();
    while (i < a.n() || j < b.n()) {
        const bool take_a =
            j >= b.n() || (i < a.n() && a.replica_ids[i] < b.replica_ids[j]);
        if (!take_a && i < a.n() && a.replica_ids[i] == b.replica_ids[j])
            throw ContractError("samples: merge with overlapping replica ids");
        const SampleSet& src = take_a ? a : b;
        const std::size_t r = take_a ? i : j;
        out.replica_ids.push_back(src.replica_ids[r]);
        out.log_u.insert(out.log_u.end(), src.log_u.begin() + static_cast<std::ptrdiff_t>(r * w),
                         src.log_u.begin() + static_cast<std::ptrdiff_t>((r + 1) * w));
        (take_a ? i : j) += 1;
    }
    return out;
}

// ---- upper tail -----------------------------------------------------------

namespace {

// Binomial sampler adequate for bootstrap resampling: exact inversion when
// the count is small, normal approximation otherwise.
long sample_binomial(rng::SplitMix64& g, long n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    const double mean = static_cast<double>(n) * p;
    const double var = mean * (1.0 - p);
    if (var > 100.0) {
        const double draw = mean + std::sqrt(var) * g.normal();
        return std::clamp(static_cast<long>(std::llround(draw)), 0L, n);
    }
    // Waiting-time inversion over the count.
    double q = std::pow(1.0 - p, static_cast<double>(n));
    double cdf = q;
    const double u = g.uniform();
    long k = 0;
    while (u > cdf && k < n) {
        ++k;
        q *= (static_cast<double>(n - k + 1) / static_cast<double>(k)) * (p / (1.0 - p));
        cdf += q;
    }
    return k;
}

struct FitInput {
    std::vector<double> z;  // theta^{3/2}
    std::vector<double> y;  // log survival
};

double fit_coefficient(const FitInput& in) {
    const auto fit = stats::least_squares(in.z, in.y);
    return -fit.slope;
}

}  // namespace

TailFit tail_fit(std::span<const double> samples, std::span<const double> thresholds,
                 long min_tail_count, std::size_t n_bootstrap, std::uint64_t bootstrap_seed) {
    if (!std::is_sorted(thresholds.begin(), thresholds.end()))
        throw ContractError("tail: thresholds must be ascending");
    TailFit out;
    out.n = samples.size();
    const double dn = static_cast<double>(out.n);
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());

    out.thresholds.assign(thresholds.begin(), thresholds.end());
    for (double th : thresholds) {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), th);
        out.counts.push_back(static_cast<long>(sorted.end() - it));
    }
    FitInput fit_in;
    for (std::size_t i = 0; i < out.counts.size(); ++i) {
        const double p = static_cast<double>(out.counts[i]) / dn;
        out.survival.push_back(p);
        out.survival_se.push_back(std::sqrt(std::max(p * (1.0 - p), 0.0) / dn));
        const bool ok = out.counts[i] >= min_tail_count && out.counts[i] < static_cast<long>(out.n);
        out.usable.push_back(ok);
        if (ok) {
            fit_in.z.push_back(std::pow(out.thresholds[i], 1.5));
            fit_in.y.push_back(std::log(p));
            ++out.n_usable;
        }
    }
    if (out.n_usable < 3)
        throw InsufficientDataError("tail: fewer than 3 usable thresholds (need counts >= " +
                                    std::to_string(min_tail_count) + ")");
    const auto base = stats::least_squares(fit_in.z, fit_in.y);
    out.coefficient = -base.slope;
    out.intercept = base.intercept;

    // Multinomial bootstrap over the histogram induced by the thresholds.
    // Bin k holds samples in [th_k, th_{k+1}); bin 0 is everything below th_0.
    const std::size_t nb = out.thresholds.size();
    std::vector<long> bin(nb + 1, 0);
    bin[0] = static_cast<long>(out.n) - out.counts[0];
    for (std::size_t i = 0; i + 1 < nb; ++i) bin[i + 1] = out.counts[i] - out.counts[i + 1];
    bin[nb] = out.counts[nb - 1];

    rng::SplitMix64 g(bootstrap_seed);
    std::vector<double> boot;
    boot.reserve(n_bootstrap);
    for (std::size_t b = 0; b < n_bootstrap; ++b) {
        long remaining = static_cast<long>(out.n);
        double mass = 1.0;
        std::vector<long> re(nb + 1, 0);
        for (std::size_t k = 0; k <= nb && remaining > 0; ++k) {
            const double pk = static_cast<double>(bin[k]) / dn;
            const double cond = (mass > 0.0) ? std::min(pk / mass, 1.0) : 1.0;
            re[k] = (k == nb) ? remaining : sample_binomial(g, remaining, cond);
            remaining -= re[k];
            mass -= pk;
        }
        FitInput in;
        long suffix = 0;
        std::vector<long> counts(nb, 0);
        for (std::size_t i = nb; i-- > 0;) {
            suffix += re[i + 1];
            counts[i] = suffix;
        }
        for (std::size_t i = 0; i < nb; ++i) {
            if (!out.usable[i] || counts[i] <= 0) continue;
            in.z.push_back(std::pow(out.thresholds[i], 1.5));
            in.y.push_back(std::log(static_cast<double>(counts[i]) / dn));
        }
        if (in.z.size() >= 3) boot.push_back(fit_coefficient(in));
    }
    if (boot.size() >= 20) {
        std::sort(boot.begin(), boot.end());
        out.ci_lo = stats::quantile_sorted(boot, 0.025);
        out.ci_hi = stats::quantile_sorted(boot, 0.975);
    } else {
        out.ci_lo = out.ci_hi = out.coefficient;
    }
    return out;
}

std::vector<double> synthetic_tail_samples(std::size_t n, std::uint64_t seed) {
    rng::SplitMix64 g(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = std::pow(-std::log(g.uniform()), 2.0 / 3.0);
    return out;
}

// ---- covariance -----------------------------------------------------------

CovarianceEstimate log_covariance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ContractError("covariance: unpaired samples (common-noise pairing required)");
    CovarianceEstimate est;
    est.n = a.size();
    est.value = stats::sample_covariance(a, b);
    est.se = stats::jackknife_covariance_se(a, b);
    return est;
}

// ---- gap / association ----------------------------------------------------

GapReport cdf_gap_test(std::span<const double> x_samples,
                       std::span<const double> zero_samples, int grid_per_margin) {
    if (x_samples.size() != zero_samples.size())
        throw ContractError("gap: unpaired samples");
    if (grid_per_margin < 2) throw ContractError("gap: quantile grid too small");
    const std::size_t n = x_samples.size();
    const double dn = static_cast<double>(n);
    const int G = grid_per_margin;

    std::vector<double> xs(x_samples.begin(), x_samples.end());
    std::vector<double> ys(zero_samples.begin(), zero_samples.end());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());

    GapReport rep;
    rep.grid = G;
    for (int i = 1; i <= G; ++i) {
        const double lvl = static_cast<double>(i) / (G + 1);
        rep.a_cuts.push_back(stats::quantile_sorted(xs, lvl));
        rep.b_cuts.push_back(stats::quantile_sorted(ys, lvl));
    }
    std::vector<double> fa(static_cast<std::size_t>(G)), fb(static_cast<std::size_t>(G));
    for (int i = 0; i < G; ++i) {
        fa[static_cast<std::size_t>(i)] =
            static_cast<double>(std::upper_bound(xs.begin(), xs.end(), rep.a_cuts[static_cast<std::size_t>(i)]) - xs.begin()) / dn;
        fb[static_cast<std::size_t>(i)] =
            static_cast<double>(std::upper_bound(ys.begin(), ys.end(), rep.b_cuts[static_cast<std::size_t>(i)]) - ys.begin()) / dn;
    }
    std::vector<long> joint(static_cast<std::size_t>(G) * static_cast<std::size_t>(G), 0);
    for (std::size_t s = 0; s < n; ++s) {
        // indices of the smallest cuts dominating the sample
        int ia = static_cast<int>(std::lower_bound(rep.a_cuts.begin(), rep.a_cuts.end(),
                                                   x_samples[s]) - rep.a_cuts.begin());
        int ib = static_cast<int>(std::lower_bound(rep.b_cuts.begin(), rep.b_cuts.end(),
                                                   zero_samples[s]) - rep.b_cuts.begin());
        for (int i = ia; i < G; ++i)
            for (int j = ib; j < G; ++j)
                joint[static_cast<std::size_t>(i) * static_cast<std::size_t>(G) + static_cast<std::size_t>(j)] += 1;
    }
    rep.gap.resize(joint.size());
    rep.se.resize(joint.size());
    rep.min_normalized = std::numeric_limits<double>::infinity();
    rep.sup_gap = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < G; ++i) {
        for (int j = 0; j < G; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * static_cast<std::size_t>(G) + static_cast<std::size_t>(j);
            const double ja = static_cast<double>(joint[idx]) / dn;
            const double g = ja - fa[static_cast<std::size_t>(i)] * fb[static_cast<std::size_t>(j)];
            // Null (independence) variance of the empirical copula gap.
            const double v = fa[static_cast<std::size_t>(i)] * (1.0 - fa[static_cast<std::size_t>(i)]) *
                             fb[static_cast<std::size_t>(j)] * (1.0 - fb[static_cast<std::size_t>(j)]) / dn;
            rep.gap[idx] = g;
            rep.se[idx] = std::sqrt(std::max(v, 1e-30));
            rep.sup_gap = std::max(rep.sup_gap, g);
            rep.min_normalized = std::min(rep.min_normalized, g / rep.se[idx]);
        }
    }
    rep.pqd_pass = rep.min_normalized >= -3.0;

    const auto cov = log_covariance(x_samples, zero_samples);
    rep.covariance = cov.value;
    rep.covariance_se = cov.se;
    rep.covariance_anomaly = cov.value < -3.0 * cov.se;
    rep.ratio = (cov.value > 0.0) ? rep.sup_gap / std::cbrt(cov.value)
                                  : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

namespace {

struct MonotoneFn {
    std::string name;
    double (*eval)(std::span<const double>, std::span<const double>);
};

double proj_center(std::span<const double> row, std::span<const double> pts) {
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (pts[i] == 0.0) return row[i];
    return row[0];
}
double max_all(std::span<const double> row, std::span<const double>) {
    return *std::max_element(row.begin(), row.end());
}
double max_nonpos(std::span<const double> row, std::span<const double> pts) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (pts[i] <= 0.0) m = std::max(m, row[i]);
    return m;
}
double max_pos(std::span<const double> row, std::span<const double> pts) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (pts[i] > 0.0) m = std::max(m, row[i]);
    return m;
}
double softplus_sum(std::span<const double> row, std::span<const double>) {
    double s = 0.0;
    for (double v : row) s += (v > 30.0) ? v : std::log1p(std::exp(v));
    return s;
}

}  // namespace

AssociationReport association_test(const SampleSet& samples) {
    if (samples.n() < 3) throw ContractError("association: needs n >= 3 replicas");
    const MonotoneFn fns[] = {
        {"proj_x0", proj_center}, {"max_nonpos", max_nonpos}, {"max_pos", max_pos},
        {"max_all", max_all},     {"softplus_sum", softplus_sum},
    };
    constexpr std::size_t kFns = sizeof(fns) / sizeof(fns[0]);
    std::vector<std::vector<double>> values(kFns, std::vector<double>(samples.n()));
    for (std::size_t r = 0; r < samples.n(); ++r)
        for (std::size_t f = 0; f < kFns; ++f)
            values[f][r] = fns[f].eval(samples.row(r), samples.points);

    AssociationReport rep;
    rep.min_normalized = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kFns; ++i) {
        for (std::size_t j = i + 1; j < kFns; ++j) {
            AssociationPair p;
            p.h1 = fns[i].name;
            p.h2 = fns[j].name;
            p.covariance = stats::sample_covariance(values[i], values[j]);
            p.se = stats::jackknife_covariance_se(values[i], values[j]);
            rep.min_normalized = std::min(rep.min_normalized, p.covariance / p.se);
            rep.pairs.push_back(std::move(p));
        }
    }
    rep.pass = rep.min_normalized >= -3.0;
    return rep;
}

// ---- density --------------------------------------------------------------

DensityReport density_boundedness(std::span<const double> samples,
                                  std::optional<double> bandwidth,
                                  std::span<const double> tail_y_grid) {
    if (samples.size() < 16) throw ContractError("density: needs n >= 16");
    DensityReport rep;
    rep.n = samples.size();
    if (bandwidth) {
        if (!(*bandwidth > 0.0)) throw DomainError("density: bandwidth must be positive");
        rep.bandwidth = *bandwidth;
    } else {
        rep.bandwidth = stats::silverman_bandwidth(samples);
    }
    const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *mn_it - 3.0 * rep.bandwidth, hi = *mx_it + 3.0 * rep.bandwidth;
    constexpr int kGrid = 512;
    rep.grid.resize(kGrid);
    for (int i = 0; i < kGrid; ++i)
        rep.grid[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (kGrid - 1);
    rep.density = stats::gaussian_kde(samples, rep.grid, rep.bandwidth);
    rep.density_half = stats::gaussian_kde(samples, rep.grid, 0.5 * rep.bandwidth);
    rep.sup = *std::max_element(rep.density.begin(), rep.density.end());
    rep.sup_half = *std::max_element(rep.density_half.begin(), rep.density_half.end());
    rep.rel_change = std::fabs(rep.sup_half - rep.sup) / rep.sup;
    rep.stable = rep.rel_change <= 0.10;

    // Upper-tail shape. Default grid: 1.0 .. 3.6 step 0.2.
    std::vector<double> ygrid(tail_y_grid.begin(), tail_y_grid.end());
    if (ygrid.empty())
        for (double y = 1.0; y <= 3.6 + 1e-12; y += 0.2) ygrid.push_back(y);
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double dn = static_cast<double>(rep.n);
    std::vector<double> ys, neg_log_p;
    for (double y : ygrid) {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), y);
        const long c = static_cast<long>(sorted.end() - it);
        const double p = static_cast<double>(c) / dn;
        rep.tail_y.push_back(y);
        rep.tail_counts.push_back(c);
        rep.tail_survival.push_back(p);
        const bool ok = c >= 30 && p < 0.5 && y > 0.0;
        rep.tail_usable.push_back(ok);
        if (ok) {
            ys.push_back(y);
            neg_log_p.push_back(-std::log(p));
        }
    }
    // Fit -log P = b + c y^e with the prefactor b = -log c1 profiled out;
    // a direct log-log slope would fold the prefactor into the exponent.
    if (ys.size() >= 4) {
        double best_sse = std::numeric_limits<double>::infinity();
        for (double e = 0.5; e <= 2.5 + 1e-9; e += 0.005) {
            std::vector<double> z(ys.size());
            for (std::size_t i = 0; i < ys.size(); ++i) z[i] = std::pow(ys[i], e);
            const auto fit = stats::least_squares(z, neg_log_p);
            double sse = 0.0;
            for (std::size_t i = 0; i < z.size(); ++i) {
                const double r = neg_log_p[i] - (fit.intercept + fit.slope * z[i]);
                sse += r * r;
            }
            if (sse < best_sse) {
                best_sse = sse;
                rep.tail_exponent = e;
                rep.tail_c2 = fit.slope;
                rep.tail_c1 = std::exp(-fit.intercept);  // -log P = -log c1 + c2 y^e
            }
        }
        rep.exponent_in_range = rep.tail_exponent >= 1.2 && rep.tail_exponent <= 1.8;
    }
    return rep;
}

// ---- spatial maximum ------------------------------------------------------

std::vector<double> spatial_max_row(const RatioField& ratio, std::span<const double> radii) {
    if (!std::is_sorted(radii.begin(), radii.end()))
        throw ContractError("maxscan: radii must be ascending");
    const GridSpec& grid = ratio.grid;
    const double margin = 6.0 * std::sqrt(ratio.time);
    if (!radii.empty() && radii.back() + margin > grid.half_width + 1e-9)
        throw DomainError("maxscan: radius " + std::to_string(radii.back()) +
                          " beyond safe region (needs R + 6 sqrt(t) <= half_width)");
    const double offset = log_kernel_offset(ratio.time);
    const int c = grid.center();
    std::vector<double> out;
    out.reserve(radii.size());
    double running = -std::numeric_limits<double>::infinity();
    int prev = -1;  // cells within prev are already folded into `running`
    for (double r : radii) {
        const int span = static_cast<int>(std::floor(r / grid.dx + 1e-9));
        for (int d = prev + 1; d <= span; ++d) {
            for (const int i : {c - d, c + d}) {
                const double v = ratio.values[static_cast<std::size_t>(i)];
                if (!(v > 0.0))
                    throw NumericError("maxscan: non-positive ratio value");
                running = std::max(running, std::log(v));
                if (d == 0) break;
            }
        }
        prev = std::max(prev, span);
        out.push_back(running - offset);
    }
    return out;
}

MaxScanSummary summarize_max_scan(const std::vector<std::vector<double>>& rows,
                                  std::span<const double> radii, double t) {
    MaxScanSummary sum;
    sum.radii.assign(radii.begin(), radii.end());
    const auto theory = kernel::theory_constants(t);
    sum.lower_const = theory.lower_const;
    sum.upper_const = theory.upper_const;
    sum.monotone_per_replica = true;
    for (const auto& row : rows)
        for (std::size_t i = 1; i < row.size(); ++i)
            if (row[i] < row[i - 1] - 1e-12) sum.monotone_per_replica = false;
    for (std::size_t k = 0; k < sum.radii.size(); ++k) {
        std::vector<double> m_vals, ratios;
        m_vals.reserve(rows.size());
        const double norm = std::pow(std::log(sum.radii[k]), 2.0 / 3.0);
        for (const auto& row : rows) {
            m_vals.push_back(row[k]);
            ratios.push_back(row[k] / norm);
        }
        std::sort(m_vals.begin(), m_vals.end());
        std::sort(ratios.begin(), ratios.end());
        sum.median_m.push_back(stats::quantile_sorted(m_vals, 0.5));
        sum.median.push_back(stats::quantile_sorted(ratios, 0.5));
        sum.q25.push_back(stats::quantile_sorted(ratios, 0.25));
        sum.q75.push_back(stats::quantile_sorted(ratios, 0.75));
    }
    return sum;
}

// ---- blocking -------------------------------------------------------------

std::vector<double> blocking_points(double R, double a) {
    if (!(a > 0.0) || !(a < 1.0 / 6.0))
        throw DomainError("blocking: exponent a must lie in (0, 1/6)");
    if (!(R > 1.0)) throw DomainError("blocking: R must exceed 1");
    const long count = static_cast<long>(std::floor(std::pow(R, a)));
    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(count));
    for (long j = 1; j <= count; ++j)
        xs.push_back(2.0 * static_cast<double>(j) * R / static_cast<double>(count));
    return xs;
}

double blocking_threshold(double R, double beta) {
    if (!(R > 1.0)) throw DomainError("blocking: R must exceed 1");
    return std::pow(beta * std::log(R), 2.0 / 3.0);
}

BlockingEstimate estimate_blocking(std::span<const double> max_values, double R, double beta,
                                   std::size_t n_points) {
    BlockingEstimate est;
    est.R = R;
    est.threshold = blocking_threshold(R, beta);
    est.n_points = n_points;
    est.n = max_values.size();
    if (est.n == 0) throw ContractError("blocking: no replicas");
    std::size_t hits = 0;
    for (double m : max_values)
        if (m <= est.threshold) ++hits;
    est.probability = static_cast<double>(hits) / static_cast<double>(est.n);
    est.se = std::sqrt(std::max(est.probability * (1.0 - est.probability), 1e-12) /
                       static_cast<double>(est.n));
    return est;
}

}  // namespace pam
