// Monte Carlo laboratory for the parabolic Anderson model with narrow-wedge
// initial data. Each subcommand runs one experiment against the solution's
// ratio field U(t, x) = u(t, x) / p_t(x) and writes plot-ready CSV plus a JSON
// summary; exit code 0 means every checked invariant held.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "pam/config.hpp"
#include "pam/errors.hpp"
#include "pam/harness.hpp"
#include "pam/kernel.hpp"
#include "pam/version.hpp"

namespace {

using nlohmann::json;

struct CommonArgs {
    std::string config_path;
    std::string resume_path;
    bool have_seed = false;
    std::uint64_t seed = 0;
    bool have_t = false;
    double t = 0.0;
    std::string out_dir;
    int threads = -1;
    long replicas = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool ensemble) {
    cmd->add_option("--config", args.config_path, "Config file (key = value with [sections])");
    cmd->add_option("--seed", args.seed, "Base seed")->each([&args](const std::string&) {
        args.have_seed = true;
    });
    cmd->add_option("--t", args.t, "Time horizon t")->each([&args](const std::string&) {
        args.have_t = true;
    });
    cmd->add_option("--out", args.out_dir, "Output directory");
    cmd->add_option("--threads", args.threads, "Worker threads (0 = auto)")
        ->envname("PAMLAB_THREADS");
    if (ensemble) {
        cmd->add_option("--replicas", args.replicas, "Replica count for this experiment");
        cmd->add_option("--resume", args.resume_path,
                        "Records file or manifest from a previous run to extend");
    }
}

pam::Config build_config(const CommonArgs& args) {
    pam::Config cfg =
        args.config_path.empty() ? pam::default_config() : pam::load_config(args.config_path);
    if (args.have_seed) cfg.seed = args.seed;
    if (args.have_t) cfg.t = args.t;
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.threads >= 0) cfg.threads = args.threads;
    return cfg;
}

void apply_replicas(std::size_t& field, long value) {
    if (value >= 0) field = static_cast<std::size_t>(value);
}

int report(const pam::Outcome& outcome, const std::string& name) {
    const json s = json::parse(outcome.summary_json);
    if (name == "identities") {
        std::printf("identities: max rel error ratio=%.3e product=%.3e scaling=%.3e (tol %.0e)\n",
                    s["max_rel_error"]["ratio"].get<double>(),
                    s["max_rel_error"]["product"].get<double>(),
                    s["max_rel_error"]["scaling"].get<double>(),
                    s["tolerance"].get<double>());
    } else if (name == "oracle") {
        std::printf("oracle: noise-off max rel error %.4f vs p_t on |x|<=%g (tol %g)\n",
                    s["max_rel_error"].get<double>(), s["x_window"].get<double>(),
                    s["tolerance"].get<double>());
    } else if (name == "simulate") {
        std::printf("simulate: mean-one %s, stationarity KS p=%.4g (%s)\n",
                    s["mean_one_pass"].get<bool>() ? "ok" : "FAILED",
                    s["stationarity"]["p_value"].get<double>(),
                    s["stationarity"]["pass"].get<bool>() ? "ok" : "rejected");
    } else if (name == "tail") {
        std::printf("tail: coefficient %.4f (CI [%.4f, %.4f]), target %.4f, rel err %.1f%% "
                    "(calibration %.4f)\n",
                    s["coefficient"].get<double>(), s["ci"][0].get<double>(),
                    s["ci"][1].get<double>(), s["target_coefficient"].get<double>(),
                    100.0 * s["relative_error"].get<double>(),
                    s["calibration"]["coefficient"].get<double>());
    } else if (name == "cov") {
        std::printf("cov: x|cov| non-increasing=%s bounded(4x)=%s fitted c=%.4f\n",
                    s["decay_non_increasing_pass"].get<bool>() ? "yes" : "NO",
                    s["bounded_4x_pass"].get<bool>() ? "yes" : "NO",
                    s["fitted_c"].get<double>());
    } else if (name == "gap") {
        std::printf("gap: PQD %s, association min cov/se %.2f, anomaly=%s\n",
                    s["pqd_pass"].get<bool>() ? "ok" : "VIOLATED",
                    s["association"]["min_normalized"].get<double>(),
                    s["covariance_anomaly"].get<bool>() ? "yes" : "no");
    } else if (name == "density") {
        std::printf("density: sup %.4f (halving drift %.1f%%), tail exponent %.3f in [1.2, 1.8]=%s\n",
                    s["sup_density"].get<double>(),
                    100.0 * s["rel_change_under_halving"].get<double>(),
                    s["tail_exponent"].get<double>(),
                    s["tail_exponent_in_range"].get<bool>() ? "yes" : "NO");
    } else if (name == "maxscan") {
        std::string meds;
        for (const auto& m : s["median_ratio"]) {
            if (!meds.empty()) meds += ", ";
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.3f", m.get<double>());
            meds += buf;
        }
        std::printf("maxscan: median M(R)/(log R)^{2/3} = [%s], bracket [%.4f, %.4f]\n",
                    meds.c_str(), s["bracket"][0].get<double>(), s["bracket"][1].get<double>());
    } else if (name == "blocking") {
        std::string ps;
        for (const auto& e : s["estimates"]) {
            if (!ps.empty()) ps += ", ";
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.3f", e["probability"].get<double>());
            ps += buf;
        }
        std::printf("blocking: P{max_j log U <= (beta log R)^{2/3}} = [%s], non-increasing=%s\n",
                    ps.c_str(), s["decay_non_increasing_pass"].get<bool>() ? "yes" : "NO");
    }
    std::printf("%s: %s\n", name.c_str(), outcome.pass ? "PASS" : "FAIL");
    return outcome.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pamlab: Monte Carlo experiments on the narrow-wedge parabolic Anderson model"};
    app.set_version_flag("--version", pam::kVersion);
    app.require_subcommand(1);

    CommonArgs identities_args, simulate_args, tail_args, cov_args, gap_args, density_args,
        maxscan_args, blocking_args;

    auto* cmd_identities =
        app.add_subcommand("identities", "Verify the heat-kernel identities on random inputs");
    add_common(cmd_identities, identities_args, false);
    long identity_samples = -1;
    double perturb = 0.0;
    cmd_identities->add_option("--samples", identity_samples, "Random inputs per identity");
    cmd_identities->add_option("--perturb", perturb,
                               "Sabotage mode: multiply one side by (1 + eps) to verify detection");

    auto* cmd_simulate =
        app.add_subcommand("simulate", "Run a replica ensemble; mean-one and stationarity checks");
    add_common(cmd_simulate, simulate_args, true);
    long snapshot_replica = -1;
    bool oracle_mode = false;
    cmd_simulate->add_option("--snapshot", snapshot_replica,
                             "Write a field snapshot CSV for this replica index");
    cmd_simulate->add_flag("--oracle", oracle_mode,
                           "Noise-off run from the delta versus the exact heat kernel");

    auto* cmd_tail = app.add_subcommand("tail", "Upper-tail exponent of log U(t, 0)");
    add_common(cmd_tail, tail_args, true);

    auto* cmd_cov = app.add_subcommand("cov", "Covariance decay of log U between 0 and x");
    add_common(cmd_cov, cov_args, true);

    auto* cmd_gap = app.add_subcommand("gap", "CDF-gap (positive quadrant dependence) test");
    add_common(cmd_gap, gap_args, true);

    auto* cmd_density = app.add_subcommand("density", "KDE boundedness of the log U density");
    add_common(cmd_density, density_args, true);

    auto* cmd_maxscan =
        app.add_subcommand("maxscan", "Spatial maximum scaling M(R)/(log R)^{2/3}");
    add_common(cmd_maxscan, maxscan_args, true);

    auto* cmd_blocking =
        app.add_subcommand("blocking", "Blocking-grid probability decay over doubling R");
    add_common(cmd_blocking, blocking_args, true);
    double blocking_a = -1.0, blocking_beta = -1.0;
    cmd_blocking->add_option("--a", blocking_a, "Blocking exponent a in (0, 1/6)");
    cmd_blocking->add_option("--beta", blocking_beta, "Threshold level beta");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_identities->parsed()) {
            pam::Config cfg = build_config(identities_args);
            if (identity_samples >= 0)
                cfg.identities.samples = static_cast<std::size_t>(identity_samples);
            cfg.identities.perturb = perturb;
            return report(pam::run_identities(cfg), "identities");
        }
        if (cmd_simulate->parsed()) {
            pam::Config cfg = build_config(simulate_args);
            if (oracle_mode) return report(pam::run_oracle(cfg), "oracle");
            apply_replicas(cfg.simulate.replicas, simulate_args.replicas);
            cfg.simulate.snapshot_replica = snapshot_replica;
            return report(pam::run_simulate(cfg, simulate_args.resume_path), "simulate");
        }
        if (cmd_tail->parsed()) {
            pam::Config cfg = build_config(tail_args);
            apply_replicas(cfg.tail.replicas, tail_args.replicas);
            return report(pam::run_tail(cfg, tail_args.resume_path), "tail");
        }
        if (cmd_cov->parsed()) {
            pam::Config cfg = build_config(cov_args);
            apply_replicas(cfg.cov.replicas, cov_args.replicas);
            return report(pam::run_cov(cfg, cov_args.resume_path), "cov");
        }
        if (cmd_gap->parsed()) {
            pam::Config cfg = build_config(gap_args);
            apply_replicas(cfg.gap.replicas, gap_args.replicas);
            return report(pam::run_gap(cfg, gap_args.resume_path), "gap");
        }
        if (cmd_density->parsed()) {
            pam::Config cfg = build_config(density_args);
            apply_replicas(cfg.density.replicas, density_args.replicas);
            return report(pam::run_density(cfg, density_args.resume_path), "density");
        }
        if (cmd_maxscan->parsed()) {
            pam::Config cfg = build_config(maxscan_args);
            apply_replicas(cfg.maxscan.replicas, maxscan_args.replicas);
            return report(pam::run_maxscan(cfg, maxscan_args.resume_path), "maxscan");
        }
        if (cmd_blocking->parsed()) {
            pam::Config cfg = build_config(blocking_args);
            apply_replicas(cfg.blocking.replicas, blocking_args.replicas);
            if (blocking_a > 0.0) cfg.blocking.a = blocking_a;
            if (blocking_beta > 0.0) cfg.blocking.beta = blocking_beta;
            return report(pam::run_blocking(cfg, blocking_args.resume_path), "blocking");
        }
    } catch (const pam::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const pam::DomainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const pam::ContractError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "failure: %s\n", e.what());
        return 1;
    }
    return 2;
}
