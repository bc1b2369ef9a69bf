#ifndef PAM_CONFIG_HPP
#define PAM_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pam/grid.hpp"

namespace pam {

// Every experiment carries its own grid resolution: dx, a guard factor
// (dt = guard * dx^2), and the domain half-width. Defaults reproduce the
// acceptance experiments exactly.

struct SimulateConfig {
    std::size_t replicas = 20000;
    double dx = 0.1, guard = 0.4, half_width = 10.5;
    std::vector<double> points = {0.0, 1.0, 2.0};
    double stationarity_x = 2.0;
    long snapshot_replica = -1;  // >= 0 writes a field snapshot for that replica
};

struct OracleConfig {
    double t = 1.0;
    double dx = 0.01, guard = 0.4, half_width = 9.0;
    double x_window = 3.0;    // compare against p_t on |x| <= x_window
    double tolerance = 0.01;  // max relative error
};

struct TailConfig {
    std::size_t replicas = 1000000;
    double dx = 0.125, guard = 0.4, half_width = 8.5;
    double theta_min = 2.6, theta_max = 4.6, theta_step = 0.2;
    long min_tail_count = 30;
    std::size_t bootstrap = 400;
    std::size_t calibration_replicas = 1000000;  // synthetic-oracle pre-check
};

struct CovConfig {
    std::size_t replicas = 10000;
    double dx = 0.1, guard = 0.4, half_width = 25.0;
    std::vector<double> xs = {2.0, 4.0, 8.0, 16.0};
};

struct GapConfig {
    std::size_t replicas = 10000;
    double dx = 0.1, guard = 0.4, half_width = 17.0;
    std::vector<double> points = {-4.0, -2.0, 0.0, 2.0, 4.0, 8.0};
    std::vector<double> xs = {2.0, 4.0, 8.0};  // gap margins paired with x = 0
    int grid = 20;
};

struct DensityConfig {
    std::size_t replicas = 100000;
    double dx = 0.125, guard = 0.4, half_width = 8.5;
    double y_min = 1.0, y_max = 3.6, y_step = 0.2;
    double bandwidth = 0.0;  // 0 = Silverman
};

struct MaxScanConfig {
    std::size_t replicas = 350;
    double dx = 0.05, guard = 1.0, half_width = 73.0;  // log-domain scheme
    std::vector<double> radii = {8.0, 16.0, 32.0, 64.0};
};

struct BlockingConfig {
    std::size_t replicas = 1000;
    double dx = 0.1, guard = 0.4, window_half_width = 10.5;
    std::vector<double> radii = {16.0, 32.0, 64.0, 128.0};
    double a = 0.15, beta = 0.1;
};

struct IdentitiesConfig {
    std::size_t samples = 10000;
    double tolerance = 1e-12;
    double perturb = 0.0;  // sabotage mode for fail-path checks
};

struct Config {
    double t = 2.0;
    std::uint64_t seed = 12345;
    int threads = 0;  // 0: PAMLAB_THREADS env or hardware default
    std::string out_dir = "out";
    std::vector<std::string> enabled = {"identities", "simulate", "tail",    "cov",
                                        "gap",        "density",  "maxscan", "blocking"};

    SimulateConfig simulate;
    OracleConfig oracle;
    TailConfig tail;
    CovConfig cov;
    GapConfig gap;
    DensityConfig density;
    MaxScanConfig maxscan;
    BlockingConfig blocking;
    IdentitiesConfig identities;
};

// Acceptance defaults.
Config default_config();

// Overlay `path` (flat "key = value" lines under [section] headers, '#'
// comments) onto the defaults. ConfigError on unknown sections/keys or
// malformed values, with the offending line in the message.
Config load_config(const std::string& path);
void apply_config_text(Config& cfg, const std::string& text, const std::string& origin);

// Canonical flat serialization; feeds both manifests and hashing.
std::string serialize_config(const Config& cfg);

// FNV-1a over the canonical serialization restricted to fields that define
// the statistical experiment (threads/out_dir excluded).
std::uint64_t config_hash(const Config& cfg, const std::string& experiment);

// Grid builders (validated).
GridSpec make_grid(double dx, double guard, double half_width, double horizon);

}  // namespace pam

#endif
