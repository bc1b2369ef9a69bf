#include "pam/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "pam/errors.hpp"
#include "pam/kernel.hpp"
#include "pam/stats.hpp"
#include "pam/version.hpp"

namespace pam {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---- RecordTable ------------------------------------------------------------

std::size_t RecordTable::ok_count() const {
    std::size_t c = 0;
    for (auto v : ok_) c += v;
    return c;
}

void RecordTable::append(std::uint32_t id, bool ok, std::span<const double> values) {
    if (values.size() != width_)
        throw ContractError("records: row width mismatch");
    if (!ids_.empty() && id <= ids_.back())
        throw ContractError("records: appends must be in ascending replica order");
    ids_.push_back(id);
    ok_.push_back(ok ? 1 : 0);
    data_.insert(data_.end(), values.begin(), values.end());
}

RecordTable RecordTable::merged(const RecordTable& a, const RecordTable& b) {
    if (a.config_hash_ != b.config_hash_)
        throw ContractError("records: merge with mismatched config hash");
    if (a.width_ != b.width_)
        throw ContractError("records: merge with mismatched width");
    RecordTable out(a.config_hash_, a.width_);
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        const bool take_a = j >= b.size() || (i < a.size() && a.ids_[i] < b.ids_[j]);
        if (!take_a && i < a.size() && a.ids_[i] == b.ids_[j])
            throw ContractError("records: merge with overlapping replica ids");
        const RecordTable& src = take_a ? a : b;
        std::size_t& r = take_a ? i : j;
        out.append(src.ids_[r], src.ok_[r] != 0, src.row(r));
        ++r;
    }
    return out;
}

namespace {
constexpr char kRecordMagic[8] = {'P', 'A', 'M', 'R', 'E', 'C', '0', '1'};
}

void RecordTable::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("records: cannot write '" + path + "'");
    out.write(kRecordMagic, sizeof(kRecordMagic));
    const std::uint64_t count = size();
    out.write(reinterpret_cast<const char*>(&config_hash_), sizeof(config_hash_));
    out.write(reinterpret_cast<const char*>(&width_), sizeof(width_));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (std::size_t r = 0; r < size(); ++r) {
        out.write(reinterpret_cast<const char*>(&ids_[r]), sizeof(std::uint32_t));
        out.write(reinterpret_cast<const char*>(&ok_[r]), sizeof(std::uint8_t));
        out.write(reinterpret_cast<const char*>(data_.data() + r * width_),
                  static_cast<std::streamsize>(sizeof(double) * width_));
    }
    if (!out) throw ConfigError("records: write failed for '" + path + "'");
}

RecordTable RecordTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("records: cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kRecordMagic, sizeof(magic)) != 0)
        throw ContractError("records: '" + path + "' is not a record file");
    std::uint64_t hash = 0, count = 0;
    std::uint32_t width = 0;
    in.read(reinterpret_cast<char*>(&hash), sizeof(hash));
    in.read(reinterpret_cast<char*>(&width), sizeof(width));
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    RecordTable out(hash, width);
    std::vector<double> row(width);
    for (std::uint64_t r = 0; r < count; ++r) {
        std::uint32_t id = 0;
        std::uint8_t ok = 0;
        in.read(reinterpret_cast<char*>(&id), sizeof(id));
        in.read(reinterpret_cast<char*>(&ok), sizeof(ok));
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(sizeof(double) * width));
        if (!in) throw ContractError("records: truncated file '" + path + "'");
        out.append(id, ok != 0, row);
    }
    return out;
}

std::vector<double> RecordTable::column(std::size_t col) const {
    std::vector<double> out;
    out.reserve(size());
    for (std::size_t r = 0; r < size(); ++r)
        if (ok_[r]) out.push_back(data_[r * width_ + col]);
    return out;
}

// ---- parallel driver --------------------------------------------------------

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("PAMLAB_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

namespace {

RecordTable run_replica_ids(const std::vector<std::uint32_t>& ids, std::uint32_t width,
                            std::uint64_t hash, int threads, double abort_budget,
                            const ReplicaFn& fn) {
    const std::size_t n = ids.size();
    std::vector<double> data(n * width, 0.0);
    std::vector<std::uint8_t> ok(n, 0);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> aborts{0};
    std::string first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            std::span<double> row(data.data() + i * width, width);
            bool good = false;
            try {
                good = fn(ids[i], row);
            } catch (const NumericError& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error.empty()) first_error = e.what();
            }
            ok[i] = good ? 1 : 0;
            if (!good) aborts.fetch_add(1);
        }
    };

    const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::size_t>(n, 1))));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    if (n > 0) {
        const double frac = static_cast<double>(aborts.load()) / static_cast<double>(n);
        if (frac > abort_budget)
            throw NumericError("harness: " + std::to_string(aborts.load()) + "/" +
                               std::to_string(n) + " replicas aborted (budget " +
                               std::to_string(abort_budget) + "); first: " + first_error);
    }

    RecordTable table(hash, width);
    for (std::size_t i = 0; i < n; ++i)
        table.append(ids[i], ok[i] != 0, {data.data() + i * width, width});
    return table;
}

}  // namespace

RecordTable run_replicas(const EnsembleOptions& opts, const ReplicaFn& fn) {
    std::vector<std::uint32_t> ids(opts.replicas);
    for (std::size_t i = 0; i < opts.replicas; ++i)
        ids[i] = opts.first_replica + static_cast<std::uint32_t>(i);
    return run_replica_ids(ids, opts.width, opts.config_hash, opts.threads, opts.abort_budget, fn);
}

// ---- experiment plumbing ----------------------------------------------------

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t experiment_seed(const Config& cfg, const std::string& name) {
    return cfg.seed ^ fnv1a(name);
}

std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("harness: cannot write '" + path.string() + "'");
    out << content;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Experiment {
    Experiment(const Config& cfg_, std::string name_) : cfg(cfg_), name(std::move(name_)) {
        dir = fs::path(cfg.out_dir);
        fs::create_directories(dir);
        started = iso_now();
        clock_start = std::chrono::steady_clock::now();
    }

    fs::path file(const std::string& leaf) {
        files.push_back((dir / leaf).string());
        return dir / leaf;
    }

    Outcome finish(bool pass, ordered_json summary) {
        summary["pass"] = pass;
        const std::string summary_path = (dir / (name + "_summary.json")).string();
        files.push_back(summary_path);
        const std::string summary_text = summary.dump(2) + "\n";
        write_text(summary_path, summary_text);

        ordered_json manifest;
        manifest["artifact_version"] = kVersion;
        manifest["command"] = name;
        manifest["started_utc"] = started;
        manifest["finished_utc"] = iso_now();
        manifest["elapsed_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
        manifest["config_hash"] = config_hash(cfg, name);
        manifest["config"] = serialize_config(cfg);
        manifest["files"] = files;
        manifest["pass"] = pass;
        write_text(dir / (name + "_manifest.json"), manifest.dump(2) + "\n");
        files.push_back((dir / (name + "_manifest.json")).string());

        Outcome out;
        out.pass = pass;
        out.summary_json = summary_text;
        out.files = files;
        return out;
    }

    const Config& cfg;
    std::string name;
    fs::path dir;
    std::vector<std::string> files;
    std::string started;
    std::chrono::steady_clock::time_point clock_start;
};

// Loads a resume source: either a records file or a manifest pointing at one.
RecordTable load_resume(const std::string& path, const std::string& name) {
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
        std::ifstream in(path);
        if (!in) throw ConfigError("harness: cannot open resume manifest '" + path + "'");
        ordered_json m = ordered_json::parse(in);
        for (const auto& f : m.at("files")) {
            const std::string s = f.get<std::string>();
            if (s.find(name + "_records.bin") != std::string::npos) return RecordTable::load(s);
        }
        throw ConfigError("harness: manifest '" + path + "' lists no record file for " + name);
    }
    return RecordTable::load(path);
}

// Runs (or completes, when resuming) the experiment ensemble and persists the
// per-replica records.
RecordTable ensure_records(Experiment& ex, std::size_t n, std::uint32_t width,
                           const ReplicaFn& fn, const std::string& resume_path) {
    const std::uint64_t hash = config_hash(ex.cfg, ex.name);
    const int threads = resolve_threads(ex.cfg.threads);
    RecordTable result;
    if (resume_path.empty()) {
        EnsembleOptions opts;
        opts.replicas = n;
        opts.width = width;
        opts.threads = threads;
        opts.config_hash = hash;
        result = run_replicas(opts, fn);
    } else {
        RecordTable prior = load_resume(resume_path, ex.name);
        if (prior.config_hash() != hash)
            throw ContractError("harness: resume records were produced by a different config");
        if (prior.width() != width)
            throw ContractError("harness: resume records have mismatched width");
        RecordTable kept(hash, width);
        std::vector<bool> have(n, false);
        for (std::size_t r = 0; r < prior.size(); ++r) {
            if (prior.id(r) < n) {
                kept.append(prior.id(r), prior.ok(r), prior.row(r));
                have[prior.id(r)] = true;
            }
        }
        std::vector<std::uint32_t> missing;
        for (std::size_t i = 0; i < n; ++i)
            if (!have[i]) missing.push_back(static_cast<std::uint32_t>(i));
        RecordTable fresh = run_replica_ids(missing, width, hash, threads, 1e-3, fn);
        result = RecordTable::merged(kept, fresh);
    }
    result.save(ex.file(ex.name + "_records.bin").string());
    return result;
}

std::vector<std::size_t> point_cells(const GridSpec& grid, const std::vector<double>& points) {
    std::vector<std::size_t> cells;
    cells.reserve(points.size());
    for (double p : points) {
        if (std::fabs(p / grid.dx - std::round(p / grid.dx)) > 1e-6)
            throw ConfigError("harness: point " + std::to_string(p) +
                              " does not lie on the grid (dx = " + std::to_string(grid.dx) + ")");
        cells.push_back(static_cast<std::size_t>(grid.index_of(p)));
    }
    return cells;
}

// Delete-one estimates of cov(a, b); basis for jackknife errors of derived
// quantities.
std::vector<double> loo_covariances(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    double sa = 0.0, sb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sa += a[i];
        sb += b[i];
        sab += a[i] * b[i];
    }
    std::vector<double> out(n);
    const double m = static_cast<double>(n) - 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sa_i = sa - a[i], sb_i = sb - b[i], sab_i = sab - a[i] * b[i];
        out[i] = (sab_i - sa_i * sb_i / m) / (m - 1.0);
    }
    return out;
}

double jackknife_se(std::span<const double> loo) {
    const double n = static_cast<double>(loo.size());
    double mean = 0.0;
    for (double v : loo) mean += v;
    mean /= n;
    double s = 0.0;
    for (double v : loo) s += (v - mean) * (v - mean);
    return std::sqrt((n - 1.0) / n * s);
}

}  // namespace

// ---- identities ---------------------------------------------------------------

Outcome run_identities(const Config& cfg) {
    Experiment ex(cfg, "identities");
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = kernel::run_identity_suite(cfg.identities.samples,
                                                experiment_seed(cfg, "identities"),
                                                cfg.identities.perturb);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    ordered_json s;
    s["command"] = "identities";
    s["artifact_version"] = kVersion;
    s["samples_per_identity"] = rep.samples_per_identity;
    s["tolerance"] = rep.tolerance;
    s["max_rel_error"] = {{"ratio", rep.max_gap_ratio},
                          {"product", rep.max_gap_product},
                          {"scaling", rep.max_gap_scaling}};
    s["elapsed_seconds"] = elapsed;
    if (cfg.identities.perturb != 0.0) s["perturb"] = cfg.identities.perturb;
    return ex.finish(rep.pass, std::move(s));
}

// ---- deterministic oracle ------------------------------------------------------

Outcome run_oracle(const Config& cfg) {
    Experiment ex(cfg, "oracle");
    const OracleConfig& oc = cfg.oracle;
    GridSpec grid = make_grid(oc.dx, oc.guard, oc.half_width, oc.t);
    grid.require_margin(oc.x_window);
    const Field f = run_deterministic(grid);

    std::string csv = "x,u,heat_kernel,rel_error\n";
    double max_rel = 0.0, mass = 0.0;
    for (int i = 0; i < grid.n_cells(); ++i) {
        const double x = grid.x_of(i);
        const double u = f.values[static_cast<std::size_t>(i)];
        mass += u * grid.dx;
        if (std::fabs(x) > oc.x_window + 1e-9) continue;
        const double p = kernel::heat_kernel(oc.t, x);
        const double rel = std::fabs(u - p) / p;
        max_rel = std::max(max_rel, rel);
        csv += num(x) + "," + num(u) + "," + num(p) + "," + num(rel) + "\n";
    }
    write_text(ex.file("oracle.csv"), csv);

    const bool pass = max_rel <= oc.tolerance;
    ordered_json s;
    s["command"] = "oracle";
    s["t"] = oc.t;
    s["dx"] = oc.dx;
    s["dt"] = grid.step_dt();
    s["x_window"] = oc.x_window;
    s["max_rel_error"] = max_rel;
    s["tolerance"] = oc.tolerance;
    s["discrete_mass"] = mass;
    return ex.finish(pass, std::move(s));
}

// ---- simulate -------------------------------------------------------------------

Outcome run_simulate(const Config& cfg, const std::string& resume_records) {
    Experiment ex(cfg, "simulate");
    const SimulateConfig& sc = cfg.simulate;
    GridSpec grid = make_grid(sc.dx, sc.guard, sc.half_width, cfg.t);

    std::vector<double> points = sc.points;
    auto ensure_point = [&points](double x) {
        for (double p : points)
            if (std::fabs(p - x) < 1e-9) return;
        points.push_back(x);
    };
    ensure_point(0.0);
    ensure_point(sc.stationarity_x);
    double max_abs = 0.0;
    for (double p : points) max_abs = std::max(max_abs, std::fabs(p));
    grid.require_margin(max_abs);
    const auto cells = point_cells(grid, points);

    const std::uint64_t eseed = experiment_seed(cfg, "simulate");
    auto fn = [&](std::uint32_t replica, std::span<double> out) {
        RunResult res = run(grid, NoiseStream(eseed, replica));
        for (std::size_t i = 0; i < cells.size(); ++i)
            out[i] = std::log(res.ratio.values[cells[i]]);
        return true;
    };
    RecordTable records =
        ensure_records(ex, sc.replicas, static_cast<std::uint32_t>(points.size()), fn,
                       resume_records);

    // Mean-one over the first half of the ok replicas; stationarity compares
    // the first half at x = 0 with the disjoint second half at x = x0, so the
    // two KS samples come from independent replicas.
    ordered_json point_stats = ordered_json::array();
    std::string csv = "x,n,mean_u,se_u,z_mean_one,mean_logu,var_logu,m2_u,m4_u\n";
    bool mean_one_pass = true;
    const std::size_t half = records.ok_count() / 2;
    ordered_json mean_one = ordered_json::array();
    for (std::size_t c = 0; c < points.size(); ++c) {
        const auto logu = records.column(c);
        std::vector<double> u(logu.size());
        for (std::size_t i = 0; i < logu.size(); ++i) u[i] = std::exp(logu[i]);
        const double mu = stats::mean(u);
        const double se = stats::standard_error_of_mean(u);
        std::vector<double> u2(u.size()), u4(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            u2[i] = u[i] * u[i];
            u4[i] = u2[i] * u2[i];
        }
        csv += num(points[c]) + "," + std::to_string(u.size()) + "," + num(mu) + "," + num(se) +
               "," + num((mu - 1.0) / se) + "," + num(stats::mean(logu)) + "," +
               num(stats::variance(logu)) + "," + num(stats::mean(u2)) + "," +
               num(stats::mean(u4)) + "\n";
        ordered_json pj;
        pj["x"] = points[c];
        pj["mean_u"] = mu;
        pj["se_u"] = se;
        pj["m2_u"] = stats::mean(u2);
        pj["m4_u"] = stats::mean(u4);
        point_stats.push_back(pj);

        // criterion view: first `half` replicas only
        std::vector<double> u_head(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(half));
        const double mh = stats::mean(u_head);
        const double seh = stats::standard_error_of_mean(u_head);
        const double z = (mh - 1.0) / seh;
        if (std::fabs(z) > 3.0) mean_one_pass = false;
        ordered_json mj;
        mj["x"] = points[c];
        mj["n"] = half;
        mj["mean_u"] = mh;
        mj["se"] = seh;
        mj["z"] = z;
        mean_one.push_back(mj);
    }
    write_text(ex.file("simulate.csv"), csv);

    std::vector<double> a, b;
    {
        std::size_t c0 = 0, cx = 0;
        for (std::size_t c = 0; c < points.size(); ++c) {
            if (std::fabs(points[c]) < 1e-9) c0 = c;
            if (std::fabs(points[c] - sc.stationarity_x) < 1e-9) cx = c;
        }
        const auto lu0 = records.column(c0);
        const auto lux = records.column(cx);
        a.assign(lu0.begin(), lu0.begin() + static_cast<std::ptrdiff_t>(half));
        b.assign(lux.begin() + static_cast<std::ptrdiff_t>(half), lux.end());
    }
    const auto ks = stats::ks_two_sample(a, b);
    const bool stationarity_pass = ks.p_value >= 1e-3;

    if (sc.snapshot_replica >= 0) {
        RunResult res = run(grid, NoiseStream(eseed, static_cast<std::uint64_t>(sc.snapshot_replica)));
        std::ofstream snap(ex.file("snapshot.csv"));
        write_snapshot_csv(snap, res);
    }

    const bool pass = mean_one_pass && stationarity_pass;
    ordered_json s;
    s["command"] = "simulate";
    s["t"] = cfg.t;
    s["replicas"] = records.size();
    s["aborted"] = records.abort_count();
    s["grid"] = {{"dx", grid.dx}, {"dt", grid.step_dt()}, {"half_width", grid.half_width}};
    s["mean_one"] = mean_one;
    s["mean_one_pass"] = mean_one_pass;
    s["stationarity"] = {{"x", sc.stationarity_x},
                         {"n_each", half},
                         {"ks_statistic", ks.statistic},
                         {"p_value", ks.p_value},
                         {"pass", stationarity_pass}};
    s["points"] = point_stats;
    return ex.finish(pass, std::move(s));
}

// ---- tail -----------------------------------------------------------------------

Outcome run_tail(const Config& cfg, const std::string& resume_records) {
    Experiment ex(cfg, "tail");
    const TailConfig& tc = cfg.tail;
    const auto theory = kernel::theory_constants(cfg.t);

    // Synthetic oracle first: the fit machinery must recover the exact
    // exp(-theta^{3/2}) generator before the simulation result means anything.
    std::vector<double> synth_thetas;
    for (double th = 0.5; th <= 3.5 + 1e-12; th += 0.25) synth_thetas.push_back(th);
    const auto synth = synthetic_tail_samples(tc.calibration_replicas,
                                              experiment_seed(cfg, "tail-calibration"));
    const TailFit calib = tail_fit(synth, synth_thetas, tc.min_tail_count, tc.bootstrap,
                                   experiment_seed(cfg, "tail-calibration-boot"));
    const bool calib_pass = std::fabs(calib.coefficient - 1.0) <= 0.05;

    GridSpec grid = make_grid(tc.dx, tc.guard, tc.half_width, cfg.t);
    grid.require_margin(0.0);
    const std::size_t center = static_cast<std::size_t>(grid.center());
    const std::uint64_t eseed = experiment_seed(cfg, "tail");
    auto fn = [&](std::uint32_t replica, std::span<double> out) {
        RunResult res = run(grid, NoiseStream(eseed, replica));
        out[0] = std::log(res.ratio.values[center]);
        return true;
    };
    RecordTable records = ensure_records(ex, tc.replicas, 1, fn, resume_records);
    const auto samples = records.column(0);

    std::vector<double> thetas;
    for (double th = tc.theta_min; th <= tc.theta_max + 1e-12; th += tc.theta_step)
        thetas.push_back(th);
    const TailFit fit = tail_fit(samples, thetas, tc.min_tail_count, tc.bootstrap,
                                 experiment_seed(cfg, "tail-boot"));

    std::string csv = "theta,count,survival,se,usable\n";
    for (std::size_t i = 0; i < fit.thresholds.size(); ++i)
        csv += num(fit.thresholds[i]) + "," + std::to_string(fit.counts[i]) + "," +
               num(fit.survival[i]) + "," + num(fit.survival_se[i]) + "," +
               (fit.usable[i] ? "1" : "0") + "\n";
    write_text(ex.file("tail.csv"), csv);

    const double rel_err = std::fabs(fit.coefficient - theory.tail_coefficient) /
                           theory.tail_coefficient;
    const bool pass = calib_pass && rel_err <= 0.25;

    ordered_json s;
    s["command"] = "tail";
    s["t"] = cfg.t;
    s["replicas"] = records.size();
    s["aborted"] = records.abort_count();
    s["calibration"] = {{"n", tc.calibration_replicas},
                        {"coefficient", calib.coefficient},
                        {"ci", {calib.ci_lo, calib.ci_hi}},
                        {"target", 1.0},
                        {"pass", calib_pass}};
    s["coefficient"] = fit.coefficient;
    s["ci"] = {fit.ci_lo, fit.ci_hi};
    s["intercept"] = fit.intercept;
    s["target_coefficient"] = theory.tail_coefficient;
    s["relative_error"] = rel_err;
    s["relative_tolerance"] = 0.25;
    s["usable_thresholds"] = fit.n_usable;
    return ex.finish(pass, std::move(s));
}

// ---- covariance decay -------------------------------------------------------------

Outcome run_cov(const Config& cfg, const std::string& resume_records) {
    Experiment ex(cfg, "cov");
    const CovConfig& cc = cfg.cov;
    GridSpec grid = make_grid(cc.dx, cc.guard, cc.half_width, cfg.t);
    std::vector<double> points = {0.0};
    points.insert(points.end(), cc.xs.begin(), cc.xs.end());
    double max_abs = 0.0;
    for (double p : points) max_abs = std::max(max_abs, std::fabs(p));
    grid.require_margin(max_abs);
    const auto cells = point_cells(grid, points);

    const std::uint64_t eseed = experiment_seed(cfg, "cov");
    auto fn = [&](std::uint32_t replica, std::span<double> out) {
        RunResult res = run(grid, NoiseStream(eseed, replica));
        for (std::size_t i = 0; i < cells.size(); ++i)
            out[i] = std::log(res.ratio.values[cells[i]]);
        return true;
    };
    RecordTable records =
        ensure_records(ex, cc.replicas, static_cast<std::uint32_t>(points.size()), fn,
                       resume_records);

    const auto col0 = records.column(0);
    struct Row {
        double x, cov, se, product, bound;
        std::vector<double> loo;
    };
    std::vector<Row> rows;
    for (std::size_t i = 1; i < points.size(); ++i) {
        Row r;
        r.x = points[i];
        const auto colx = records.column(i);
        const auto est = log_covariance(colx, col0);
        r.cov = est.value;
        r.se = est.se;
        r.product = std::fabs(r.x) * std::fabs(r.cov);
        r.bound = kernel::covariance_integral_bound(cfg.t, r.x);
        r.loo = loo_covariances(colx, col0);
        rows.push_back(std::move(r));
    }

    // Decay shape: x |cov| non-increasing within jackknifed error bars and
    // bounded by 4x its value at the first scan point.
    bool decay_pass = true;
    ordered_json pairs = ordered_json::array();
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const std::size_t n = rows[i].loo.size();
        std::vector<double> loo_delta(n);
        for (std::size_t k = 0; k < n; ++k)
            loo_delta[k] = std::fabs(rows[i + 1].x) * std::fabs(rows[i + 1].loo[k]) -
                           std::fabs(rows[i].x) * std::fabs(rows[i].loo[k]);
        const double delta = rows[i + 1].product - rows[i].product;
        const double se = jackknife_se(loo_delta);
        const bool ok = delta <= 2.0 * se;
        if (!ok) decay_pass = false;
        ordered_json pj;
        pj["x_lo"] = rows[i].x;
        pj["x_hi"] = rows[i + 1].x;
        pj["delta_product"] = delta;
        pj["se"] = se;
        pj["non_increasing_within_2se"] = ok;
        pairs.push_back(pj);
    }
    bool bounded_pass = true;
    for (const auto& r : rows)
        if (r.product > 4.0 * rows.front().product) bounded_pass = false;

    std::string csv = "x,cov,se,n,x_abs_cov,quadrature_bound\n";
    for (const auto& r : rows)
        csv += num(r.x) + "," + num(r.cov) + "," + num(r.se) + "," + std::to_string(col0.size()) +
               "," + num(r.product) + "," + num(r.bound) + "\n";
    write_text(ex.file("cov.csv"), csv);

    const bool pass = decay_pass && bounded_pass;
    ordered_json s;
    s["command"] = "cov";
    s["t"] = cfg.t;
    s["replicas"] = records.size();
    s["aborted"] = records.abort_count();
    ordered_json entries = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json e;
        e["x"] = r.x;
        e["cov"] = r.cov;
        e["se"] = r.se;
        e["x_abs_cov"] = r.product;
        e["quadrature_bound"] = r.bound;
        entries.push_back(e);
    }
    s["covariances"] = entries;
    s["pairs"] = pairs;
    s["fitted_c"] = rows.empty() ? 0.0 : rows.front().product;  // c in |cov| <= c/|x|
    s["decay_non_increasing_pass"] = decay_pass;
    s["bounded_4x_pass"] = bounded_pass;
    return ex.finish(pass, std::move(s));
}

// ---- gap / association --------------------------------------------------------------

Outcome run_gap(const Config& cfg, const std::string& resume_records) {
    Experiment ex(cfg, "gap");
    const GapConfig& gc = cfg.gap;
    GridSpec grid = make_grid(gc.dx, gc.guard, gc.half_width, cfg.t);
    std::vector<double> points = gc.points;
    for (double x : gc.xs) {
        bool found = false;
        for (double p : points)
            if (std::fabs(p - x) < 1e-9) found = true;
        if (!found) points.push_back(x);
    }
    bool has_zero = false;
    for (double p : points)
        if (std::fabs(p) < 1e-9) has_zero = true;
    if (!has_zero) points.push_back(0.0);
    std::sort(points.begin(), points.end());
    double max_abs = 0.0;
    for (double p : points) max_abs = std::max(max_abs, std::fabs(p));
    grid.require_margin(max_abs);
    const auto cells = point_cells(grid, points);

    const std::uint64_t eseed = experiment_seed(cfg, "gap");
    auto fn = [&](std::uint32_t replica, std::span<double> out) {
        RunResult res = run(grid, NoiseStream(eseed, replica));
        for (std::size_t i = 0; i < cells.size(); ++i)
            out[i] = std::log(res.ratio.values[cells[i]]);
        return true;
    };
    RecordTable records =
        ensure_records(ex, gc.replicas, static_cast<std::uint32_t>(points.size()), fn,
                       resume_records);

    SampleSet samples;
    samples.points = points;
    for (std::size_t r = 0; r < records.size(); ++r) {
        if (!records.ok(r)) continue;
        samples.replica_ids.push_back(records.id(r));
        const auto row = records.row(r);
        samples.log_u.insert(samples.log_u.end(), row.begin(), row.end());
    }

    const std::size_t zero_col = samples.point_index(0.0);
    const auto zeros = samples.column(zero_col);

    std::string csv = "x,i,j,a,b,gap,se\n";
    ordered_json gaps = ordered_json::array();
    bool pqd_pass = true, anomaly = false;
    for (double x : gc.xs) {
        const auto colx = samples.column(samples.point_index(x));
        const GapReport rep = cdf_gap_test(colx, zeros, gc.grid);
        for (int i = 0; i < rep.grid; ++i)
            for (int j = 0; j < rep.grid; ++j) {
                const std::size_t idx = static_cast<std::size_t>(i) * static_cast<std::size_t>(rep.grid) + static_cast<std::size_t>(j);
                csv += num(x) + "," + std::to_string(i) + "," + std::to_string(j) + "," +
                       num(rep.a_cuts[static_cast<std::size_t>(i)]) + "," + num(rep.b_cuts[static_cast<std::size_t>(j)]) + "," +
                       num(rep.gap[idx]) + "," + num(rep.se[idx]) + "\n";
            }
        if (!rep.pqd_pass) pqd_pass = false;
        if (rep.covariance_anomaly) anomaly = true;
        ordered_json gj;
        gj["x"] = x;
        gj["sup_gap"] = rep.sup_gap;
        gj["min_normalized_gap"] = rep.min_normalized;
        gj["covariance"] = rep.covariance;
        gj["covariance_se"] = rep.covariance_se;
        gj["gap_over_cov_cuberoot"] = rep.ratio;
        gj["pqd_pass"] = rep.pqd_pass;
        gaps.push_back(gj);
    }
    write_text(ex.file("gap.csv"), csv);

    const AssociationReport assoc = association_test(samples);
    std::string acsv = "h1,h2,cov,se,normalized\n";
    ordered_json apairs = ordered_json::array();
    for (const auto& p : assoc.pairs) {
        acsv += p.h1 + "," + p.h2 + "," + num(p.covariance) + "," + num(p.se) + "," +
                num(p.covariance / p.se) + "\n";
        ordered_json aj;
        aj["h1"] = p.h1;
        aj["h2"] = p.h2;
        aj["cov"] = p.covariance;
        aj["se"] = p.se;
        apairs.push_back(aj);
    }
    write_text(ex.file("association.csv"), acsv);

    const bool pass = pqd_pass && assoc.pass && !anomaly;
    ordered_json s;
    s["command"] = "gap";
    s["t"] = cfg.t;
    s["replicas"] = records.size();
    s["aborted"] = records.abort_count();
    s["quantile_grid"] = gc.grid;
    s["gap_reports"] = gaps;
    s["pqd_pass"] = pqd_pass;
    s["covariance_anomaly"] = anomaly;
    s["association"] = {{"pairs", apairs},
                        {"min_normalized", assoc.min_normalized},
                        {"pass", assoc.pass}};
    return ex.finish(pass, std::move(s));
}

// ---- density --------------------------------------------------------------------

Outcome run_density(const Config& cfg, const std::string& resume_records) {
    Experiment ex(cfg, "density");
    const DensityConfig& dc = cfg.density;
    GridSpec grid = make_grid(dc.dx, dc.guard, dc.half_width, cfg.t);
    grid.require_margin(0.0);
    const std::size_t center = static_cast<std::size_t>(grid.center());
    const std::uint64_t eseed = experiment_seed(cfg, "density");
    auto fn = [&](std::uint32_t replica, std::span<double> out) {
        RunResult res = run(grid, NoiseStream(eseed, replica));
        out[0] = std::log(res.ratio.values[center]);
        return true;
    };
    RecordTable records = ensure_records(ex, dc.replicas, 1, fn, resume_records);
    const auto samples = records.column(0);

    std::vector<double> ygrid;
    for (double y = dc.y_min; y <= dc.y_max + 1e-12; y += dc.y_step) ygrid.push_back(y);
    std::optional<double> bw;
    if (dc.bandwidth > 0.0) bw = dc.bandwidth;
    const DensityReport rep = density_boundedness(samples, bw, ygrid);

    std::string csv = "y,density,density_half_bandwidth\n";
    for (std::size_t i = 0; i < rep.grid.size(); ++i)
        csv += num(rep.grid[i]) + "," + num(rep.density[i]) + "," + num(rep.density_half[i]) + "\n";
    write_text(ex.file("density.csv"), csv);

    std::string tcsv = "y,count,survival,usable\n";
    for (std::size_t i = 0; i < rep.tail_y.size(); ++i)
        tcsv += num(rep.tail_y[i]) + "," + std::to_string(rep.tail_counts[i]) + "," +
                num(rep.tail_survival[i]) + "," + (rep.tail_usable[i] ? "1" : "0") + "\n";
    write_text(ex.file("density_tail.csv"), tcsv);

    const bool pass = rep.stable && rep.exponent_in_range;
    ordered_json s;
    s["command"] = "density";
    s["t"] = cfg.t;
    s["replicas"] = records.size();
    s["aborted"] = records.abort_count();
    s["bandwidth"] = rep.bandwidth;
    s["sup_density"] = rep.sup;
    s["sup_density_half_bandwidth"] = rep.sup_half;
    s["rel_change_under_halving"] = rep.rel_change;
    s["stable_within_10pct"] = rep.stable;
    s["tail_exponent"] = rep.tail_exponent;
    s["tail_exponent_range"] = {1.2, 1.8};
    s["tail_exponent_in_range"] = rep.exponent_in_range;
    s["tail_c1"] = rep.tail_c1;
    s["tail_c2"] = rep.tail_c2;
    return ex.finish(pass, std::move(s));
}

// ---- spatial max scan --------------------------------------------------------------

Outcome run_maxscan(const Config& cfg, const std::string& resume_records) {
    Experiment ex(cfg, "maxscan");
    const MaxScanConfig& mc = cfg.maxscan;
    GridSpec grid = make_grid(mc.dx, mc.guard, mc.half_width, cfg.t);
    std::vector<double> radii = mc.radii;
    std::sort(radii.begin(), radii.end());
    grid.require_margin(radii.back());

    const std::uint64_t eseed = experiment_seed(cfg, "maxscan");
    RunOptions opts;
    opts.scheme = Scheme::log_domain;
    auto fn = [&](std::uint32_t replica, std::span<double> out) {
        RunResult res = run(grid, NoiseStream(eseed, replica), opts);
        const auto row = spatial_max_row(res.ratio, radii);
        std::copy(row.begin(), row.end(), out.begin());
        return true;
    };
    RecordTable records =
        ensure_records(ex, mc.replicas, static_cast<std::uint32_t>(radii.size()), fn,
                       resume_records);

    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < records.size(); ++r) {
        if (!records.ok(r)) continue;
        const auto row = records.row(r);
        rows.emplace_back(row.begin(), row.end());
    }
    const MaxScanSummary sum = summarize_max_scan(rows, radii, cfg.t);

    std::string csv = "R,median_ratio,q25_ratio,q75_ratio,median_m,lower_const,upper_const\n";
    for (std::size_t k = 0; k < radii.size(); ++k)
        csv += num(radii[k]) + "," + num(sum.median[k]) + "," + num(sum.q25[k]) + "," +
               num(sum.q75[k]) + "," + num(sum.median_m[k]) + "," + num(sum.lower_const) + "," +
               num(sum.upper_const) + "\n";
    write_text(ex.file("maxscan.csv"), csv);

    bool envelope_pass = true;
    for (double m : sum.median)
        if (m < 0.15 || m > 1.0) envelope_pass = false;
    bool trend_nondecreasing = true;
    for (std::size_t k = 1; k < sum.median.size(); ++k)
        if (sum.median[k] < sum.median[k - 1]) trend_nondecreasing = false;

    ordered_json s;
    s["command"] = "maxscan";
    s["t"] = cfg.t;
    s["replicas"] = records.size();
    s["aborted"] = records.abort_count();
    s["scheme"] = "log_domain";
    s["radii"] = radii;
    s["median_ratio"] = sum.median;
    s["q25_ratio"] = sum.q25;
    s["q75_ratio"] = sum.q75;
    s["median_m"] = sum.median_m;
    s["bracket"] = {sum.lower_const, sum.upper_const};
    s["loose_envelope"] = {0.15, 1.0};
    s["envelope_pass"] = envelope_pass;
    s["trend_nondecreasing"] = trend_nondecreasing;  // reported, not gating
    s["monotone_per_replica"] = sum.monotone_per_replica;
    return ex.finish(envelope_pass, std::move(s));
}

// ---- blocking ------------------------------------------------------------------------

Outcome run_blocking(const Config& cfg, const std::string& resume_records) {
    Experiment ex(cfg, "blocking");
    const BlockingConfig& bc = cfg.blocking;
    std::vector<double> radii = bc.radii;
    std::sort(radii.begin(), radii.end());

    // Distinct evaluation points across all R, each served by one sliding
    // window; windows within a replica share the same stream so overlapping
    // noise strips couple exactly as the joint field requires.
    std::vector<double> window_x;
    std::vector<std::vector<std::size_t>> r_to_windows;
    for (double R : radii) {
        const auto pts = blocking_points(R, bc.a);
        std::vector<std::size_t> idx;
        for (double x : pts) {
            std::size_t found = window_x.size();
            for (std::size_t w = 0; w < window_x.size(); ++w)
                if (std::fabs(window_x[w] - x) < 1e-9) found = w;
            if (found == window_x.size()) window_x.push_back(x);
            idx.push_back(found);
        }
        r_to_windows.push_back(std::move(idx));
    }

    GridSpec wgrid = make_grid(bc.dx, bc.guard, bc.window_half_width, cfg.t);
    wgrid.require_margin(0.0);
    const std::size_t center = static_cast<std::size_t>(wgrid.center());
    const std::uint64_t eseed = experiment_seed(cfg, "blocking");
    auto fn = [&](std::uint32_t replica, std::span<double> out) {
        NoiseStream stream(eseed, replica);
        for (std::size_t w = 0; w < window_x.size(); ++w) {
            RunOptions opts;
            opts.frame_velocity = window_x[w] / cfg.t;
            RunResult res = run(wgrid, stream, opts);
            out[w] = std::log(res.ratio.values[center]);
        }
        return true;
    };
    RecordTable records =
        ensure_records(ex, bc.replicas, static_cast<std::uint32_t>(window_x.size()), fn,
                       resume_records);

    // Per-replica indicators 1{max_j log U <= theta_R}; consecutive-R decay is
    // tested on paired differences so common-noise correlation tightens the bars.
    std::vector<std::vector<std::uint8_t>> indicators(radii.size());
    std::vector<BlockingEstimate> estimates;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const double theta = blocking_threshold(radii[k], bc.beta);
        std::vector<double> max_vals;
        for (std::size_t r = 0; r < records.size(); ++r) {
            if (!records.ok(r)) continue;
            const auto row = records.row(r);
            double m = -std::numeric_limits<double>::infinity();
            for (std::size_t w : r_to_windows[k]) m = std::max(m, row[w]);
            max_vals.push_back(m);
            indicators[k].push_back(m <= theta ? 1 : 0);
        }
        estimates.push_back(
            estimate_blocking(max_vals, radii[k], bc.beta, r_to_windows[k].size()));
    }

    bool decay_pass = true;
    ordered_json pairs = ordered_json::array();
    for (std::size_t k = 0; k + 1 < radii.size(); ++k) {
        const auto& ia = indicators[k];
        const auto& ib = indicators[k + 1];
        std::vector<double> d(ia.size());
        for (std::size_t i = 0; i < ia.size(); ++i)
            d[i] = static_cast<double>(ib[i]) - static_cast<double>(ia[i]);
        const double delta = stats::mean(d);
        const double se = stats::standard_error_of_mean(d);
        const bool ok = delta <= 2.0 * se;
        if (!ok) decay_pass = false;
        ordered_json pj;
        pj["R_lo"] = radii[k];
        pj["R_hi"] = radii[k + 1];
        pj["delta_probability"] = delta;
        pj["se"] = se;
        pj["non_increasing_within_2se"] = ok;
        pairs.push_back(pj);
    }

    std::string csv = "R,threshold,n_points,probability,se\n";
    for (const auto& est : estimates)
        csv += num(est.R) + "," + num(est.threshold) + "," + std::to_string(est.n_points) + "," +
               num(est.probability) + "," + num(est.se) + "\n";
    write_text(ex.file("blocking.csv"), csv);

    std::string pcsv = "R,j,x_j\n";
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const auto pts = blocking_points(radii[k], bc.a);
        for (std::size_t j = 0; j < pts.size(); ++j)
            pcsv += num(radii[k]) + "," + std::to_string(j + 1) + "," + num(pts[j]) + "\n";
    }
    write_text(ex.file("blocking_points.csv"), pcsv);

    const auto theory = kernel::theory_constants(cfg.t);
    const double proof_beta_cap = bc.a / theory.tail_coefficient;
    ordered_json s;
    s["command"] = "blocking";
    s["t"] = cfg.t;
    s["replicas"] = records.size();
    s["aborted"] = records.abort_count();
    s["a"] = bc.a;
    s["beta"] = bc.beta;
    s["beta_upper_bound_eighth_sqrt_t_half"] = 0.125 * std::sqrt(cfg.t / 2.0);
    s["proof_side_beta_cap"] = proof_beta_cap;  // a / ((4/3) sqrt(2/t)), epsilon -> 0
    s["proof_side_constraint_satisfied"] = bc.beta < proof_beta_cap;
    ordered_json ests = ordered_json::array();
    for (const auto& est : estimates) {
        ordered_json e;
        e["R"] = est.R;
        e["threshold"] = est.threshold;
        e["n_points"] = est.n_points;
        e["probability"] = est.probability;
        e["se"] = est.se;
        ests.push_back(e);
    }
    s["estimates"] = ests;
    s["pairs"] = pairs;
    s["decay_non_increasing_pass"] = decay_pass;
    return ex.finish(decay_pass, std::move(s));
}

}  // namespace pam
