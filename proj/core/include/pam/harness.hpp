#ifndef PAM_HARNESS_HPP
#define PAM_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pam/config.hpp"
#include "pam/estimator.hpp"

namespace pam {

// Fixed-width per-replica observations, keyed by replica id and kept in
// ascending id order. Being the raw sufficient data (rather than running
// floating-point accumulators), merges and reductions are exact: any
// partition of the replica range yields bit-identical statistics.
class RecordTable {
  public:
    RecordTable() = default;
    RecordTable(std::uint64_t config_hash, std::uint32_t width)
        : config_hash_(config_hash), width_(width) {}

    std::uint64_t config_hash() const { return config_hash_; }
    std::uint32_t width() const { return width_; }
    std::size_t size() const { return ids_.size(); }
    std::size_t ok_count() const;
    std::size_t abort_count() const { return size() - ok_count(); }

    std::uint32_t id(std::size_t row) const { return ids_[row]; }
    bool ok(std::size_t row) const { return ok_[row] != 0; }
    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * width_, width_};
    }

    // Rows must be appended in ascending id order within one table.
    void append(std::uint32_t id, bool ok, std::span<const double> values);

    // Associative, commutative merge; ContractError on config-hash mismatch
    // or overlapping replica ids.
    static RecordTable merged(const RecordTable& a, const RecordTable& b);

    void save(const std::string& path) const;
    static RecordTable load(const std::string& path);

    // Column of ok-row values; aborted rows are excluded.
    std::vector<double> column(std::size_t col) const;

  private:
    std::uint64_t config_hash_ = 0;
    std::uint32_t width_ = 0;
    std::vector<std::uint32_t> ids_;
    std::vector<std::uint8_t> ok_;
    std::vector<double> data_;
};

// One replica's computation: fill `out` (record width) and return true, or
// return false to mark the replica aborted. Exceptions of type NumericError
// are caught and recorded as aborts.
using ReplicaFn = std::function<bool(std::uint32_t replica, std::span<double> out)>;

struct EnsembleOptions {
    std::size_t replicas = 0;
    std::uint32_t first_replica = 0;
    std::uint32_t width = 1;
    int threads = 1;
    std::uint64_t config_hash = 0;
    double abort_budget = 1e-3;  // run fails beyond this abort fraction
};

// Work-stealing execution of [first, first + replicas) with canonical-order
// assembly; the result is independent of thread count and scheduling.
// NumericError if the abort fraction exceeds the budget.
RecordTable run_replicas(const EnsembleOptions& opts, const ReplicaFn& fn);

// Resolve the worker count: explicit > 0 wins, else PAMLAB_THREADS, else
// hardware concurrency.
int resolve_threads(int requested);

struct Outcome {
    bool pass = false;
    std::string summary_json;         // written verbatim to <name>_summary.json
    std::vector<std::string> files;   // all artifacts written, manifest last
};

// Experiment drivers. Each runs its ensemble, evaluates its estimators,
// writes CSV outputs plus <name>_summary.json and <name>_manifest.json under
// cfg.out_dir, and reports pass/fail. `resume_records` (optional path to a
// previous run's record file) seeds the ensemble with already-computed
// replicas; missing ones are computed and merged.
Outcome run_identities(const Config& cfg);
Outcome run_oracle(const Config& cfg);
Outcome run_simulate(const Config& cfg, const std::string& resume_records = "");
Outcome run_tail(const Config& cfg, const std::string& resume_records = "");
Outcome run_cov(const Config& cfg, const std::string& resume_records = "");
Outcome run_gap(const Config& cfg, const std::string& resume_records = "");
Outcome run_density(const Config& cfg, const std::string& resume_records = "");
Outcome run_maxscan(const Config& cfg, const std::string& resume_records = "");
Outcome run_blocking(const Config& cfg, const std::string& resume_records = "");

}  // namespace pam

#endif
