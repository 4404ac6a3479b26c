#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "slelab/constants.hpp"
#include "slelab/hulls.hpp"
#include "slelab/martingales.hpp"
#include "slelab/stats.hpp"

namespace slelab {

enum class ExperimentKind {
    Restriction,
    Duality,
    Conditioning,
    Reconditioning,
    Bilateral,
    DriftSuite,
};

std::string kind_name(ExperimentKind kind);

/**
 * Flat configuration for every experiment kind. Reads/writes the key=value
 * config format (kappa=6, rho=2, side=right, hull.x=1, hull.r=0.3, ...).
 */
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Restriction;
    double kappa = 6.0;
    std::vector<double> rhos = {2.0};
    Side side = Side::Right;
    double hull_x = 1.0;
    double hull_r = 0.3;
    double dt = 5e-4;
    double t_max = 0.0;  // 0 = auto: 400 * (farthest hull point)^2
    std::size_t n = 10000;
    std::uint64_t seed = 42;

    // conditioning / reconditioning
    double x = 1.0;
    double y = 0.5;
    double L = -10.0;
    double functional_T = 0.5;

    // bilateral
    double epsilon = 0.0;  // 0 = auto: 1e-4 * hull distance scale

    // machinery
    std::size_t n_hull_samples = 48;
    double detach_threshold = 2e-3;
    int threads = 0;
    bool stability_check = true;  // rerun with halved dt (coupled noise)

    void validate() const;
    std::string canonical_string() const;
    std::string digest() const;  // FNV-1a 64 of the canonical string, hex

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_keyvals(const std::map<std::string, std::string>& kv);
    void apply_keyval(const std::string& key, const std::string& value);
};

struct ExperimentResult {
    std::string kind;
    std::string label;
    double estimate = 0.0;
    double stderr_ = 0.0;
    bool has_target = false;
    double target = 0.0;
    double z = 0.0;
    std::size_t n = 0;
    std::size_t invalid = 0;
    bool inconclusive = false;
    double seconds = 0.0;
    std::string digest;
    std::vector<std::pair<std::string, double>> extras;
};

/// One line of the per-replica NDJSON detail stream.
struct ReplicaRecord {
    std::uint64_t seed_index = 0;
    std::string status;
    double m_terminal = 0.0;
    double ratio_at_tmax = 0.0;
    double schwarzian_integral = 0.0;
    bool invalid_flag = false;
};

/// Per-path outcome of the avoidance engine.
enum class AvoidanceStatus { Avoided, Hit, Invalid, Unresolved };

struct AvoidanceSummary {
    std::size_t avoided = 0;
    std::size_t hit = 0;
    std::size_t invalid = 0;
    std::size_t unresolved = 0;  // still running at t_max; counted as avoided
    MeanStderr freq;             // avoided / (avoided + hit)
    std::vector<ReplicaRecord> records;
};

/**
 * Core Monte Carlo: n independent paths of the process, each co-evolving the
 * hull boundary samples, classified hit (hull met) / avoided (martingale
 * detached above 1 - threshold, or horizon reached). interior_check adds a
 * grid of interior points for simple-trace regimes (kappa <= 4), where a
 * graze can slip between boundary samples.
 */
AvoidanceSummary run_avoidance(const SleParameters& params, const SemidiskHull& hull, double dt,
                               double t_max, std::size_t n, std::uint64_t seed,
                               const TrackerOptions& topts, bool interior_check, int coarsen,
                               int threads, bool collect_records);

ExperimentResult run_restriction(const ExperimentConfig& cfg);
std::vector<ExperimentResult> run_duality(const ExperimentConfig& cfg);
std::vector<ExperimentResult> run_conditioning(const ExperimentConfig& cfg);
std::vector<ExperimentResult> run_reconditioning(const ExperimentConfig& cfg);
std::vector<ExperimentResult> run_bilateral(const ExperimentConfig& cfg);
std::vector<ExperimentResult> run_drift_suite(const ExperimentConfig& cfg);

std::vector<ExperimentResult> run_experiment(const ExperimentConfig& cfg,
                                             std::vector<ReplicaRecord>* detail = nullptr);

/**
 * Writes results/<digest>/summary.csv, detail.ndjson and manifest. Returns
 * the output directory. Exit policy lives in report_exit_code.
 */
std::string emit_report(const ExperimentConfig& cfg, const std::vector<ExperimentResult>& results,
                        const std::vector<ReplicaRecord>& detail, const std::string& out_root);

/// Nonzero iff any |z| > 4, or (strict) any inconclusive flag.
int report_exit_code(const std::vector<ExperimentResult>& results, bool strict);

/// Rebuild summary.csv from an existing detail.ndjson + manifest (byte-stable).
void regenerate_report(const std::string& run_dir);

std::string fnv1a_hex(const std::string& s);

}  // namespace slelab
