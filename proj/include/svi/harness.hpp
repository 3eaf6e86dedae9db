#pragma once

#include <map>
#include <string>

#include "svi/inference.hpp"

namespace svi {

struct ExperimentConfig {
    AffineScenarioModel model;
    BoxSet s;
    std::optional<Vector> z0;        // computed from the true map when absent
    std::vector<std::size_t> sample_sizes;
    std::size_t replications = 1;
    std::vector<double> alphas;
    std::uint64_t master_seed = 0;
    double rho0 = 0.0;               // 0 -> relative default per replication
    double epsilon = 0.0;
    bool coverage = true;
    bool qq = true;
    bool ellipse = false;
    bool limiting = false;
    std::size_t limiting_samples = 1000000;
    std::size_t limiting_coordinate = 0;
    double failure_rate_cap = 0.05;
};

struct ReplicationRecord {
    std::size_t n = 0;
    std::size_t replication = 0;
    bool solver_ok = false;
    bool derivative_linear = false;
    bool derivative_invertible = false;
    Vector z;
    double squared_distance = 0.0;   // n [M(z0-zn)]^T Sigma^-1 [M(z0-zn)]
    // per alpha: joint simultaneous coverage, region coverage, per-coordinate
    // individual coverage of z0
    std::map<double, bool> sim_covers;
    std::map<double, bool> region_covers;
    std::map<double, std::vector<bool>> ind_covers;
    std::map<double, IntervalSet> sim_intervals;
    std::map<double, IntervalSet> ind_intervals;
};

struct CoverageCell {
    std::size_t sim_count = 0;
    std::size_t region_count = 0;
    std::vector<std::size_t> ind_counts;
    std::size_t denominator = 0;
};

struct CoverageReport {
    // keyed by (n, alpha); failures excluded from denominators
    std::map<std::pair<std::size_t, double>, CoverageCell> cells;
    std::size_t nonlinear_patterns = 0;
    std::size_t noninvertible = 0;
    std::size_t solver_failures = 0;
};

struct QqData {
    std::size_t n = 0;
    std::vector<double> quantiles;
    std::vector<double> distances;  // sorted squared distances

    double origin_slope() const;    // least squares through the origin
};

struct RunOutput {
    CoverageReport report;
    std::vector<QqData> qq;
    std::vector<ReplicationRecord> records;
};

struct ConfigParse : std::runtime_error {
    explicit ConfigParse(const std::string& what) : std::runtime_error(what) {}
};
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};
struct DimensionNot2 : std::runtime_error {
    explicit DimensionNot2(const std::string& what) : std::runtime_error(what) {}
};

RunOutput run_replications(const ExperimentConfig& cfg, int threads = 0);

// Boundary of a q=2 full-rank region, rows (x, y) satisfying the defining
// equality; `points` samples by angle.
std::vector<std::pair<double, double>> emit_ellipse_boundary(
    const ConfidenceRegion& region, std::size_t points);

ExperimentConfig load_config(const std::string& path);

void write_outputs(const std::string& dir, const ExperimentConfig& cfg,
                   const RunOutput& out);

// Printed (J, b, Sigma_n, n) instance for Table-1 style inference without
// the generating seed.
struct Fixture {
    std::size_t q = 0;
    Matrix jacobian;
    Vector offset;
    Matrix sigma;
    std::size_t n = 0;
};

Fixture load_fixture(const std::string& path);

}  // namespace svi
