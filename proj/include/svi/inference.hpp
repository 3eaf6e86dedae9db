#pragma once

#include "svi/saa_solver.hpp"

namespace svi {

// d(f_n)_S(z_n) resolved to a single selection M = J*A + I - A.
struct NormalMapDerivative {
    Vector base_point;
    FacePattern pattern;
    Matrix m;
    bool is_linear = false;      // false when z_n was boundary-tagged at tau
    bool is_invertible = false;
    double condition_estimate = 0.0;
};

enum class RegionKind { FullRank, Degenerate };

struct ConfidenceRegion {
    RegionKind kind = RegionKind::FullRank;
    Vector center;
    std::size_t n = 0;
    double alpha = 0.0;

    // FullRank: n (z-c)^T Q (z-c) <= radius with Q = M^T Sigma^-1 M.
    Matrix q_shape;
    double radius = 0.0;

    // Degenerate: ellipsoidal part through (U1, D) plus an inf-norm slab of
    // width epsilon on the U2 directions (epsilon = 0 is the flat region).
    Matrix m;
    Matrix u1;      // l_n x q
    Vector d;       // l_n retained eigenvalues
    Matrix u2;      // (q - l_n) x q
    std::size_t l = 0;
    double epsilon = 0.0;
};

enum class IntervalKind { Simultaneous, Individual };

struct IntervalSet {
    std::vector<std::pair<double, double>> bounds;
    IntervalKind kind = IntervalKind::Simultaneous;
    double alpha = 0.0;
};

// Cells at z_0 with the limiting-law objects of each: selection matrix A_i,
// M_i = L A_i + I - A_i, C_i = M_i^-1 Sigma_0 M_i^-T and its diagonal roots.
struct LimitingLaw {
    Matrix l;
    Matrix sigma0;
    BoxSet s;
    Vector z0;
    std::vector<FacePattern> cells;
    std::vector<Matrix> selection;   // A_i
    std::vector<Matrix> m;           // M_i
    std::vector<Matrix> m_inv;
    std::vector<Matrix> c;           // C_i
    std::vector<Vector> r;           // r[i][j] = sqrt((C_i)_jj)
};

struct SingularCovariance : std::runtime_error {
    explicit SingularCovariance(const std::string& what) : std::runtime_error(what) {}
};
struct NonInvertibleDerivative : std::runtime_error {
    explicit NonInvertibleDerivative(const std::string& what) : std::runtime_error(what) {}
};
struct ThresholdAboveAllEigenvalues : std::runtime_error {
    explicit ThresholdAboveAllEigenvalues(const std::string& what) : std::runtime_error(what) {}
};
struct UnsupportedRegion : std::runtime_error {
    explicit UnsupportedRegion(const std::string& what) : std::runtime_error(what) {}
};
struct SingularSelection : std::runtime_error {
    explicit SingularSelection(const std::string& what) : std::runtime_error(what) {}
};
struct NoConsistentCell : std::runtime_error {
    explicit NoConsistentCell(const std::string& what) : std::runtime_error(what) {}
};

NormalMapDerivative derivative_at(const SaaMap& f, const BoxSet& s,
                                  const SolveResult& result, double tau);

// Relative spectral threshold used when the caller does not fix rho0.
double default_rho0(const CovarianceEstimate& sigma);

ConfidenceRegion region_fullrank(const NormalMapDerivative& d,
                                 const CovarianceEstimate& sigma, std::size_t n,
                                 double alpha, double rho0 = 0.0);

ConfidenceRegion region_degenerate(const NormalMapDerivative& d,
                                   const CovarianceEstimate& sigma, std::size_t n,
                                   double alpha, double rho0, double epsilon);

bool region_contains(const ConfidenceRegion& region, const Vector& z);

IntervalSet simultaneous_intervals(const ConfidenceRegion& region);

IntervalSet individual_intervals(const NormalMapDerivative& d,
                                 const CovarianceEstimate& sigma, std::size_t n,
                                 double alpha);

LimitingLaw limiting_law(const Matrix& l, const Matrix& sigma0, const BoxSet& s,
                         const Vector& z0, double tau);

bool coherent_orientation(const LimitingLaw& law);

// Inverse of the piecewise-linear map h -> M_i h on the cone of cell i;
// lowest-index match wins on cone boundaries. Returns the cell index too.
std::pair<Vector, std::size_t> lk_inverse_cell(const LimitingLaw& law, const Vector& y);
Vector lk_inverse(const LimitingLaw& law, const Vector& y);

// Monte Carlo estimate of the limiting coverage of the individual interval
// for coordinate j. Deterministic per stream; parallel chunks fold in order.
double limiting_individual_coverage(const LimitingLaw& law, std::size_t j,
                                    double alpha, std::size_t samples,
                                    RngStream stream, int threads = 0);

IntervalSet project_intervals_to_x(const IntervalSet& intervals, const BoxSet& s);

// Sufficient-condition report for the limiting coverage to equal 1 - alpha:
// k <= 2, or all C_i diagonal on a box. Empty string when neither holds.
std::string coverage_condition_note(const LimitingLaw& law);

}  // namespace svi
