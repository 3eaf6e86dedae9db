#include "svi/inference.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace svi {

namespace {

FacePattern resolve_to_middle(FacePattern p) {
    std::vector<Piece> res(p.tags.size());
    for (std::size_t j = 0; j < p.tags.size(); ++j) {
        switch (p.tags[j]) {
            case FaceTag::BelowLower: res[j] = Piece::Lower; break;
            case FaceTag::AboveUpper: res[j] = Piece::Upper; break;
            case FaceTag::AtBothBounds: res[j] = Piece::Lower; break;
            default: res[j] = Piece::Middle; break;
        }
    }
    p.resolution = std::move(res);
    return p;
}

Matrix selection_to_m(const Matrix& jac, const FacePattern& p) {
    const Matrix a = selection_matrix(p).as_matrix();
    return jac * a + Matrix::identity(jac.rows) - a;
}

Vector diff(const Vector& a, const Vector& b) {
    Vector d(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) d[j] = a[j] - b[j];
    return d;
}

}  // namespace

NormalMapDerivative derivative_at(const SaaMap& f, const BoxSet& s,
                                  const SolveResult& result, double tau) {
    NormalMapDerivative d;
    d.base_point = result.z;
    FacePattern p = classify(s, result.z, tau);
    d.is_linear = true;
    for (FaceTag t : p.tags)
        if (t == FaceTag::AtLower || t == FaceTag::AtUpper || t == FaceTag::AtBothBounds)
            d.is_linear = false;
    d.pattern = resolve_to_middle(p);
    d.m = selection_to_m(f.jacobian, d.pattern);
    try {
        const Matrix minv = inverse(d.m);
        d.is_invertible = true;
        d.condition_estimate = frobenius_norm(d.m) * frobenius_norm(minv);
    } catch (const SingularMatrix&) {
        d.is_invertible = false;
        d.condition_estimate = std::numeric_limits<double>::infinity();
    }
    return d;
}

double default_rho0(const CovarianceEstimate& sigma) {
    const EigenDecomposition e = eig_sym(sigma.sigma);
    return 1e-8 * std::max(e.values.front(), 0.0);
}

ConfidenceRegion region_fullrank(const NormalMapDerivative& d,
                                 const CovarianceEstimate& sigma, std::size_t n,
                                 double alpha, double rho0) {
    if (!d.is_invertible || !d.is_linear)
        throw NonInvertibleDerivative("region_fullrank: derivative not invertible linear");
    const double rho = rho0 > 0 ? rho0 : default_rho0(sigma);
    const EigenDecomposition e = eig_sym(sigma.sigma);
    if (e.values.back() <= rho)
        throw SingularCovariance("region_fullrank: Sigma_n near-singular, use region_degenerate");
    ConfidenceRegion r;
    r.kind = RegionKind::FullRank;
    r.center = d.base_point;
    r.n = n;
    r.alpha = alpha;
    const std::size_t q = d.m.rows;
    r.q_shape = transpose(d.m) * lu_solve(sigma.sigma, d.m);
    // symmetrize roundoff
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = i + 1; j < q; ++j) {
            const double v = 0.5 * (r.q_shape(i, j) + r.q_shape(j, i));
            r.q_shape(i, j) = r.q_shape(j, i) = v;
        }
    r.radius = chi2_quantile(static_cast<int>(q), alpha);
    r.m = d.m;
    return r;
}

ConfidenceRegion region_degenerate(const NormalMapDerivative& d,
                                   const CovarianceEstimate& sigma, std::size_t n,
                                   double alpha, double rho0, double epsilon) {
    if (!d.is_invertible)
        throw NonInvertibleDerivative("region_degenerate: derivative not invertible");
    if (rho0 <= 0) throw std::invalid_argument("region_degenerate: rho0 must be positive");
    const EigenDecomposition e = eig_sym(sigma.sigma);
    const std::size_t q = sigma.sigma.rows;
    std::size_t l = 0;
    while (l < q && e.values[l] >= rho0) ++l;
    if (l == 0)
        throw ThresholdAboveAllEigenvalues("region_degenerate: no eigenvalue reaches rho0");

    ConfidenceRegion r;
    r.kind = RegionKind::Degenerate;
    r.center = d.base_point;
    r.n = n;
    r.alpha = alpha;
    r.m = d.m;
    r.l = l;
    r.epsilon = epsilon;
    r.d.assign(e.values.begin(), e.values.begin() + l);
    r.u1 = Matrix(l, q);
    r.u2 = Matrix(q - l, q);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < q; ++j) r.u1(i, j) = e.vectors_rows(i, j);
    for (std::size_t i = l; i < q; ++i)
        for (std::size_t j = 0; j < q; ++j) r.u2(i - l, j) = e.vectors_rows(i, j);
    r.radius = chi2_quantile(static_cast<int>(l), alpha);
    return r;
}

bool region_contains(const ConfidenceRegion& region, const Vector& z) {
    const Vector dz = diff(z, region.center);
    if (region.kind == RegionKind::FullRank) {
        const Vector qd = mat_vec(region.q_shape, dz);
        return static_cast<double>(region.n) * dot(dz, qd) <= region.radius;
    }
    const Vector v = mat_vec(region.m, dz);
    const Vector u1v = mat_vec(region.u1, v);
    double quad = 0.0;
    for (std::size_t i = 0; i < region.l; ++i) quad += u1v[i] * u1v[i] / region.d[i];
    if (static_cast<double>(region.n) * quad > region.radius) return false;
    const Vector u2v = mat_vec(region.u2, v);
    const double slab = std::sqrt(static_cast<double>(region.n)) * norm_inf(u2v);
    return slab <= region.epsilon + 1e-12;
}

IntervalSet simultaneous_intervals(const ConfidenceRegion& region) {
    IntervalSet out;
    out.kind = IntervalKind::Simultaneous;
    out.alpha = region.alpha;
    const std::size_t q = region.center.size();
    out.bounds.resize(q);
    if (region.kind == RegionKind::FullRank) {
        // M^-1 Sigma M^-T = (M^T Sigma^-1 M)^-1 = Q^-1
        const Matrix qinv = inverse(region.q_shape);
        const double scale = region.radius / static_cast<double>(region.n);
        for (std::size_t j = 0; j < q; ++j) {
            const double hw = std::sqrt(scale * qinv(j, j));
            out.bounds[j] = {region.center[j] - hw, region.center[j] + hw};
        }
        return out;
    }
    if (region.epsilon > 0)
        throw UnsupportedRegion("simultaneous_intervals: only epsilon = 0 degenerate regions");
    const Matrix minv = inverse(region.m);
    // B = M^-1 U1^T D^(1/2); halfwidth_j = sqrt(radius/n) * ||row j of B||
    Matrix b(q, region.l);
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t k = 0; k < region.l; ++k) {
            double s = 0.0;
            for (std::size_t t = 0; t < q; ++t) s += minv(i, t) * region.u1(k, t);
            b(i, k) = s * std::sqrt(region.d[k]);
        }
    const double scale = std::sqrt(region.radius / static_cast<double>(region.n));
    for (std::size_t j = 0; j < q; ++j) {
        double rownorm = 0.0;
        for (std::size_t k = 0; k < region.l; ++k) rownorm += b(j, k) * b(j, k);
        const double hw = scale * std::sqrt(rownorm);
        out.bounds[j] = {region.center[j] - hw, region.center[j] + hw};
    }
    return out;
}

IntervalSet individual_intervals(const NormalMapDerivative& d,
                                 const CovarianceEstimate& sigma, std::size_t n,
                                 double alpha) {
    IntervalSet out;
    out.kind = IntervalKind::Individual;
    out.alpha = alpha;
    const std::size_t q = d.base_point.size();
    out.bounds.resize(q);
    Vector rnj(q, 0.0);
    if (d.is_invertible && d.is_linear) {
        const Matrix minv = inverse(d.m);
        const Matrix c = minv * sigma.sigma * transpose(minv);
        for (std::size_t j = 0; j < q; ++j) rnj[j] = std::sqrt(std::max(c(j, j), 0.0));
    }
    const double crit = std::sqrt(chi2_quantile(1, alpha));
    const double sqn = std::sqrt(static_cast<double>(n));
    for (std::size_t j = 0; j < q; ++j) {
        const double hw = crit * rnj[j] / sqn;
        out.bounds[j] = {d.base_point[j] - hw, d.base_point[j] + hw};
    }
    return out;
}

LimitingLaw limiting_law(const Matrix& l, const Matrix& sigma0, const BoxSet& s,
                         const Vector& z0, double tau) {
    LimitingLaw law;
    law.l = l;
    law.sigma0 = sigma0;
    law.s = s;
    law.z0 = z0;
    law.cells = cells_at(s, z0, tau);
    for (const FacePattern& cell : law.cells) {
        const Matrix a = selection_matrix(cell).as_matrix();
        Matrix m = l * a + Matrix::identity(l.rows) - a;
        Matrix minv;
        try {
            minv = inverse(m);
        } catch (const SingularMatrix&) {
            throw SingularSelection("limiting_law: singular selection matrix");
        }
        Matrix c = minv * sigma0 * transpose(minv);
        Vector r(l.rows);
        for (std::size_t j = 0; j < l.rows; ++j) r[j] = std::sqrt(std::max(c(j, j), 0.0));
        law.selection.push_back(a);
        law.m.push_back(std::move(m));
        law.m_inv.push_back(std::move(minv));
        law.c.push_back(std::move(c));
        law.r.push_back(std::move(r));
    }
    return law;
}

bool coherent_orientation(const LimitingLaw& law) {
    int sign = 0;
    for (const Matrix& m : law.m) {
        // Hadamard bound gives the scale for the relative zero test
        double scale = 1.0;
        for (std::size_t i = 0; i < m.rows; ++i) {
            double rn = 0.0;
            for (std::size_t j = 0; j < m.cols; ++j) rn += m(i, j) * m(i, j);
            scale *= std::sqrt(rn);
        }
        const double det = determinant(m);
        if (std::abs(det) <= 1e-12 * std::max(scale, 1e-300)) return false;
        const int s = det > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        if (s != sign) return false;
    }
    return sign != 0;
}

namespace {

// Is h in the cone of the cell at z0 (cone(P - z0)), to tolerance tol?
bool in_cone(const LimitingLaw& law, std::size_t cell, const Vector& h, double tol) {
    const FacePattern& p = law.cells[cell];
    const std::vector<Piece>& res = *p.resolution;
    for (std::size_t j = 0; j < h.size(); ++j) {
        const FaceTag t = p.tags[j];
        const Piece pc = res[j];
        // coordinates where z0 is in the interior of its piece impose nothing
        switch (pc) {
            case Piece::Lower:
                if ((t == FaceTag::AtLower || t == FaceTag::AtBothBounds) && h[j] > tol)
                    return false;
                break;
            case Piece::Middle:
                if (t == FaceTag::AtLower && h[j] < -tol) return false;
                if (t == FaceTag::AtUpper && h[j] > tol) return false;
                break;
            case Piece::Upper:
                if ((t == FaceTag::AtUpper || t == FaceTag::AtBothBounds) && h[j] < -tol)
                    return false;
                break;
        }
    }
    return true;
}

}  // namespace

std::pair<Vector, std::size_t> lk_inverse_cell(const LimitingLaw& law, const Vector& y) {
    for (double tol : {1e-12, 1e-9}) {
        const double scaled = tol * (1.0 + norm2(y));
        for (std::size_t i = 0; i < law.cells.size(); ++i) {
            const Vector h = mat_vec(law.m_inv[i], y);
            if (in_cone(law, i, h, scaled)) return {h, i};
        }
    }
    throw NoConsistentCell("lk_inverse: no cell accepts M_i^-1 y");
}

Vector lk_inverse(const LimitingLaw& law, const Vector& y) {
    return lk_inverse_cell(law, y).first;
}

double limiting_individual_coverage(const LimitingLaw& law, std::size_t j,
                                    double alpha, std::size_t samples,
                                    RngStream stream, int threads) {
    const std::size_t q = law.z0.size();
    const double crit = std::sqrt(chi2_quantile(1, alpha));

    // square root of Sigma_0 from its eigendecomposition
    const EigenDecomposition e = eig_sym(law.sigma0);
    Matrix root(q, q);
    for (std::size_t a = 0; a < q; ++a)
        for (std::size_t k = 0; k < q; ++k)
            root(a, k) = e.vectors_rows(k, a) * std::sqrt(std::max(e.values[k], 0.0));

    const std::size_t chunk = 1 << 14;
    const std::size_t nchunks = (samples + chunk - 1) / chunk;
    std::vector<std::uint64_t> hits(nchunks, 0);

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#pragma omp parallel for schedule(dynamic)
#endif
    for (long long c = 0; c < static_cast<long long>(nchunks); ++c) {
        RngStream sub = stream.substream(static_cast<std::uint64_t>(c));
        const std::size_t lo = static_cast<std::size_t>(c) * chunk;
        const std::size_t hi = std::min(lo + chunk, samples);
        std::uint64_t count = 0;
        Vector g(q), y(q);
        for (std::size_t it = lo; it < hi; ++it) {
            for (std::size_t a = 0; a < q; ++a) g[a] = sub.next_normal();
            for (std::size_t a = 0; a < q; ++a) {
                double sacc = 0.0;
                for (std::size_t k = 0; k < q; ++k) sacc += root(a, k) * g[k];
                y[a] = sacc;
            }
            const auto [gamma, cell] = lk_inverse_cell(law, y);
            if (std::abs(gamma[j]) <= crit * law.r[cell][j]) ++count;
        }
        hits[c] = count;
    }
    std::uint64_t total = 0;
    for (std::uint64_t h : hits) total += h;  // deterministic ordered fold
    return static_cast<double>(total) / static_cast<double>(samples);
}

IntervalSet project_intervals_to_x(const IntervalSet& intervals, const BoxSet& s) {
    IntervalSet out = intervals;
    for (std::size_t j = 0; j < out.bounds.size(); ++j) {
        out.bounds[j].first = std::clamp(out.bounds[j].first, s.lower[j], s.upper[j]);
        out.bounds[j].second = std::clamp(out.bounds[j].second, s.lower[j], s.upper[j]);
    }
    return out;
}

std::string coverage_condition_note(const LimitingLaw& law) {
    if (law.cells.size() <= 2) return "k <= 2: limiting coverage equals 1 - alpha";
    bool all_diag = true;
    for (const Matrix& c : law.c) {
        double off = 0.0, diag = 0.0;
        for (std::size_t i = 0; i < c.rows; ++i)
            for (std::size_t j = 0; j < c.cols; ++j)
                (i == j ? diag : off) += std::abs(c(i, j));
        if (off > 1e-12 * std::max(diag, 1e-300)) all_diag = false;
    }
    if (all_diag) return "box S with diagonal C_i: limiting coverage equals 1 - alpha";
    return "";
}

}  // namespace svi
