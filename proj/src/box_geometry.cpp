#include "svi/box_geometry.hpp"

#include <algorithm>
#include <cmath>

namespace svi {

double default_classify_tol(const Vector& z) {
    return 1e-8 * (1.0 + norm_inf(z));
}

Vector project(const BoxSet& s, const Vector& z) {
    Vector x(z.size());
    for (std::size_t j = 0; j < z.size(); ++j)
        x[j] = std::clamp(z[j], s.lower[j], s.upper[j]);
    return x;
}

FacePattern classify(const BoxSet& s, const Vector& z, double tau) {
    FacePattern p;
    p.tau = tau;
    p.tags.resize(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        const double lo = s.lower[j], up = s.upper[j];
        const bool at_lo = std::isfinite(lo) && std::abs(z[j] - lo) <= tau;
        const bool at_up = std::isfinite(up) && std::abs(z[j] - up) <= tau;
        if (at_lo && at_up)
            p.tags[j] = FaceTag::AtBothBounds;
        else if (at_lo)
            p.tags[j] = FaceTag::AtLower;
        else if (at_up)
            p.tags[j] = FaceTag::AtUpper;
        else if (std::isfinite(lo) && z[j] < lo - tau)
            p.tags[j] = FaceTag::BelowLower;
        else if (std::isfinite(up) && z[j] > up + tau)
            p.tags[j] = FaceTag::AboveUpper;
        else
            p.tags[j] = FaceTag::Interior;
    }
    return p;
}

Vector dpi_apply(const BoxSet& s, const Vector& z, const Vector& h) {
    const FacePattern p = classify(s, z, 0.0);
    Vector out(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) {
        switch (p.tags[j]) {
            case FaceTag::Interior: out[j] = h[j]; break;
            case FaceTag::AtLower: out[j] = std::max(h[j], 0.0); break;
            case FaceTag::AtUpper: out[j] = std::min(h[j], 0.0); break;
            default: out[j] = 0.0; break;  // strictly outside or fixed variable
        }
    }
    return out;
}

namespace {

// Pieces of the per-coordinate subdivision containing z_j. Degenerate
// intervals (lo == up) have no full-dimensional middle piece.
std::vector<Piece> pieces_at(double lo, double up, double zj, double tau) {
    std::vector<Piece> out;
    const bool degenerate = std::isfinite(lo) && lo == up;
    const bool at_lo = std::isfinite(lo) && std::abs(zj - lo) <= tau;
    const bool at_up = std::isfinite(up) && std::abs(zj - up) <= tau;
    if (degenerate) {
        if (zj <= lo + tau) out.push_back(Piece::Lower);
        if (zj >= lo - tau) out.push_back(Piece::Upper);
        return out;
    }
    if (std::isfinite(lo) && zj < lo - tau) return {Piece::Lower};
    if (std::isfinite(up) && zj > up + tau) return {Piece::Upper};
    if (at_lo) out.push_back(Piece::Lower);
    out.push_back(Piece::Middle);
    if (at_up) out.push_back(Piece::Upper);
    return out;
}

}  // namespace

std::vector<FacePattern> cells_at(const BoxSet& s, const Vector& z, double tau,
                                  std::size_t cap) {
    const std::size_t q = z.size();
    std::vector<std::vector<Piece>> per_coord(q);
    std::size_t count = 1;
    for (std::size_t j = 0; j < q; ++j) {
        per_coord[j] = pieces_at(s.lower[j], s.upper[j], z[j], tau);
        count *= per_coord[j].size();
        if (count > cap)
            throw CombinatorialBlowup("cells_at: cell count exceeds cap");
    }
    const FacePattern base = classify(s, z, tau);
    std::vector<FacePattern> cells;
    cells.reserve(count);
    std::vector<std::size_t> idx(q, 0);
    while (true) {
        FacePattern p = base;
        std::vector<Piece> res(q);
        for (std::size_t j = 0; j < q; ++j) res[j] = per_coord[j][idx[j]];
        p.resolution = std::move(res);
        cells.push_back(std::move(p));
        std::size_t j = 0;
        for (; j < q; ++j) {
            if (++idx[j] < per_coord[j].size()) break;
            idx[j] = 0;
        }
        if (j == q) break;
    }
    return cells;
}

SelectionMatrix selection_matrix(const FacePattern& pattern) {
    if (!pattern.resolved())
        throw UnresolvedPattern("selection_matrix: pattern has uncommitted coordinates");
    SelectionMatrix a;
    a.middle.resize(pattern.tags.size());
    for (std::size_t j = 0; j < a.middle.size(); ++j)
        a.middle[j] = (*pattern.resolution)[j] == Piece::Middle;
    return a;
}

bool share_cell(const BoxSet& s, const Vector& x, const Vector& y, double tau) {
    for (std::size_t j = 0; j < x.size(); ++j) {
        const auto px = pieces_at(s.lower[j], s.upper[j], x[j], tau);
        const auto py = pieces_at(s.lower[j], s.upper[j], y[j], tau);
        bool common = false;
        for (Piece a : px)
            for (Piece b : py)
                if (a == b) common = true;
        if (!common) return false;
    }
    return true;
}

bool dpi_symmetry_check(const BoxSet& s, const Vector& x, const Vector& y, double tau) {
    if (!share_cell(s, x, y, tau))
        throw NotInCommonCell("dpi_symmetry_check: no shared cell");
    Vector d(x.size()), nd(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        d[j] = y[j] - x[j];
        nd[j] = x[j] - y[j];
    }
    const Vector lhs = dpi_apply(s, x, d);
    const Vector rhs = dpi_apply(s, y, nd);
    for (std::size_t j = 0; j < x.size(); ++j)
        if (std::abs(lhs[j] + rhs[j]) > 1e-12) return false;
    return true;
}

}  // namespace svi
