#include "svi/saa_solver.hpp"

#include <algorithm>
#include <cmath>

namespace svi {

Vector normal_map_eval(const SaaMap& f, const BoxSet& s, const Vector& z) {
    const Vector x = project(s, z);
    Vector r = f.eval(x);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += z[j] - x[j];
    return r;
}

namespace {

FacePattern resolve_to_middle(FacePattern p) {
    std::vector<Piece> res(p.tags.size());
    for (std::size_t j = 0; j < p.tags.size(); ++j) {
        switch (p.tags[j]) {
            case FaceTag::BelowLower: res[j] = Piece::Lower; break;
            case FaceTag::AboveUpper: res[j] = Piece::Upper; break;
            case FaceTag::AtBothBounds: res[j] = Piece::Lower; break;
            default: res[j] = Piece::Middle; break;  // active bounds take the middle piece
        }
    }
    p.resolution = std::move(res);
    return p;
}

bool pattern_is_interior(const FacePattern& p) {
    for (FaceTag t : p.tags)
        if (t == FaceTag::AtLower || t == FaceTag::AtUpper || t == FaceTag::AtBothBounds)
            return false;
    return true;
}

}  // namespace

SolveResult solve(const SaaMap& f, const BoxSet& s, const SolverConfig& cfg,
                  const Vector& z_init) {
    const std::size_t q = f.dim();
    Vector z = z_init;
    Vector r = normal_map_eval(f, s, z);
    double rnorm = norm2(r);

    SolveResult out;
    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
        if (rnorm <= cfg.tolerance) {
            out.z = z;
            out.x = project(s, z);
            out.residual = rnorm;
            out.iterations = it;
            const double tau = cfg.pattern_tol > 0 ? cfg.pattern_tol : default_classify_tol(z);
            out.pattern = resolve_to_middle(classify(s, z, tau));
            out.is_cell_interior = pattern_is_interior(out.pattern);
            return out;
        }
        const double tau = cfg.pattern_tol > 0 ? cfg.pattern_tol : default_classify_tol(z);
        const FacePattern p = resolve_to_middle(classify(s, z, tau));
        const Matrix a = selection_matrix(p).as_matrix();
        Matrix m = f.jacobian * a + Matrix::identity(q) - a;
        Vector rhs(q);
        for (std::size_t j = 0; j < q; ++j) rhs[j] = -r[j];
        Vector step;
        try {
            step = lu_solve(m, rhs);
        } catch (const SingularMatrix&) {
            throw SingularNewtonMatrix("solve: singular Newton matrix at iterate");
        }
        // Armijo backtracking on the residual norm
        double t = 1.0;
        Vector z_next(q);
        Vector r_next;
        double rnorm_next = rnorm;
        while (t > 0x1.0p-30) {
            for (std::size_t j = 0; j < q; ++j) z_next[j] = z[j] + t * step[j];
            r_next = normal_map_eval(f, s, z_next);
            rnorm_next = norm2(r_next);
            if (rnorm_next <= (1.0 - cfg.armijo_slope * t) * rnorm) break;
            t *= 0.5;
        }
        z = z_next;
        r = r_next;
        rnorm = rnorm_next;
    }
    if (rnorm <= cfg.tolerance) {
        out.z = z;
        out.x = project(s, z);
        out.residual = rnorm;
        out.iterations = cfg.max_iterations;
        const double tau = cfg.pattern_tol > 0 ? cfg.pattern_tol : default_classify_tol(z);
        out.pattern = resolve_to_middle(classify(s, z, tau));
        out.is_cell_interior = pattern_is_interior(out.pattern);
        return out;
    }
    throw MaxIterations("solve: residual above tolerance after max iterations");
}

SolveResult solve(const SaaMap& f, const BoxSet& s, const SolverConfig& cfg) {
    const std::size_t q = f.dim();
    Vector z(q);
    for (std::size_t j = 0; j < q; ++j)
        z[j] = std::clamp(-f.offset[j], -1e6, 1e6);
    try {
        return solve(f, s, cfg, z);
    } catch (const MaxIterations&) {
        return solve(f, s, cfg, Vector(q, 0.0));
    }
}

std::vector<SolveResult> solve_bruteforce(const SaaMap& f, const BoxSet& s) {
    const std::size_t q = f.dim();
    if (q > 14) throw DimensionTooLarge("solve_bruteforce: q > 14");

    // Per coordinate: candidate statuses 0 = free, 1 = at lower, 2 = at upper.
    std::vector<std::vector<int>> statuses(q);
    for (std::size_t j = 0; j < q; ++j) {
        statuses[j].push_back(0);
        if (std::isfinite(s.lower[j])) statuses[j].push_back(1);
        if (std::isfinite(s.upper[j]) && s.upper[j] != s.lower[j]) statuses[j].push_back(2);
    }

    std::vector<SolveResult> solutions;
    std::vector<std::size_t> idx(q, 0);
    const double tol = 1e-9;
    while (true) {
        std::vector<int> st(q);
        for (std::size_t j = 0; j < q; ++j) st[j] = statuses[j][idx[j]];

        std::vector<std::size_t> free;
        Vector x(q, 0.0);
        for (std::size_t j = 0; j < q; ++j) {
            if (st[j] == 0)
                free.push_back(j);
            else
                x[j] = st[j] == 1 ? s.lower[j] : s.upper[j];
        }

        bool ok = true;
        if (!free.empty()) {
            Matrix jf(free.size(), free.size());
            Vector rhs(free.size());
            for (std::size_t a = 0; a < free.size(); ++a) {
                double c = f.offset[free[a]];
                for (std::size_t j = 0; j < q; ++j)
                    if (st[j] != 0) c += f.jacobian(free[a], j) * x[j];
                rhs[a] = -c;
                for (std::size_t b = 0; b < free.size(); ++b)
                    jf(a, b) = f.jacobian(free[a], free[b]);
            }
            try {
                const Vector xf = lu_solve(jf, rhs);
                for (std::size_t a = 0; a < free.size(); ++a) x[free[a]] = xf[a];
            } catch (const SingularMatrix&) {
                ok = false;
            }
        }

        if (ok) {
            const Vector fx = f.eval(x);
            for (std::size_t j = 0; j < q && ok; ++j) {
                if (x[j] < s.lower[j] - tol || x[j] > s.upper[j] + tol) ok = false;
                // multiplier sign conditions at active bounds
                if (st[j] == 1 && fx[j] < -tol) ok = false;
                if (st[j] == 2 && fx[j] > tol) ok = false;
            }
            if (ok) {
                SolveResult r;
                r.x = project(s, x);
                r.z.resize(q);
                for (std::size_t j = 0; j < q; ++j) r.z[j] = r.x[j] - fx[j];
                r.residual = norm2(normal_map_eval(f, s, r.z));
                const double tau = default_classify_tol(r.z);
                r.pattern = classify(s, r.z, tau);
                bool dup = false;
                for (const auto& prev : solutions) {
                    double d = 0.0;
                    for (std::size_t j = 0; j < q; ++j)
                        d = std::max(d, std::abs(prev.z[j] - r.z[j]));
                    if (d < 1e-7) dup = true;
                }
                if (!dup) solutions.push_back(std::move(r));
            }
        }

        std::size_t j = 0;
        for (; j < q; ++j) {
            if (++idx[j] < statuses[j].size()) break;
            idx[j] = 0;
        }
        if (j == q) break;
    }
    return solutions;
}

}  // namespace svi
