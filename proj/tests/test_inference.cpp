#include <doctest.h>

#include <cmath>

#include "svi/inference.hpp"

using namespace svi;

namespace {

const BoxSet orthant2 = BoxSet::nonnegative_orthant(2);

Matrix make(std::size_t r, std::size_t c, std::initializer_list<double> v) {
    Matrix m(r, c);
    m.data.assign(v);
    return m;
}

SaaMap affine(std::size_t q, std::initializer_list<double> jac,
              std::initializer_list<double> b) {
    SaaMap f;
    f.jacobian = Matrix(q, q);
    f.jacobian.data.assign(jac);
    f.offset.assign(b);
    return f;
}

// Printed n=10 instance: mean map, sample covariance, and interior solution.
const SaaMap f_n10 = affine(2, {0.9292, 0.5400, 0.7536, 2.1111}, {-0.1319, -0.2906});
const Matrix sigma_n10 = make(2, 2, {0.4169, 0.0137, 0.0137, 0.1865});

// Constructed n=30 instance with both coordinates strictly below the bound,
// so the derivative selection is the identity.
const SaaMap f_n30 = affine(2, {1, 0, 0, 1}, {0.0483, 0.0114});
const Matrix sigma_n30 = make(2, 2, {0.302, 0, 0, 0.3205});

const Matrix l_q2 = make(2, 2, {1, 0.5, 1, 2});
const Matrix sigma0_q2 = make(2, 2, {1.0 / 3, 0, 0, 1.0 / 3});

NormalMapDerivative derivative_n10() {
    const SolveResult r = solve(f_n10, orthant2);
    return derivative_at(f_n10, orthant2, r, 1e-8);
}

NormalMapDerivative derivative_n30() {
    const SolveResult r = solve(f_n30, orthant2);
    return derivative_at(f_n30, orthant2, r, 1e-8);
}

bool matrix_close(const Matrix& a, const Matrix& b, double tol) {
    return frobenius_norm(a - b) <= tol;
}

}  // namespace

TEST_CASE("derivative_at on interior solutions is the jacobian") {
    const NormalMapDerivative d = derivative_n10();
    CHECK(d.is_linear);
    CHECK(d.is_invertible);
    CHECK(matrix_close(d.m, f_n10.jacobian, 1e-12));
}

TEST_CASE("derivative_at away from the feasible set") {
    SolveResult r;
    r.z = {0.5, -0.5};
    const SaaMap f = affine(2, {1, 0.5, 1, 2}, {0, 0});
    const NormalMapDerivative d = derivative_at(f, orthant2, r, 1e-8);
    CHECK(d.is_linear);
    CHECK(matrix_close(d.m, make(2, 2, {1, 0, 1, 1}), 1e-12));
}

TEST_CASE("derivative_at commits boundary coordinates to the middle piece") {
    SolveResult r;
    r.z = {0, 1};
    const SaaMap f = affine(2, {1, 0.5, 1, 2}, {0, 0});
    const NormalMapDerivative d = derivative_at(f, orthant2, r, 1e-8);
    CHECK_FALSE(d.is_linear);
    CHECK(matrix_close(d.m, f.jacobian, 1e-12));
}

TEST_CASE("derivative_at flags singular selections") {
    SolveResult r;
    r.z = {1, 1};
    const SaaMap f = affine(2, {1, 1, 1, 1}, {0, 0});
    const NormalMapDerivative d = derivative_at(f, orthant2, r, 1e-8);
    CHECK(d.is_linear);
    CHECK_FALSE(d.is_invertible);
}

TEST_CASE("region_fullrank shape matrix on the printed n=10 instance") {
    const ConfidenceRegion reg =
        region_fullrank(derivative_n10(), {sigma_n10}, 10, 0.1);
    // the reference values were computed before rounding the inputs to four
    // decimals, so exact propagation of the printed inputs drifts by ~4e-3
    CHECK(std::abs(reg.q_shape(0, 0) - 4.8810) <= 5e-3);
    CHECK(std::abs(reg.q_shape(0, 1) - 9.3398) <= 5e-3);
    CHECK(std::abs(reg.q_shape(1, 0) - 9.3398) <= 5e-3);
    CHECK(std::abs(reg.q_shape(1, 1) - 24.2564) <= 5e-3);
    CHECK(reg.radius == doctest::Approx(chi2_quantile(2, 0.1)));
    CHECK(std::abs(reg.center[0] - 0.0782) <= 5e-4);
    CHECK(std::abs(reg.center[1] - 0.1097) <= 5e-4);
}

TEST_CASE("region membership of the origin flips between levels") {
    const NormalMapDerivative d = derivative_n10();
    // squared distance of the origin is about 4.82: outside at 90%, inside at 99%
    CHECK_FALSE(region_contains(region_fullrank(d, {sigma_n10}, 10, 0.1), {0, 0}));
    CHECK(region_contains(region_fullrank(d, {sigma_n10}, 10, 0.01), {0, 0}));
    CHECK(region_contains(region_fullrank(d, {sigma_n10}, 10, 0.1), d.base_point));
}

TEST_CASE("region_fullrank rejects bad inputs") {
    const NormalMapDerivative d = derivative_n10();
    const Matrix rank1 = make(2, 2, {1, 1, 1, 1});
    CHECK_THROWS_AS(region_fullrank(d, {rank1}, 10, 0.1), SingularCovariance);

    SolveResult r;
    r.z = {1, 1};
    const SaaMap fsing = affine(2, {1, 1, 1, 1}, {0, 0});
    const NormalMapDerivative dsing = derivative_at(fsing, orthant2, r, 1e-8);
    CHECK_THROWS_AS(region_fullrank(dsing, {sigma_n10}, 10, 0.1),
                    NonInvertibleDerivative);
}

TEST_CASE("simultaneous intervals reproduce the tabulated n=10 values") {
    const ConfidenceRegion reg =
        region_fullrank(derivative_n10(), {sigma_n10}, 10, 0.1);
    const IntervalSet sim = simultaneous_intervals(reg);
    CHECK(std::abs(sim.bounds[0].first - (-0.52)) <= 0.01);
    CHECK(std::abs(sim.bounds[0].second - 0.68) <= 0.01);
    CHECK(std::abs(sim.bounds[1].first - (-0.16)) <= 0.01);
    CHECK(std::abs(sim.bounds[1].second - 0.38) <= 0.01);
}

TEST_CASE("individual intervals reproduce the tabulated n=10 values") {
    const IntervalSet ind =
        individual_intervals(derivative_n10(), {sigma_n10}, 10, 0.1);
    CHECK(std::abs(ind.bounds[0].first - (-0.38)) <= 0.01);
    CHECK(std::abs(ind.bounds[0].second - 0.54) <= 0.01);
    CHECK(std::abs(ind.bounds[1].first - (-0.10)) <= 0.01);
    CHECK(std::abs(ind.bounds[1].second - 0.32) <= 0.01);
}

TEST_CASE("individual intervals on the identity-selection n=30 instance") {
    const NormalMapDerivative d = derivative_n30();
    CHECK(matrix_close(d.m, Matrix::identity(2), 1e-12));
    const IntervalSet ind = individual_intervals(d, {sigma_n30}, 30, 0.1);
    CHECK(std::abs(ind.bounds[0].first - (-0.21)) <= 0.01);
    CHECK(std::abs(ind.bounds[0].second - 0.12) <= 0.01);
    CHECK(std::abs(ind.bounds[1].first - (-0.18)) <= 0.01);
    CHECK(std::abs(ind.bounds[1].second - 0.16) <= 0.01);
}

TEST_CASE("individual intervals collapse to points for singular selections") {
    SolveResult r;
    r.z = {1, 1};
    const SaaMap fsing = affine(2, {1, 1, 1, 1}, {0, 0});
    const NormalMapDerivative d = derivative_at(fsing, orthant2, r, 1e-8);
    const IntervalSet ind = individual_intervals(d, {sigma_n10}, 10, 0.1);
    CHECK(ind.bounds[0].first == ind.bounds[0].second);
    CHECK(ind.bounds[1].first == ind.bounds[1].second);
}

TEST_CASE("region_degenerate rank detection") {
    const NormalMapDerivative d = derivative_n30();
    const Matrix rank1 = make(2, 2, {2, 0, 0, 1e-10});
    const ConfidenceRegion reg = region_degenerate(d, {rank1}, 30, 0.1, 1e-6, 0.0);
    CHECK(reg.l == 1);
    CHECK(reg.d[0] == doctest::Approx(2.0));
    CHECK(reg.radius == doctest::Approx(chi2_quantile(1, 0.1)));
    CHECK_THROWS_AS(region_degenerate(d, {rank1}, 30, 0.1, 3.0, 0.0),
                    ThresholdAboveAllEigenvalues);
}

TEST_CASE("degenerate region flat slab and epsilon monotonicity") {
    const NormalMapDerivative d = derivative_n30();
    const Matrix rank1 = make(2, 2, {1, 0, 0, 0});
    const ConfidenceRegion flat = region_degenerate(d, {rank1}, 30, 0.1, 1e-6, 0.0);
    const ConfidenceRegion slab = region_degenerate(d, {rank1}, 30, 0.1, 1e-6, 0.05);
    // moving along the retained direction stays inside; along the dropped one
    // requires a positive slab width
    Vector along = flat.center;
    along[0] += 0.01;
    Vector across = flat.center;
    across[1] += 0.005;
    CHECK(region_contains(flat, along));
    CHECK_FALSE(region_contains(flat, across));
    CHECK(region_contains(slab, across));

    RngStream rng{21, 0};
    for (int i = 0; i < 10000; ++i) {
        const Vector z = {flat.center[0] + rng.next_uniform(-0.5, 0.5),
                          flat.center[1] + rng.next_uniform(-0.5, 0.5)};
        if (region_contains(flat, z)) CHECK(region_contains(slab, z));
    }
}

TEST_CASE("degenerate region with full spectral rank matches the full-rank one") {
    const NormalMapDerivative d = derivative_n10();
    const ConfidenceRegion full = region_fullrank(d, {sigma_n10}, 10, 0.1);
    const ConfidenceRegion deg = region_degenerate(d, {sigma_n10}, 10, 0.1, 1e-8, 0.0);
    REQUIRE(deg.l == 2);
    RngStream rng{22, 0};
    for (int i = 0; i < 10000; ++i) {
        const Vector z = {rng.next_uniform(-1, 1), rng.next_uniform(-1, 1)};
        CHECK(region_contains(full, z) == region_contains(deg, z));
    }
    const IntervalSet a = simultaneous_intervals(full);
    const IntervalSet b = simultaneous_intervals(deg);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(a.bounds[j].first == doctest::Approx(b.bounds[j].first).epsilon(1e-9));
        CHECK(a.bounds[j].second == doctest::Approx(b.bounds[j].second).epsilon(1e-9));
    }
}

TEST_CASE("simultaneous intervals refuse positive-width slabs") {
    const NormalMapDerivative d = derivative_n30();
    const Matrix rank1 = make(2, 2, {1, 0, 0, 0});
    const ConfidenceRegion slab = region_degenerate(d, {rank1}, 30, 0.1, 1e-6, 0.1);
    CHECK_THROWS_AS(simultaneous_intervals(slab), UnsupportedRegion);
}

TEST_CASE("nesting across confidence levels") {
    const NormalMapDerivative d = derivative_n10();
    const ConfidenceRegion r90 = region_fullrank(d, {sigma_n10}, 10, 0.1);
    const ConfidenceRegion r99 = region_fullrank(d, {sigma_n10}, 10, 0.01);
    RngStream rng{23, 0};
    for (int i = 0; i < 10000; ++i) {
        const Vector z = {rng.next_uniform(-1, 1), rng.next_uniform(-1, 1)};
        if (region_contains(r90, z)) CHECK(region_contains(r99, z));
    }
    const IntervalSet s90 = simultaneous_intervals(r90);
    const IntervalSet s99 = simultaneous_intervals(r99);
    const IntervalSet i90 = individual_intervals(d, {sigma_n10}, 10, 0.1);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(s99.bounds[j].first < s90.bounds[j].first);
        CHECK(s99.bounds[j].second > s90.bounds[j].second);
        // individual intervals sit inside the simultaneous ones
        CHECK(i90.bounds[j].first >= s90.bounds[j].first);
        CHECK(i90.bounds[j].second <= s90.bounds[j].second);
    }
}

TEST_CASE("intervals are equivariant under coordinate swaps") {
    const SaaMap swapped =
        affine(2, {2.1111, 0.7536, 0.5400, 0.9292}, {-0.2906, -0.1319});
    const Matrix sigma_sw = make(2, 2, {0.1865, 0.0137, 0.0137, 0.4169});
    const SolveResult r = solve(swapped, orthant2);
    const NormalMapDerivative d = derivative_at(swapped, orthant2, r, 1e-8);
    const IntervalSet sim =
        simultaneous_intervals(region_fullrank(d, {sigma_sw}, 10, 0.1));
    const IntervalSet base =
        simultaneous_intervals(region_fullrank(derivative_n10(), {sigma_n10}, 10, 0.1));
    CHECK(sim.bounds[0].first == doctest::Approx(base.bounds[1].first).epsilon(1e-8));
    CHECK(sim.bounds[0].second == doctest::Approx(base.bounds[1].second).epsilon(1e-8));
    CHECK(sim.bounds[1].first == doctest::Approx(base.bounds[0].first).epsilon(1e-8));
    CHECK(sim.bounds[1].second == doctest::Approx(base.bounds[0].second).epsilon(1e-8));
}

TEST_CASE("project_intervals_to_x clamps to the box") {
    IntervalSet zint;
    zint.bounds = {{-0.38, 0.54}, {-0.10, 0.32}};
    const IntervalSet xint = project_intervals_to_x(zint, orthant2);
    CHECK(xint.bounds[0].first == 0.0);
    CHECK(xint.bounds[0].second == doctest::Approx(0.54));
    CHECK(xint.bounds[1].first == 0.0);
}

TEST_CASE("limiting law cell matrices at the q=2 origin") {
    const LimitingLaw law = limiting_law(l_q2, sigma0_q2, orthant2, {0, 0}, 1e-8);
    REQUIRE(law.cells.size() == 4);
    CHECK(coherent_orientation(law));

    // match cells by their selection matrix; the expected pairs follow from
    // M = L A + I - A and C = M^-1 Sigma0 M^-T
    struct Expected {
        Matrix a, m, c;
    };
    const std::vector<Expected> want = {
        {Matrix::identity(2), l_q2,
         make(2, 2, {0.6296, -0.3704, -0.3704, 0.2963})},
        {make(2, 2, {1, 0, 0, 0}), make(2, 2, {1, 0, 1, 1}),
         make(2, 2, {0.3333, -0.3333, -0.3333, 0.6667})},
        {make(2, 2, {0, 0, 0, 1}), make(2, 2, {1, 0.5, 0, 2}),
         make(2, 2, {0.3542, -0.0417, -0.0417, 0.0833})},
        {Matrix(2, 2), Matrix::identity(2),
         make(2, 2, {0.3333, 0, 0, 0.3333})},
    };
    for (const Expected& w : want) {
        bool found = false;
        for (std::size_t i = 0; i < law.cells.size(); ++i) {
            if (!matrix_close(law.selection[i], w.a, 1e-12)) continue;
            found = true;
            CHECK(matrix_close(law.m[i], w.m, 1e-12));
            CHECK(matrix_close(law.c[i], w.c, 1e-4));
            CHECK(law.r[i][0] == doctest::Approx(std::sqrt(w.c(0, 0))).epsilon(1e-3));
            CHECK(law.r[i][1] == doctest::Approx(std::sqrt(w.c(1, 1))).epsilon(1e-3));
        }
        CHECK(found);
    }
}

TEST_CASE("coherent orientation fails on mixed determinant signs") {
    const Matrix l = make(2, 2, {-1, 0, 0, 1});
    const LimitingLaw law = limiting_law(l, sigma0_q2, orthant2, {0, 0}, 1e-8);
    CHECK_FALSE(coherent_orientation(law));
}

TEST_CASE("lk_inverse examples and round trip") {
    const LimitingLaw law = limiting_law(l_q2, sigma0_q2, orthant2, {0, 0}, 1e-8);
    const Vector h = lk_inverse(law, {1.5, 3});
    CHECK(h[0] == doctest::Approx(1.0));
    CHECK(h[1] == doctest::Approx(1.0));

    RngStream rng{24, 0};
    for (int i = 0; i < 2000; ++i) {
        Vector v = {rng.next_uniform(-2, 2), rng.next_uniform(-2, 2)};
        // forward map: L on the projected part plus the normal part
        Vector px = {std::max(v[0], 0.0), std::max(v[1], 0.0)};
        Vector y = mat_vec(l_q2, px);
        for (int j = 0; j < 2; ++j) y[j] += v[j] - px[j];
        const Vector back = lk_inverse(law, y);
        CHECK(std::abs(back[0] - v[0]) <= 1e-9);
        CHECK(std::abs(back[1] - v[1]) <= 1e-9);

        // positive homogeneity
        const double lam = rng.next_uniform(0.1, 3.0);
        const Vector yl = {lam * y[0], lam * y[1]};
        const Vector hb = lk_inverse(law, yl);
        CHECK(hb[0] == doctest::Approx(lam * back[0]).epsilon(1e-8));
        CHECK(hb[1] == doctest::Approx(lam * back[1]).epsilon(1e-8));
    }
}

TEST_CASE("limiting coverage with a single cell equals the nominal level") {
    // interior base point: one cell, so the limiting variable is plain normal
    const LimitingLaw law = limiting_law(l_q2, sigma0_q2, orthant2, {1, 1}, 1e-8);
    REQUIRE(law.cells.size() == 1);
    const double cov =
        limiting_individual_coverage(law, 0, 0.1, 200000, RngStream{25, 0});
    CHECK(std::abs(cov - 0.9) <= 0.005);
    CHECK(coverage_condition_note(law) ==
          "k <= 2: limiting coverage equals 1 - alpha");
}

TEST_CASE("limiting coverage is deterministic across thread counts") {
    const LimitingLaw law = limiting_law(l_q2, sigma0_q2, orthant2, {0, 0}, 1e-8);
    const double serial =
        limiting_individual_coverage(law, 1, 0.1, 100000, RngStream{26, 0}, 1);
    const double parallel =
        limiting_individual_coverage(law, 1, 0.1, 100000, RngStream{26, 0}, 0);
    CHECK(serial == parallel);
    CHECK(coverage_condition_note(law).empty());
}
