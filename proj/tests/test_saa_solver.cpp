#include <doctest.h>

#include <cmath>

#include "svi/saa_solver.hpp"

using namespace svi;

namespace {

const BoxSet orthant2 = BoxSet::nonnegative_orthant(2);

SaaMap affine(std::size_t q, std::initializer_list<double> jac,
              std::initializer_list<double> b) {
    SaaMap f;
    f.jacobian = Matrix(q, q);
    f.jacobian.data.assign(jac);
    f.offset.assign(b);
    return f;
}

const SaaMap true_q2 = affine(2, {1, 0.5, 1, 2}, {0, 0});
const SaaMap fixture_n10 =
    affine(2, {0.9292, 0.5400, 0.7536, 2.1111}, {-0.1319, -0.2906});

}  // namespace

TEST_CASE("normal_map_eval") {
    // interior point: value is just f
    const Vector v = normal_map_eval(true_q2, orthant2, {1, 1});
    CHECK(v[0] == doctest::Approx(1.5));
    CHECK(v[1] == doctest::Approx(3.0));

    const Vector at0 = normal_map_eval(true_q2, orthant2, {0, 0});
    CHECK(at0[0] == 0.0);
    CHECK(at0[1] == 0.0);

    const SaaMap ident = affine(2, {1, 0, 0, 1}, {0, 0});
    const Vector w = normal_map_eval(ident, orthant2, {-1, 2});
    CHECK(w[0] == doctest::Approx(-1.0));
    CHECK(w[1] == doctest::Approx(2.0));
}

TEST_CASE("newton solve on the true q=2 map") {
    const SolveResult r = solve(true_q2, orthant2, SolverConfig{}, {1, 1});
    CHECK(norm2(r.z) <= 1e-9);
    CHECK(r.residual <= 1e-10);
    CHECK(norm2(normal_map_eval(true_q2, orthant2, r.z)) <= 1e-10);
}

TEST_CASE("newton solve with interior stationary point") {
    const SaaMap f = affine(2, {1, 0.5, 1, 2}, {-1, -2});
    const SolveResult r = solve(f, orthant2);
    CHECK(r.x[0] == doctest::Approx(2.0 / 3).epsilon(1e-9));
    CHECK(r.x[1] == doctest::Approx(2.0 / 3).epsilon(1e-9));
    CHECK(r.z == r.x);
}

TEST_CASE("newton solve on the printed n=10 instance") {
    const SolveResult r = solve(fixture_n10, orthant2);
    CHECK(std::abs(r.x[0] - 0.0782) <= 5e-4);
    CHECK(std::abs(r.x[1] - 0.1097) <= 5e-4);
    CHECK(r.is_cell_interior);
}

TEST_CASE("bruteforce on the true q=2 map") {
    const auto sols = solve_bruteforce(true_q2, orthant2);
    REQUIRE(sols.size() == 1);
    CHECK(norm2(sols[0].x) <= 1e-12);
}

TEST_CASE("bruteforce with interior solution") {
    const SaaMap f = affine(2, {1, 0.5, 1, 2}, {-1, -2});
    const auto sols = solve_bruteforce(f, orthant2);
    REQUIRE(sols.size() == 1);
    CHECK(sols[0].x[0] == doctest::Approx(2.0 / 3));
    CHECK(sols[0].x[1] == doctest::Approx(2.0 / 3));
}

TEST_CASE("bruteforce forced to the vertex") {
    const SaaMap f = affine(2, {1, 0, 0, 1}, {1, 1});
    const auto sols = solve_bruteforce(f, orthant2);
    REQUIRE(sols.size() == 1);
    CHECK(sols[0].x == Vector{0, 0});
    CHECK(sols[0].z[0] == doctest::Approx(-1.0));
    CHECK(sols[0].z[1] == doctest::Approx(-1.0));
}

TEST_CASE("bruteforce dimension guard") {
    SaaMap f;
    f.jacobian = Matrix::identity(15);
    f.offset.assign(15, 0.0);
    CHECK_THROWS_AS(solve_bruteforce(f, BoxSet::nonnegative_orthant(15)),
                    DimensionTooLarge);
}

TEST_CASE("newton agrees with the bruteforce oracle on random monotone instances") {
    RngStream rng{10, 0};
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t q = 2 + trial % 5;
        Matrix b(q, q);
        for (double& v : b.data) v = rng.next_uniform(-1, 1);
        // J = B + 0.5 B^T B + I is positive definite, hence monotone
        Matrix j = b + scale(transpose(b) * b, 0.5) + Matrix::identity(q);
        SaaMap f;
        f.jacobian = j;
        f.offset.resize(q);
        for (double& v : f.offset) v = rng.next_uniform(-2, 2);
        const BoxSet s = BoxSet::nonnegative_orthant(q);

        const auto oracle = solve_bruteforce(f, s);
        REQUIRE(oracle.size() == 1);
        const SolveResult r = solve(f, s);
        for (std::size_t k = 0; k < q; ++k)
            CHECK(std::abs(r.z[k] - oracle[0].z[k]) <= 1e-8);
        CHECK(norm2(normal_map_eval(f, s, r.z)) <= 1e-10);

        // Minty parametrization: z - x = -f(x) componentwise, and z - x lies
        // in the normal cone N_S(x)
        const Vector fx = f.eval(r.x);
        for (std::size_t k = 0; k < q; ++k) {
            const double zm = r.z[k] - r.x[k];
            CHECK(std::abs(zm + fx[k]) <= 1e-9);
            if (r.x[k] > 1e-12)
                CHECK(std::abs(zm) <= 1e-9);  // free coordinate: zero normal component
            else
                CHECK(zm <= 1e-9);  // lower bound active: nonpositive normal component
        }
    }
}

TEST_CASE("finite termination on model draws") {
    const AffineScenarioModel q2 = AffineScenarioModel::example_q2();
    const AffineScenarioModel q10 = AffineScenarioModel::example_q10(1);
    for (std::uint64_t r = 0; r < 20; ++r) {
        const SaaMap f2 = assemble(sample_batch(q2, 10, RngStream{77, r}));
        const SolveResult r2 = solve(f2, BoxSet::nonnegative_orthant(2));
        CHECK(r2.iterations <= 30);
        const SaaMap f10 = assemble(sample_batch(q10, 50, RngStream{78, r}));
        const SolveResult r10 = solve(f10, BoxSet::nonnegative_orthant(10));
        CHECK(r10.iterations <= 30);
    }
}
