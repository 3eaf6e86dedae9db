#pragma once

#include "svi/box_geometry.hpp"
#include "svi/svi_model.hpp"

namespace svi {

struct SolveResult {
    Vector z;
    Vector x;  // projection of z onto S
    double residual = 0.0;
    std::size_t iterations = 0;
    FacePattern pattern;
    bool is_cell_interior = false;
    bool newton_matrix_invertible = true;
};

struct SolverConfig {
    double tolerance = 1e-10;
    std::size_t max_iterations = 100;
    double armijo_slope = 1e-4;
    double pattern_tol = 0.0;  // 0 -> relative default at each iterate
};

struct MaxIterations : std::runtime_error {
    explicit MaxIterations(const std::string& what) : std::runtime_error(what) {}
};
struct SingularNewtonMatrix : std::runtime_error {
    explicit SingularNewtonMatrix(const std::string& what) : std::runtime_error(what) {}
};
struct DimensionTooLarge : std::runtime_error {
    explicit DimensionTooLarge(const std::string& what) : std::runtime_error(what) {}
};

Vector normal_map_eval(const SaaMap& f, const BoxSet& s, const Vector& z);

// Semismooth Newton on the normal-map equation. Boundary-tagged coordinates
// commit to the middle piece when forming the Newton matrix J*A + I - A.
SolveResult solve(const SaaMap& f, const BoxSet& s, const SolverConfig& cfg,
                  const Vector& z_init);

// Default initialization: z = -b clipped to a large box.
SolveResult solve(const SaaMap& f, const BoxSet& s, const SolverConfig& cfg = {});

// Active-set enumeration oracle: every zero of the normal map for q <= 14.
std::vector<SolveResult> solve_bruteforce(const SaaMap& f, const BoxSet& s);

}  // namespace svi
