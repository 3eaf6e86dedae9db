#pragma once

#include <utility>
#include <vector>

#include "svi/numerics.hpp"

namespace svi {

// Affine scenario family F(x, xi) = Lambda(xi) x + b(xi) with independent
// uniform entries; the expectation map is available in closed form.
struct AffineScenarioModel {
    std::size_t q = 0;
    std::vector<std::pair<double, double>> lambda_ranges;  // q*q, row-major
    std::vector<std::pair<double, double>> b_ranges;       // q

    static AffineScenarioModel example_q2();
    // The q=10 family; variant selects the offset distribution:
    // 1 -> all b_i on [-1,1]; 2 -> first five on [-1,0.8]; 3 -> all on [-1,0.8].
    static AffineScenarioModel example_q10(int variant);
};

struct ScenarioBatch {
    std::size_t q = 0;
    std::vector<Matrix> lambdas;
    std::vector<Vector> offsets;
    RngStream origin;  // descriptor the batch was drawn from

    std::size_t size() const { return lambdas.size(); }
};

// Affine map x -> J x + b; covers both the SAA mean map and the true map.
struct SaaMap {
    Matrix jacobian;
    Vector offset;

    Vector eval(const Vector& x) const;
    std::size_t dim() const { return offset.size(); }
};

struct CovarianceEstimate {
    Matrix sigma;  // symmetric q x q, divisor n-1
};

struct TooFewScenarios : std::runtime_error {
    explicit TooFewScenarios(const std::string& what) : std::runtime_error(what) {}
};

ScenarioBatch sample_batch(const AffineScenarioModel& model, std::size_t n,
                           RngStream stream);

SaaMap true_map(const AffineScenarioModel& model);

SaaMap assemble(const ScenarioBatch& batch);

CovarianceEstimate sample_covariance(const ScenarioBatch& batch, const Vector& x);

}  // namespace svi
