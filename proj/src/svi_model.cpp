#include "svi/svi_model.hpp"

namespace svi {

AffineScenarioModel AffineScenarioModel::example_q2() {
    AffineScenarioModel m;
    m.q = 2;
    m.lambda_ranges = {{0, 2}, {0, 1}, {0, 2}, {0, 4}};
    m.b_ranges = {{-1, 1}, {-1, 1}};
    return m;
}

AffineScenarioModel AffineScenarioModel::example_q10(int variant) {
    AffineScenarioModel m;
    m.q = 10;
    m.lambda_ranges.resize(100);
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 10; ++j) {
            auto& r = m.lambda_ranges[i * 10 + j];
            if (i == j)
                r = {0, 4};
            else if (i < j)
                r = {0, 3};
            else
                r = {0, 2};
        }
    m.b_ranges.assign(10, {-1, 1});
    if (variant == 2)
        for (std::size_t i = 0; i < 5; ++i) m.b_ranges[i] = {-1, 0.8};
    if (variant == 3) m.b_ranges.assign(10, {-1, 0.8});
    return m;
}

Vector SaaMap::eval(const Vector& x) const {
    Vector y = mat_vec(jacobian, x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += offset[i];
    return y;
}

ScenarioBatch sample_batch(const AffineScenarioModel& model, std::size_t n,
                           RngStream stream) {
    if (n < 1) throw std::invalid_argument("sample_batch: n must be >= 1");
    ScenarioBatch batch;
    batch.q = model.q;
    batch.origin = stream;
    batch.lambdas.reserve(n);
    batch.offsets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Matrix lam(model.q, model.q);
        for (std::size_t k = 0; k < model.q * model.q; ++k) {
            const auto& r = model.lambda_ranges[k];
            lam.data[k] = stream.next_uniform(r.first, r.second);
        }
        Vector b(model.q);
        for (std::size_t k = 0; k < model.q; ++k) {
            const auto& r = model.b_ranges[k];
            b[k] = stream.next_uniform(r.first, r.second);
        }
        batch.lambdas.push_back(std::move(lam));
        batch.offsets.push_back(std::move(b));
    }
    return batch;
}

SaaMap true_map(const AffineScenarioModel& model) {
    SaaMap f;
    f.jacobian = Matrix(model.q, model.q);
    for (std::size_t k = 0; k < model.q * model.q; ++k)
        f.jacobian.data[k] = 0.5 * (model.lambda_ranges[k].first + model.lambda_ranges[k].second);
    f.offset.resize(model.q);
    for (std::size_t k = 0; k < model.q; ++k)
        f.offset[k] = 0.5 * (model.b_ranges[k].first + model.b_ranges[k].second);
    return f;
}

SaaMap assemble(const ScenarioBatch& batch) {
    const std::size_t n = batch.size();
    SaaMap f;
    f.jacobian = Matrix(batch.q, batch.q);
    f.offset.assign(batch.q, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < batch.q * batch.q; ++k)
            f.jacobian.data[k] += batch.lambdas[i].data[k];
        for (std::size_t k = 0; k < batch.q; ++k) f.offset[k] += batch.offsets[i][k];
    }
    for (double& v : f.jacobian.data) v /= static_cast<double>(n);
    for (double& v : f.offset) v /= static_cast<double>(n);
    return f;
}

CovarianceEstimate sample_covariance(const ScenarioBatch& batch, const Vector& x) {
    const std::size_t n = batch.size();
    if (n < 2) throw TooFewScenarios("sample_covariance: need n >= 2");
    const std::size_t q = batch.q;
    std::vector<Vector> values(n);
    Vector mean(q, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        values[i] = mat_vec(batch.lambdas[i], x);
        for (std::size_t k = 0; k < q; ++k) {
            values[i][k] += batch.offsets[i][k];
            mean[k] += values[i][k];
        }
    }
    for (double& v : mean) v /= static_cast<double>(n);
    Matrix sigma(q, q);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < q; ++a)
            for (std::size_t b = 0; b < q; ++b)
                sigma(a, b) += (values[i][a] - mean[a]) * (values[i][b] - mean[b]);
    for (double& v : sigma.data) v /= static_cast<double>(n - 1);
    return CovarianceEstimate{std::move(sigma)};
}

}  // namespace svi
