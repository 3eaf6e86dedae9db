#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace svi {

// Dense row-major matrix and vector types sized for desk-scale problems
// (q up to a few hundred). All routines are pure functions.

using Vector = std::vector<double>;

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

struct SingularMatrix : std::runtime_error {
    explicit SingularMatrix(const std::string& what) : std::runtime_error(what) {}
};
struct NotSymmetric : std::runtime_error {
    explicit NotSymmetric(const std::string& what) : std::runtime_error(what) {}
};

Matrix operator*(const Matrix& a, const Matrix& b);
Vector mat_vec(const Matrix& a, const Vector& x);
Matrix transpose(const Matrix& a);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
double frobenius_norm(const Matrix& a);
double norm2(const Vector& v);
double norm_inf(const Vector& v);
double dot(const Vector& a, const Vector& b);

// Solves AX = B by LU with partial pivoting. Throws SingularMatrix when a
// pivot falls below 1e-12 * max|A|.
Matrix lu_solve(const Matrix& a, const Matrix& b);
Vector lu_solve(const Matrix& a, const Vector& b);
Matrix inverse(const Matrix& a);

// Determinant via the same pivoted LU; returns 0 when the factorization
// hits a negligible pivot.
double determinant(const Matrix& a);

// Symmetric eigendecomposition, A = U^T diag(values) U with the rows of U
// holding the eigenvectors and values sorted in decreasing order.
struct EigenDecomposition {
    Vector values;
    Matrix vectors_rows;  // row i is the eigenvector for values[i]
};

EigenDecomposition eig_sym(const Matrix& a, double symmetry_tol = 1e-12);

// Quantile c with P(chi^2_dof > c) = alpha, solved by bisection on the
// regularized incomplete gamma function to 1e-9.
double chi2_quantile(int dof, double alpha);

// Regularized lower incomplete gamma P(s, x); exposed for test oracles.
double gamma_p(double s, double x);

// Counter-based deterministic RNG. A stream is an immutable descriptor
// (seed, stream id, counter); drawing returns the value and the advanced
// stream, so replication r can always use stream id r regardless of
// scheduling.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::uint64_t counter = 0;

    std::uint64_t next_u64();
    double next_uniform();                       // [0, 1)
    double next_uniform(double lo, double hi);   // [lo, hi)
    double next_normal();                        // standard normal

    RngStream substream(std::uint64_t id) const;
};

}  // namespace svi
