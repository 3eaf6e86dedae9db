#include "svi/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace svi {

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matrix product: dimension mismatch");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Vector mat_vec(const Matrix& a, const Vector& x) {
    if (a.cols != x.size()) throw std::invalid_argument("mat_vec: dimension mismatch");
    Vector y(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (double& v : c.data) v *= s;
    return c;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

double norm2(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double norm_inf(const Vector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double dot(const Vector& a, const Vector& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

namespace {

struct LuFactors {
    Matrix lu;
    std::vector<std::size_t> perm;
    int sign = 1;
    bool singular = false;
};

LuFactors lu_factor(const Matrix& a) {
    const std::size_t n = a.rows;
    LuFactors f{a, std::vector<std::size_t>(n), 1, false};
    std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});
    double amax = 0.0;
    for (double v : a.data) amax = std::max(amax, std::abs(v));
    const double pivot_tol = 1e-12 * std::max(amax, 1e-300);

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(f.lu(i, k)) > std::abs(f.lu(p, k))) p = i;
        if (std::abs(f.lu(p, k)) < pivot_tol) {
            f.singular = true;
            return f;
        }
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(p, j));
            std::swap(f.perm[k], f.perm[p]);
            f.sign = -f.sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            f.lu(i, k) /= f.lu(k, k);
            const double lik = f.lu(i, k);
            for (std::size_t j = k + 1; j < n; ++j) f.lu(i, j) -= lik * f.lu(k, j);
        }
    }
    return f;
}

}  // namespace

Matrix lu_solve(const Matrix& a, const Matrix& b) {
    if (a.rows != a.cols) throw std::invalid_argument("lu_solve: A not square");
    if (a.rows != b.rows) throw std::invalid_argument("lu_solve: row count mismatch");
    LuFactors f = lu_factor(a);
    if (f.singular) throw SingularMatrix("lu_solve: pivot below threshold");
    const std::size_t n = a.rows;
    Matrix x(n, b.cols);
    for (std::size_t j = 0; j < b.cols; ++j) {
        // forward substitution on the permuted right-hand side
        Vector y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = b(f.perm[i], j);
            for (std::size_t k = 0; k < i; ++k) s -= f.lu(i, k) * y[k];
            y[i] = s;
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = y[ii];
            for (std::size_t k = ii + 1; k < n; ++k) s -= f.lu(ii, k) * x(k, j);
            x(ii, j) = s / f.lu(ii, ii);
        }
    }
    return x;
}

Vector lu_solve(const Matrix& a, const Vector& b) {
    Matrix bm(b.size(), 1);
    for (std::size_t i = 0; i < b.size(); ++i) bm(i, 0) = b[i];
    Matrix xm = lu_solve(a, bm);
    Vector x(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) x[i] = xm(i, 0);
    return x;
}

Matrix inverse(const Matrix& a) { return lu_solve(a, Matrix::identity(a.rows)); }

double determinant(const Matrix& a) {
    if (a.rows != a.cols) throw std::invalid_argument("determinant: not square");
    LuFactors f = lu_factor(a);
    if (f.singular) return 0.0;
    double d = f.sign;
    for (std::size_t i = 0; i < a.rows; ++i) d *= f.lu(i, i);
    return d;
}

EigenDecomposition eig_sym(const Matrix& a, double symmetry_tol) {
    if (a.rows != a.cols) throw NotSymmetric("eig_sym: not square");
    const std::size_t n = a.rows;
    double amax = 0.0;
    for (double v : a.data) amax = std::max(amax, std::abs(v));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a(i, j) - a(j, i)) > symmetry_tol * std::max(1.0, amax))
                throw NotSymmetric("eig_sym: asymmetry beyond tolerance");

    Matrix w = a;
    // symmetrize to kill roundoff-level asymmetry before rotating
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (w(i, j) + w(j, i));
            w(i, j) = w(j, i) = m;
        }
    Matrix v = Matrix::identity(n);  // accumulates rotations; columns are eigenvectors

    const double anorm = std::max(frobenius_norm(w), 1e-300);
    const double target = 1e-12 * anorm;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * w(i, j) * w(i, j);
        if (std::sqrt(off) < target) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (w(p, q) == 0.0) continue;
                const double theta = (w(q, q) - w(p, p)) / (2.0 * w(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double wkp = w(k, p), wkq = w(k, q);
                    w(k, p) = c * wkp - s * wkq;
                    w(k, q) = s * wkp + c * wkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double wpk = w(p, k), wqk = w(q, k);
                    w(p, k) = c * wpk - s * wqk;
                    w(q, k) = s * wpk + c * wqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return w(i, i) > w(j, j); });

    EigenDecomposition d;
    d.values.resize(n);
    d.vectors_rows = Matrix(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        d.values[r] = w(order[r], order[r]);
        for (std::size_t k = 0; k < n; ++k) d.vectors_rows(r, k) = v(k, order[r]);
    }
    return d;
}

namespace {

double gamma_p_series(double s, double x) {
    double term = 1.0 / s;
    double sum = term;
    for (int k = 1; k < 10000; ++k) {
        term *= x / (s + k);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

double gamma_q_contfrac(double s, double x) {
    // Lentz's continued fraction for Q(s, x), x > s + 1
    const double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + s * std::log(x) - std::lgamma(s)) * h;
}

}  // namespace

double gamma_p(double s, double x) {
    if (x <= 0.0) return 0.0;
    if (x < s + 1.0) return gamma_p_series(s, x);
    return 1.0 - gamma_q_contfrac(s, x);
}

double chi2_quantile(int dof, double alpha) {
    if (dof < 1) throw std::invalid_argument("chi2_quantile: dof must be positive");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("chi2_quantile: alpha must lie in (0,1)");
    const double s = 0.5 * dof;
    const double target = 1.0 - alpha;  // P(s, c/2) = 1 - alpha
    double lo = 0.0;
    double hi = 1.0;
    while (gamma_p(s, 0.5 * hi) < target) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (gamma_p(s, 0.5 * mid) < target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-9 * std::max(1.0, lo)) break;
    }
    return 0.5 * (lo + hi);
}

namespace {

inline std::uint64_t splitmix_fin(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::next_u64() {
    // counter-based: output depends only on (seed, stream, counter)
    const std::uint64_t base =
        splitmix_fin(seed + 0x9E3779B97F4A7C15ULL * (stream + 1));
    const std::uint64_t out = splitmix_fin(base + 0x9E3779B97F4A7C15ULL * (counter + 1));
    ++counter;
    return out;
}

double RngStream::next_uniform() {
    return (next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_uniform();
}

double RngStream::next_normal() {
    // Box-Muller, one deviate per call; u1 bounded away from 0
    const double u1 = std::max(next_uniform(), 0x1.0p-53);
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

RngStream RngStream::substream(std::uint64_t id) const {
    return RngStream{splitmix_fin(seed + 0x9E3779B97F4A7C15ULL * (stream + 1)), id, 0};
}

}  // namespace svi
