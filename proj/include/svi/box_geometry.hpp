#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "svi/numerics.hpp"

namespace svi {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Feasible set S as a product of (possibly unbounded) intervals.
struct BoxSet {
    Vector lower;  // -inf allowed
    Vector upper;  // +inf allowed

    std::size_t dim() const { return lower.size(); }

    static BoxSet nonnegative_orthant(std::size_t q) {
        return BoxSet{Vector(q, 0.0), Vector(q, kInf)};
    }
};

enum class FaceTag { BelowLower, AtLower, Interior, AtUpper, AtBothBounds, AboveUpper };

// Per-coordinate piece of a normal-manifold cell. Lower is the outer piece
// (-inf, lo], Middle is [lo, up], Upper is [up, +inf).
enum class Piece { Lower, Middle, Upper };

// Classification of a point relative to S, with an optional commitment of
// each boundary-tagged coordinate to one piece. Only a resolved pattern
// identifies a single cell.
struct FacePattern {
    std::vector<FaceTag> tags;
    double tau = 0.0;
    std::optional<std::vector<Piece>> resolution;

    bool resolved() const { return resolution.has_value(); }
};

// Diagonal 0/1 selection matrix; entry j is 1 iff coordinate j sits in the
// middle piece of the cell.
struct SelectionMatrix {
    std::vector<bool> middle;

    Matrix as_matrix() const {
        Matrix a(middle.size(), middle.size());
        for (std::size_t j = 0; j < middle.size(); ++j) a(j, j) = middle[j] ? 1.0 : 0.0;
        return a;
    }
};

struct CombinatorialBlowup : std::runtime_error {
    explicit CombinatorialBlowup(const std::string& what) : std::runtime_error(what) {}
};
struct UnresolvedPattern : std::runtime_error {
    explicit UnresolvedPattern(const std::string& what) : std::runtime_error(what) {}
};
struct NotInCommonCell : std::runtime_error {
    explicit NotInCommonCell(const std::string& what) : std::runtime_error(what) {}
};

double default_classify_tol(const Vector& z);

Vector project(const BoxSet& s, const Vector& z);

FacePattern classify(const BoxSet& s, const Vector& z, double tau);

// Directional derivative of the projector at z applied to h.
Vector dpi_apply(const BoxSet& s, const Vector& z, const Vector& h);

// All normal-manifold cells containing z, each returned as a resolved
// pattern. Throws CombinatorialBlowup past `cap` cells.
std::vector<FacePattern> cells_at(const BoxSet& s, const Vector& z, double tau,
                                  std::size_t cap = 4096);

SelectionMatrix selection_matrix(const FacePattern& pattern);

// Checks d Pi_S(x)(y-x) = -d Pi_S(y)(x-y); requires x and y to share a cell.
bool dpi_symmetry_check(const BoxSet& s, const Vector& x, const Vector& y,
                        double tau = 0.0);

// True iff x and y lie in a common cell (per-coordinate piece sets intersect).
bool share_cell(const BoxSet& s, const Vector& x, const Vector& y, double tau = 0.0);

}  // namespace svi
