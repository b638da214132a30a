#pragma once

#include <cstddef>
#include <vector>

#include "torusdecay/rational.hpp"

namespace torusdecay {

using RatVec = std::vector<Rational>;
using IntVec = std::vector<Int>;

// Row-major dense matrix with exact rational entries. Sizes here are tiny
// (spatial dimension <= 4), so everything is exact Gaussian algebra.
struct RatMat {
    std::size_t rows = 0, cols = 0;
    std::vector<Rational> a;

    RatMat() = default;
    RatMat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, Rational(0)) {}

    Rational& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    const Rational& at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static RatMat identity(std::size_t n);
    RatMat transpose() const;
    RatVec row(std::size_t i) const;
    void set_row(std::size_t i, const RatVec& v);

    friend RatMat operator*(const RatMat& x, const RatMat& y);
    friend bool operator==(const RatMat& x, const RatMat& y) {
        return x.rows == y.rows && x.cols == y.cols && x.a == y.a;
    }
};

// Same layout with arbitrary-precision integer entries; used for lattice
// coordinates, Hermite and Smith forms.
struct IntMat {
    std::size_t rows = 0, cols = 0;
    std::vector<Int> a;

    IntMat() = default;
    IntMat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, Int(0)) {}

    Int& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    const Int& at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static IntMat identity(std::size_t n);
    IntMat transpose() const;
    IntVec row(std::size_t i) const;

    friend IntMat operator*(const IntMat& x, const IntMat& y);
    friend bool operator==(const IntMat& x, const IntMat& y) {
        return x.rows == y.rows && x.cols == y.cols && x.a == y.a;
    }
};

RatMat to_rational(const IntMat& m);

// Reduced row echelon form in place; returns the pivot column indices.
std::vector<std::size_t> rref_in_place(RatMat& m);

std::size_t rank(RatMat m);

// Canonical basis (rows) of {x : m x = 0}. One row per free column of the
// RREF, ordered by free column index; empty matrix (0 x cols) for trivial
// kernels.
RatMat kernel_basis(const RatMat& m);

Rational determinant(RatMat m);
RatMat inverse(const RatMat& m); // throws InvalidInput on singular input

Int determinant(IntMat m); // fraction-free (Bareiss)

// Scales each row by the lcm of its denominators; preserves the kernel and
// the row space. Deterministic, so usable in canonical constructions.
IntMat clear_denominators(const RatMat& m);

// Row-style Hermite normal form: H = T * m with T unimodular. Pivots are
// positive, strictly to the right as rows descend, entries above each pivot
// reduced into [0, pivot). Zero rows sink to the bottom. H has the same shape
// as m; `transform`, when non-null, receives T.
IntMat hnf(const IntMat& m, IntMat* transform = nullptr);

// Nonzero rows of hnf(m): the canonical generator matrix of the row lattice.
IntMat hnf_trimmed(const IntMat& m);

struct SmithResult {
    IntMat u; // rows x rows, |det| = 1
    IntMat d; // rows x cols, diagonal, nonnegative, divisibility chain
    IntMat v; // cols x cols, |det| = 1
};

// Smith normal form with m = u * d * v.
SmithResult smith_normal_form(const IntMat& m);

// Exact inverse of a matrix with |det| = 1; throws InvalidInput otherwise.
IntMat unimodular_inverse(const IntMat& m);

RatVec mat_vec(const RatMat& m, const RatVec& x);
Rational dot(const RatVec& x, const RatVec& y);

} // namespace torusdecay
