#pragma once

#include <cstddef>
#include <utility>

#include "torusdecay/matrix.hpp"

namespace torusdecay {

// Full-rank lattice in R^n given by n generator rows with exact rational
// entries. Periods of the torus and frequencies of its dual both live here.
// Dimensions up to 4 are supported; everything is exact.
struct LatticeBasis {
    std::size_t n = 0;
    RatMat rows;  // n x n, row i = generator i
    Rational det; // cached, nonzero

    LatticeBasis() = default;
    explicit LatticeBasis(RatMat generators);

    static LatticeBasis integer(std::size_t n); // Z^n

    RatVec generator(std::size_t i) const { return rows.row(i); }
};

bool operator==(const LatticeBasis& a, const LatticeBasis& b);

// Rank-k sublattice of `ambient`, presented by k integer coordinate rows
// (coordinates with respect to the ambient generators).
struct Sublattice {
    LatticeBasis ambient;
    IntMat generators; // k x n, rows independent over Q
    bool saturated_hint = false;

    Sublattice() = default;
    Sublattice(LatticeBasis amb, IntMat gens, bool saturated = false);

    std::size_t rank() const { return generators.rows; }
    // generators as ambient-space rational vectors (k x n)
    RatMat ambient_vectors() const;
};

// Integer change of basis together with its exact inverse.
struct UnimodularRecord {
    IntMat matrix;
    IntMat inverse;

    UnimodularRecord() = default;
    explicit UnimodularRecord(IntMat m);
};

// Rows pairing to the identity with the input generators:
// dual.row(i) . basis.row(j) == delta_ij. Exact inverse-transpose.
LatticeBasis dual_basis(const LatticeBasis& basis);

// Smallest saturated sublattice containing `sub` (same rational span,
// all ambient-lattice points of that span). Canonical (HNF) generators.
Sublattice saturate(const Sublattice& sub);

bool is_saturated(const Sublattice& sub);

// Extends the generators of a saturated sublattice to a basis of the ambient
// lattice. The first k rows of the result are the input generators verbatim;
// the remaining rows are a canonical completion (quotient Hermite basis with
// pivot-reduced coset representatives). Throws NotSaturated when the input is
// not saturated, since only saturated sublattices extend to full bases.
std::pair<LatticeBasis, UnimodularRecord> complete_basis(const Sublattice& sub);

// All lattice points of `lat` lying in the rational subspace spanned by the
// rows of `subspace` (redundant or zero spanning rows are fine). The result
// is saturated by construction, with canonical (HNF) generators.
Sublattice lattice_points_in_subspace(const LatticeBasis& lat, const RatMat& subspace);

} // namespace torusdecay
