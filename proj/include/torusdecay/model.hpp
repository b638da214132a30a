#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "torusdecay/matrix.hpp"
#include "torusdecay/piecewise.hpp"

namespace torusdecay {

// Flux vector phi_1..phi_n on the working interval [-M, M]. Components are
// normalized onto a shared breakpoint grid and must be continuous.
struct FluxSpec {
    std::size_t n = 0;
    Rational bound;                         // M
    std::vector<PiecewisePoly> components;  // size n, common grid

    FluxSpec(std::vector<PiecewisePoly> comps, const Rational& M);
};

// Symmetric diffusion matrix a_ij on [-M, M] with its entrywise primitive
// A_ij (A' = a, anchored at 0). Positive semidefiniteness is certified
// exactly at every breakpoint and at nine interior points per piece; the
// certified sample points are recorded.
struct DiffusionSpec {
    std::size_t n = 0;
    Rational bound;
    std::vector<PiecewisePoly> entries;    // row-major n*n, common grid
    std::vector<PiecewisePoly> primitive;  // same layout
    std::vector<Rational> psd_certificate;

    DiffusionSpec(std::size_t dim, std::vector<PiecewisePoly> entry_list, const Rational& M);

    const PiecewisePoly& entry(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
    const PiecewisePoly& primitive_entry(std::size_t i, std::size_t j) const {
        return primitive[i * n + j];
    }
    bool is_diagonal() const;
    bool is_zero() const;
};

// Convex entropy with its derivative. Convexity is validated by requiring
// the derivative to be nondecreasing across 64 equispaced samples plus all
// breakpoints (one-sided values at jumps).
struct EntropySpec {
    PiecewisePoly eta;
    PiecewisePoly eta_prime;

    explicit EntropySpec(PiecewisePoly eta_fn);

    static EntropySpec square(const Rational& M);
    static EntropySpec kruzhkov(const Rational& k, const Rational& M);      // |u - k|
    static EntropySpec positive_part(const Rational& k, const Rational& M); // (u - k)+
};

// Directions xi for which xi.phi is affine near I, the largest interval
// around I where that holds for the whole subspace, and the slope functional
// cbar (in the row span of basis) with xi.phi(u) = (cbar.xi) u + const there.
struct AffineLocus {
    RatMat basis;  // rows span W
    Rational alpha, beta;
    RatVec cbar;   // zero vector when W is trivial
};

AffineLocus affine_locus(const FluxSpec& flux, const Rational& I);

// Directions xi with a(u) xi . xi identically zero near I, as the joint
// kernel of the polynomial coefficient matrices of the piece(s) adjacent
// to I. Rows of the result span the subspace.
RatMat degenerate_locus(const DiffusionSpec& diff, const Rational& I);

// Largest interval around I on which xi.phi is a single affine function;
// nullopt when it is not affine on the piece(s) adjacent to I. Also yields
// the slope.
struct AffineVicinity {
    Rational alpha, beta, slope;
};
std::optional<AffineVicinity> affine_vicinity(const FluxSpec& flux, const Rational& I,
                                              const RatVec& xi);

// Largest interval around I on which a(u) xi . xi is the zero polynomial;
// nullopt when it is nonzero on an adjacent piece.
struct ZeroVicinity {
    Rational alpha, beta;
};
std::optional<ZeroVicinity> zero_vicinity(const DiffusionSpec& diff, const Rational& I,
                                          const RatVec& xi);
// Same, required to hold simultaneously for every row of a spanning set.
std::optional<ZeroVicinity> zero_vicinity_common(const DiffusionSpec& diff, const Rational& I,
                                                 const RatMat& span);

// Certified upper bound for max |p| over [lo, hi], exact (up to the final
// double conversion) at endpoints and rational critical points; irrational
// critical points are bracketed to 2^-48 of the range with a rigorous
// remainder term, so the result never underestimates.
double max_abs_value(const PiecewisePoly& p, const Rational& lo, const Rational& hi);

// sup |p'| over [-M, M]: max_abs_value of the piecewise derivative.
double lipschitz_bound(const PiecewisePoly& p, const Rational& M);

}  // namespace torusdecay
