#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>

#include "torusdecay/lattice.hpp"
#include "torusdecay/model.hpp"

namespace torusdecay {

// Verdict of the nonlinearity-diffusivity test at a fixed mean value I.
// The solution decays to its mean iff no nonzero dual-lattice vector keeps
// the flux pairing affine and annihilates the diffusion form on a common
// interval around I.
struct ConditionReport {
    bool holds = true;
    Rational I;

    // Failure data, engaged iff !holds. The witness is the canonical
    // shortest violating generator: exact integer coordinates with respect
    // to the dual basis, plus the same vector in ambient coordinates.
    std::optional<IntVec> witness;
    std::optional<RatVec> witness_ambient;
    // Open interval around I on which every violating direction keeps the
    // flux pairing affine and the diffusion form identically zero.
    std::optional<std::pair<Rational, Rational>> vicinity;

    // Provenance: the affine subspace W and degenerate subspace Z (rows
    // span each), the violating sublattice L' ∩ (W ∩ Z), and the slope
    // vector: xi·flux has slope cbar·xi near I for every xi in W.
    RatMat affine_subspace;
    RatMat degenerate_subspace;
    Sublattice violating;
    RatVec cbar;
};

ConditionReport check_condition(const FluxSpec& flux, const DiffusionSpec& diff,
                                const LatticeBasis& lat, const Rational& I);

// Verdict of the stricter test over the whole state range [-M, M]: fails
// iff some nonzero dual-lattice vector xi and some shift tau make
// tau + xi·flux'(u) and the diffusion form a(u)xi·xi vanish together on a
// set of positive measure. For piecewise-polynomial data that means a
// common interval where xi·flux' is constant (with value -tau) and the
// form is the zero polynomial; the tau quantifier is eliminated exactly.
struct StrictConditionReport {
    bool holds = true;
    std::optional<IntVec> witness;  // dual-basis coordinates
    std::optional<RatVec> witness_ambient;
    std::optional<Rational> tau;
    std::optional<std::pair<Rational, Rational>> interval;
};

StrictConditionReport check_strict_condition(const FluxSpec& flux, const DiffusionSpec& diff,
                                             const LatticeBasis& lat, const Rational& M);

// Exact change of variables y_i = zeta_i·x - c_i t renormalizing the
// periodicity lattice to Z^n and sorting directions: the first d
// transformed coordinates are genuinely nonlinear, the last n-d have
// constant flux near I. Original coordinates are recoverable exactly via
// x = transform_inverse · (y + speed·t).
struct ReducedProblem {
    FluxSpec flux_t;
    DiffusionSpec diffusion_t;

    RatMat transform;          // Q; row i is zeta_i in ambient coordinates
    RatMat transform_inverse;  // exact inverse of Q
    IntMat coordinates;        // zeta rows as integer coordinates in the dual basis
    RatVec speed;              // c_i = cbar·zeta_i

    std::size_t d = 0;  // count of genuinely nonlinear directions
    // Transformed flux components d+1..n are constant on this interval.
    std::pair<Rational, Rational> plateau;
    // Renormalization predicates, re-verified on the output:
    //   [0] the transformed period lattice is Z^n;
    //   [1] an integer vector pairs affinely with the transformed flux near
    //       I iff its first d coordinates vanish;
    //   [2] components d+1..n of the transformed flux are constant on the
    //       plateau around I;
    //   [3] no nonzero integer vector supported on the last n-d coordinates
    //       annihilates the transformed diffusion form near I (holds iff
    //       the nonlinearity-diffusivity condition holds on the input).
    std::array<bool, 4> r_flags{};
    Rational I;
};

ReducedProblem reduce_problem(const FluxSpec& flux, const DiffusionSpec& diff,
                              const LatticeBasis& lat, const Rational& I);

// Closed-form non-decaying field u(t,x) = I + delta·sin(2pi(xi·x - c t)),
// available when the condition fails: an exact traveling-wave entropy
// solution whose torus mean stays I and whose L1 distance to the mean is
// constant in time (2·delta/pi per unit torus volume).
struct CounterexampleField {
    Rational I;
    Rational delta;
    RatVec xi;   // ambient dual-lattice vector
    Rational c;  // speed: xi·flux(u) = c·u + const on the violating interval

    double eval(double t, std::span<const double> x) const;
    double eval1(double t, double x) const;  // one-dimensional convenience
};

// delta defaults to half the distance from I to the nearer vicinity
// endpoint. Throws ConditionHolds when report.holds is true, InvalidInput
// when the band [I-delta, I+delta] does not fit inside the vicinity.
CounterexampleField counterexample(const ConditionReport& report,
                                   std::optional<Rational> delta = std::nullopt);

}  // namespace torusdecay
