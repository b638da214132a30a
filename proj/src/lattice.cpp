#include "torusdecay/lattice.hpp"

#include <algorithm>

#include "torusdecay/error.hpp"

namespace torusdecay {

LatticeBasis::LatticeBasis(RatMat generators) : n(generators.rows), rows(std::move(generators)) {
    if (n == 0 || rows.cols != n) throw InvalidInput("lattice basis must be a square matrix");
    if (n > 4) throw InvalidInput("lattice dimension > 4 is not supported");
    det = determinant(rows);
    if (det == 0) throw InvalidInput("lattice basis is singular");
}

LatticeBasis LatticeBasis::integer(std::size_t n) { return LatticeBasis(RatMat::identity(n)); }

bool operator==(const LatticeBasis& a, const LatticeBasis& b) {
    return a.n == b.n && a.rows == b.rows;
}

Sublattice::Sublattice(LatticeBasis amb, IntMat gens, bool saturated)
    : ambient(std::move(amb)), generators(std::move(gens)), saturated_hint(saturated) {
    if (generators.rows > 0 && generators.cols != ambient.n)
        throw InvalidInput("sublattice generators must have ambient dimension many columns");
    if (generators.rows > ambient.n)
        throw InvalidInput("sublattice cannot have more generators than the ambient rank");
    if (generators.rows > 0 && torusdecay::rank(to_rational(generators)) != generators.rows)
        throw InvalidInput("sublattice generators must be linearly independent");
}

RatMat Sublattice::ambient_vectors() const {
    if (generators.rows == 0) return RatMat(0, ambient.n);
    return to_rational(generators) * ambient.rows;
}

UnimodularRecord::UnimodularRecord(IntMat m) : matrix(std::move(m)) {
    inverse = unimodular_inverse(matrix); // validates |det| = 1
}

LatticeBasis dual_basis(const LatticeBasis& basis) {
    return LatticeBasis(inverse(basis.rows).transpose());
}

Sublattice saturate(const Sublattice& sub) {
    const std::size_t n = sub.ambient.n;
    if (sub.rank() == 0) return Sublattice(sub.ambient, IntMat(0, n), true);
    // Row lattice of G equals {z D V : z integer}; dropping the invariant
    // factors D keeps the rational span but picks up every integer point of
    // it, i.e. the first rank(G) rows of V generate the saturation.
    const SmithResult s = smith_normal_form(sub.generators);
    std::size_t r = 0;
    const std::size_t bound = std::min(s.d.rows, s.d.cols);
    for (std::size_t i = 0; i < bound; ++i)
        if (s.d.at(i, i) != 0) ++r;
    IntMat gens(r, n);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < n; ++j) gens.at(i, j) = s.v.at(i, j);
    return Sublattice(sub.ambient, hnf_trimmed(gens), true);
}

bool is_saturated(const Sublattice& sub) {
    if (sub.rank() == 0) return true;
    const Sublattice hull = saturate(sub);
    return hnf_trimmed(sub.generators) == hull.generators;
}

namespace {

// Canonical representative of the coset x + rowlattice(hg), where hg is a
// trimmed row HNF: entries at pivot columns are normalized into [0, pivot).
IntVec reduce_mod_hnf(IntVec x, const IntMat& hg) {
    for (std::size_t i = 0; i < hg.rows; ++i) {
        std::size_t p = 0;
        while (p < hg.cols && hg.at(i, p) == 0) ++p;
        const Int q = floor_div(x[p], hg.at(i, p));
        if (q != 0)
            for (std::size_t j = 0; j < hg.cols; ++j) x[j] -= q * hg.at(i, j);
    }
    return x;
}

} // namespace

std::pair<LatticeBasis, UnimodularRecord> complete_basis(const Sublattice& sub) {
    const std::size_t n = sub.ambient.n;
    const std::size_t k = sub.rank();
    if (!is_saturated(sub))
        throw NotSaturated("sublattice is not saturated: its rational span contains ambient "
                           "lattice points outside it, so no completion to a full basis exists");
    if (k == n) {
        UnimodularRecord rec{sub.generators};
        return {LatticeBasis(to_rational(rec.matrix) * sub.ambient.rows), std::move(rec)};
    }
    IntMat t(n, n);
    if (k == 0) {
        t = IntMat::identity(n);
    } else {
        const IntMat g = sub.generators;
        // Coordinates of the orthogonal projection onto span(g)^perp:
        // solve x = W^T c + G^T d columnwise, keep the c block.
        const RatMat w = kernel_basis(to_rational(g)); // (n-k) x n, rows span the complement
        RatMat cols(n, n);                             // [w^T | g^T]
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n - k; ++j) cols.at(i, j) = w.at(j, i);
            for (std::size_t j = 0; j < k; ++j) cols.at(i, n - k + j) = Rational(g.at(j, i));
        }
        const RatMat sol = inverse(cols);
        RatMat proj(n - k, n); // x -> coordinates of the projection, (n-k) x n
        for (std::size_t i = 0; i < n - k; ++i)
            for (std::size_t j = 0; j < n; ++j) proj.at(i, j) = sol.at(i, j);

        // The projected copy of Z^n is generated by the columns of proj.
        // Clear denominators globally, Hermite-reduce the generators, and pull
        // each canonical quadrant basis row back through the tracked transform.
        Int den(1);
        for (const auto& v : proj.a) den = lcm_int(den, denominator(v));
        IntMat gen_rows(n, n - k); // row i = scaled projection of e_i
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n - k; ++j)
                gen_rows.at(i, j) = numerator(proj.at(j, i) * Rational(den));
        IntMat lift_t;
        const IntMat h = hnf(gen_rows, &lift_t); // h = lift_t * gen_rows
        const IntMat hg = hnf_trimmed(g);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < n; ++j) t.at(i, j) = g.at(i, j);
        for (std::size_t r = 0; r < n - k; ++r) {
            // row r of h equals proj(lift) * den, so lift_t's row is an integer
            // preimage of the canonical quotient basis vector
            IntVec lift(n);
            for (std::size_t j = 0; j < n; ++j) lift[j] = lift_t.at(r, j);
            lift = reduce_mod_hnf(std::move(lift), hg);
            for (std::size_t j = 0; j < n; ++j) t.at(k + r, j) = lift[j];
        }
    }
    UnimodularRecord rec{std::move(t)};
    return {LatticeBasis(to_rational(rec.matrix) * sub.ambient.rows), std::move(rec)};
}

Sublattice lattice_points_in_subspace(const LatticeBasis& lat, const RatMat& subspace) {
    const std::size_t n = lat.n;
    if (subspace.cols != n && subspace.rows > 0)
        throw InvalidInput("subspace spanning rows must have the lattice dimension");
    // x in span(subspace) iff every annihilator row kills x.
    RatMat span = subspace.rows == 0 ? RatMat(0, n) : subspace;
    const RatMat annihilator = kernel_basis(span); // rows p with p . s = 0 for all spanning s
    if (annihilator.rows == 0) {
        // subspace is everything: every lattice point qualifies
        return Sublattice(lat, IntMat::identity(n), true);
    }
    // Coordinates m (integer) with sum_i m_i gen_i in span: annihilator * B^T m = 0.
    const RatMat constraint = annihilator * lat.rows.transpose();
    const IntMat cz = clear_denominators(constraint);
    const SmithResult s = smith_normal_form(cz); // cz = u d v
    std::size_t r = 0;
    const std::size_t bound = std::min(s.d.rows, s.d.cols);
    for (std::size_t i = 0; i < bound; ++i)
        if (s.d.at(i, i) != 0) ++r;
    // cz m = 0 iff (v m) is supported on the zero part of d: m = vinv * e_i, i >= r.
    const IntMat vinv = unimodular_inverse(s.v);
    IntMat gens(n - r, n);
    for (std::size_t i = r; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) gens.at(i - r, j) = vinv.at(j, i);
    return Sublattice(lat, hnf_trimmed(gens), true);
}

} // namespace torusdecay
