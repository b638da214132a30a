#include "torusdecay/model.hpp"

#include <algorithm>
#include <utility>

namespace torusdecay {

namespace {

Rational abs_rat(const Rational& x) { return x < 0 ? -x : x; }

// refine every function onto the union of all breakpoint grids
std::vector<PiecewisePoly> to_common_grid(std::vector<PiecewisePoly> fns) {
    std::vector<Rational> nb = fns[0].breakpoints();
    for (std::size_t k = 1; k < fns.size(); ++k) {
        const auto& bk = fns[k].breakpoints();
        if (bk.front() != nb.front() || bk.back() != nb.back())
            throw InvalidInput("spec components have different working intervals");
        nb.insert(nb.end(), bk.begin(), bk.end());
    }
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    for (auto& f : fns) f = f.refined(nb);
    return fns;
}

// indices of the piece(s) whose closure contains I (two when I is an
// interior breakpoint, one otherwise)
std::vector<std::size_t> adjacent_pieces(const PiecewisePoly& grid, const Rational& I) {
    std::vector<std::size_t> out;
    if (I > grid.domain_lo()) out.push_back(grid.piece_index_left(I));
    if (I < grid.domain_hi()) {
        const std::size_t r = grid.piece_index_right(I);
        if (out.empty() || r != out.front()) out.push_back(r);
    }
    return out;
}

void check_inside(const Rational& I, const Rational& M, const char* what) {
    if (I < -M || I > M) throw InvalidInput(std::string(what) + " outside working interval");
}

// exact positive semidefiniteness of a symmetric rational matrix: every
// principal minor is nonnegative
bool psd_exact(const RatMat& s) {
    const std::size_t n = s.rows;
    for (std::size_t mask = 1; mask < (std::size_t(1) << n); ++mask) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (std::size_t(1) << i)) idx.push_back(i);
        RatMat sub(idx.size(), idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j) sub.at(i, j) = s.at(idx[i], idx[j]);
        if (determinant(sub) < 0) return false;
    }
    return true;
}

}  // namespace

FluxSpec::FluxSpec(std::vector<PiecewisePoly> comps, const Rational& M) : bound(M) {
    if (comps.empty()) throw InvalidInput("flux needs at least one component");
    if (!(M > 0)) throw InvalidInput("state bound must be positive");
    n = comps.size();
    for (const auto& c : comps) {
        if (c.domain_lo() != -M || c.domain_hi() != M)
            throw InvalidInput("flux component domain must be [-M, M]");
        if (!c.is_continuous()) throw InvalidInput("flux components must be continuous");
    }
    components = to_common_grid(std::move(comps));
}

DiffusionSpec::DiffusionSpec(std::size_t dim, std::vector<PiecewisePoly> entry_list,
                             const Rational& M)
    : n(dim), bound(M) {
    if (dim == 0) throw InvalidInput("diffusion dimension must be positive");
    if (!(M > 0)) throw InvalidInput("state bound must be positive");
    if (entry_list.size() != dim * dim)
        throw InvalidInput("diffusion matrix needs n*n entries");
    for (const auto& e : entry_list)
        if (e.domain_lo() != -M || e.domain_hi() != M)
            throw InvalidInput("diffusion entry domain must be [-M, M]");
    entries = to_common_grid(std::move(entry_list));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (!(entry(i, j) == entry(j, i)))
                throw InvalidInput("diffusion matrix must be symmetric");

    // certify a(u) >= 0 at piece endpoints and nine interior points per piece
    const auto& grid = entries[0].breakpoints();
    for (std::size_t p = 0; p + 1 < grid.size(); ++p) {
        for (int k = 0; k <= 10; ++k) {
            const Rational t = grid[p] + (grid[p + 1] - grid[p]) * Rational(k, 10);
            RatMat s(n, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) s.at(i, j) = entry(i, j).piece(p).eval(t);
            if (!psd_exact(s))
                throw InvalidInput("diffusion matrix is not positive semidefinite at u = " +
                                   to_string(t));
            psd_certificate.push_back(t);
        }
    }
    psd_certificate.erase(std::unique(psd_certificate.begin(), psd_certificate.end()),
                          psd_certificate.end());

    primitive.reserve(entries.size());
    for (const auto& e : entries) primitive.push_back(e.primitive(Rational(0)));
}

bool DiffusionSpec::is_diagonal() const {
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && !entry(i, j).is_zero()) return false;
    return true;
}

bool DiffusionSpec::is_zero() const {
    for (const auto& e : entries)
        if (!e.is_zero()) return false;
    return true;
}

EntropySpec::EntropySpec(PiecewisePoly eta_fn)
    : eta(std::move(eta_fn)), eta_prime(eta.derivative()) {
    if (!eta.is_continuous()) throw InvalidInput("entropy must be continuous");
    // convexity: derivative nondecreasing across 64 equispaced samples plus
    // every breakpoint, with one-sided values at jumps
    const Rational lo = eta.domain_lo(), hi = eta.domain_hi();
    std::vector<Rational> pts = eta.breakpoints();
    for (int k = 0; k < 64; ++k) pts.push_back(lo + (hi - lo) * Rational(k, 63));
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    bool have_prev = false;
    Rational prev(0);
    for (const Rational& p : pts) {
        for (int side = 0; side < 2; ++side) {
            if (side == 0 && p == lo) continue;
            if (side == 1 && p == hi) continue;
            const Rational v = side == 0 ? eta_prime.eval_left(p) : eta_prime.eval_right(p);
            if (have_prev && v < prev)
                throw InvalidInput("entropy is not convex: derivative decreases at u = " +
                                   to_string(p));
            prev = v;
            have_prev = true;
        }
    }
}

EntropySpec EntropySpec::square(const Rational& M) {
    return EntropySpec(PiecewisePoly::from_poly(Poly({Rational(0), Rational(0), Rational(1)}),
                                                -M, M));
}

EntropySpec EntropySpec::kruzhkov(const Rational& k, const Rational& M) {
    const Poly down({k, Rational(-1)});  // k - u
    const Poly up({-k, Rational(1)});    // u - k
    if (k <= -M) return EntropySpec(PiecewisePoly::from_poly(up, -M, M));
    if (k >= M) return EntropySpec(PiecewisePoly::from_poly(down, -M, M));
    return EntropySpec(PiecewisePoly({-M, k, M}, {down, up}));
}

EntropySpec EntropySpec::positive_part(const Rational& k, const Rational& M) {
    const Poly up({-k, Rational(1)});
    if (k <= -M) return EntropySpec(PiecewisePoly::from_poly(up, -M, M));
    if (k >= M) return EntropySpec(PiecewisePoly::constant(Rational(0), -M, M));
    return EntropySpec(PiecewisePoly({-M, k, M}, {Poly(), up}));
}

// ---------------------------------------------------------------------------
// Loci
// ---------------------------------------------------------------------------

AffineLocus affine_locus(const FluxSpec& flux, const Rational& I) {
    check_inside(I, flux.bound, "mean value");
    const std::size_t n = flux.n;
    const auto sides = adjacent_pieces(flux.components[0], I);

    // xi is in W iff the combination has no coefficient of degree >= 2 on the
    // adjacent piece(s) and, when I is a breakpoint, both slopes agree
    std::vector<RatVec> rows;
    for (const std::size_t s : sides) {
        int maxdeg = 0;
        for (const auto& c : flux.components) maxdeg = std::max(maxdeg, c.piece(s).degree());
        for (int d = 2; d <= maxdeg; ++d) {
            RatVec row(n, Rational(0));
            bool nonzero = false;
            for (std::size_t i = 0; i < n; ++i) {
                row[i] = flux.components[i].piece(s).coeff(static_cast<std::size_t>(d));
                if (row[i] != 0) nonzero = true;
            }
            if (nonzero) rows.push_back(std::move(row));
        }
    }
    if (sides.size() == 2) {
        RatVec row(n, Rational(0));
        bool nonzero = false;
        for (std::size_t i = 0; i < n; ++i) {
            row[i] = flux.components[i].piece(sides[0]).coeff(1) -
                     flux.components[i].piece(sides[1]).coeff(1);
            if (row[i] != 0) nonzero = true;
        }
        if (nonzero) rows.push_back(std::move(row));
    }

    RatMat constraint(rows.size(), n);
    for (std::size_t r = 0; r < rows.size(); ++r) constraint.set_row(r, rows[r]);
    AffineLocus out{kernel_basis(constraint), Rational(0), Rational(0), RatVec(n, Rational(0))};

    const std::size_t k = out.basis.rows;
    if (k == 0) {
        out.alpha = -flux.bound;
        out.beta = flux.bound;
        return out;
    }

    // slope of w.phi near I for each basis row, then the Gram solve that puts
    // cbar inside span(W)
    RatVec slopes(k, Rational(0));
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i)
            slopes[j] += out.basis.at(j, i) * flux.components[i].piece(sides[0]).coeff(1);
    RatMat gram(k, k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) gram.at(a, b) = dot(out.basis.row(a), out.basis.row(b));
    const RatVec lambda = mat_vec(inverse(gram), slopes);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i) out.cbar[i] += lambda[j] * out.basis.at(j, i);

    // grow the interval piece by piece while every basis direction stays
    // affine with its slope at I
    const auto qualifies = [&](std::size_t q) {
        for (std::size_t j = 0; j < k; ++j) {
            Poly comb;
            for (std::size_t i = 0; i < n; ++i)
                comb = comb + out.basis.at(j, i) * flux.components[i].piece(q);
            if (!comb.is_affine() || comb.coeff(1) != slopes[j]) return false;
        }
        return true;
    };
    std::size_t lo = *std::min_element(sides.begin(), sides.end());
    std::size_t hi = *std::max_element(sides.begin(), sides.end());
    while (lo > 0 && qualifies(lo - 1)) --lo;
    while (hi + 1 < flux.components[0].piece_count() && qualifies(hi + 1)) ++hi;
    out.alpha = flux.components[0].breakpoints()[lo];
    out.beta = flux.components[0].breakpoints()[hi + 1];
    return out;
}

RatMat degenerate_locus(const DiffusionSpec& diff, const Rational& I) {
    check_inside(I, diff.bound, "mean value");
    if (diff.psd_certificate.empty())
        throw InvalidInput("positive semidefiniteness certificate missing");
    const std::size_t n = diff.n;
    const auto sides = adjacent_pieces(diff.entries[0], I);

    // since a(u) >= 0 pointwise, a(u) xi . xi = 0 on an interval forces
    // a(u) xi = 0 there, i.e. xi lies in the kernel of every polynomial
    // coefficient matrix of the adjacent piece(s)
    std::vector<RatVec> rows;
    for (const std::size_t s : sides) {
        int maxdeg = 0;
        for (const auto& e : diff.entries) maxdeg = std::max(maxdeg, e.piece(s).degree());
        for (int d = 0; d <= maxdeg; ++d) {
            for (std::size_t i = 0; i < n; ++i) {
                RatVec row(n, Rational(0));
                bool nonzero = false;
                for (std::size_t j = 0; j < n; ++j) {
                    row[j] = diff.entry(i, j).piece(s).coeff(static_cast<std::size_t>(d));
                    if (row[j] != 0) nonzero = true;
                }
                if (nonzero) rows.push_back(std::move(row));
            }
        }
    }
    RatMat constraint(rows.size(), n);
    for (std::size_t r = 0; r < rows.size(); ++r) constraint.set_row(r, rows[r]);
    return kernel_basis(constraint);
}

std::optional<AffineVicinity> affine_vicinity(const FluxSpec& flux, const Rational& I,
                                              const RatVec& xi) {
    check_inside(I, flux.bound, "mean value");
    const auto sides = adjacent_pieces(flux.components[0], I);
    const auto combination = [&](std::size_t q) {
        Poly comb;
        for (std::size_t i = 0; i < flux.n; ++i) comb = comb + xi[i] * flux.components[i].piece(q);
        return comb;
    };
    const Poly first = combination(sides[0]);
    if (!first.is_affine()) return std::nullopt;
    const Rational slope = first.coeff(1);
    for (const std::size_t s : sides) {
        const Poly comb = combination(s);
        if (!comb.is_affine() || comb.coeff(1) != slope) return std::nullopt;
    }
    const auto qualifies = [&](std::size_t q) {
        const Poly comb = combination(q);
        return comb.is_affine() && comb.coeff(1) == slope;
    };
    std::size_t lo = *std::min_element(sides.begin(), sides.end());
    std::size_t hi = *std::max_element(sides.begin(), sides.end());
    while (lo > 0 && qualifies(lo - 1)) --lo;
    while (hi + 1 < flux.components[0].piece_count() && qualifies(hi + 1)) ++hi;
    return AffineVicinity{flux.components[0].breakpoints()[lo],
                          flux.components[0].breakpoints()[hi + 1], slope};
}

std::optional<ZeroVicinity> zero_vicinity_common(const DiffusionSpec& diff, const Rational& I,
                                                 const RatMat& span) {
    check_inside(I, diff.bound, "mean value");
    const std::size_t n = diff.n;
    if (span.cols != n) throw InvalidInput("span dimension mismatch");
    if (span.rows == 0)
        return ZeroVicinity{-diff.bound, diff.bound};
    const auto sides = adjacent_pieces(diff.entries[0], I);
    // with a(u) >= 0, per-vector vanishing of the form implies vanishing on
    // the whole span, so checking each spanning row suffices
    const auto qualifies = [&](std::size_t q) {
        for (std::size_t r = 0; r < span.rows; ++r) {
            Poly form;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    form = form + (span.at(r, i) * span.at(r, j)) * diff.entry(i, j).piece(q);
            if (!form.is_zero()) return false;
        }
        return true;
    };
    for (const std::size_t s : sides)
        if (!qualifies(s)) return std::nullopt;
    std::size_t lo = *std::min_element(sides.begin(), sides.end());
    std::size_t hi = *std::max_element(sides.begin(), sides.end());
    while (lo > 0 && qualifies(lo - 1)) --lo;
    while (hi + 1 < diff.entries[0].piece_count() && qualifies(hi + 1)) ++hi;
    return ZeroVicinity{diff.entries[0].breakpoints()[lo],
                        diff.entries[0].breakpoints()[hi + 1]};
}

std::optional<ZeroVicinity> zero_vicinity(const DiffusionSpec& diff, const Rational& I,
                                          const RatVec& xi) {
    RatMat span(1, diff.n);
    span.set_row(0, xi);
    return zero_vicinity_common(diff, I, span);
}

// ---------------------------------------------------------------------------
// Certified bounds
// ---------------------------------------------------------------------------

namespace {

int sign_of(const Rational& x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

std::vector<Poly> sturm_chain(const Poly& p) {
    std::vector<Poly> chain{p};
    Poly d = p.derivative();
    if (d.is_zero()) return chain;
    chain.push_back(std::move(d));
    while (true) {
        Poly r = poly_divmod(chain[chain.size() - 2], chain.back()).remainder;
        if (r.is_zero()) break;
        chain.push_back(-r);
    }
    return chain;
}

int sign_variations(const std::vector<Poly>& chain, const Rational& x) {
    int v = 0, prev = 0;
    for (const Poly& q : chain) {
        const int s = sign_of(q.eval(x));
        if (s == 0) continue;
        if (prev != 0 && s != prev) ++v;
        prev = s;
    }
    return v;
}

Rational coeff_bound(const Poly& p, const Rational& radius) {
    Rational u(0), pw(1);
    for (const Rational& c : p.coeffs()) {
        u += abs_rat(c) * pw;
        pw *= radius;
    }
    return u;
}

// divide square-free s by (u - root); root must be an exact root
Poly deflate(const Poly& s, const Rational& root) {
    return poly_divmod(s, Poly({-root, Rational(1)})).quotient;
}

// upper bound for max |P| on [a, b]
double segment_max_abs(const Poly& P, const Rational& a, const Rational& b) {
    Rational best = std::max(abs_rat(P.eval(a)), abs_rat(P.eval(b)));
    double slack_max = 0.0;
    const Poly d1 = P.derivative();
    if (d1.degree() >= 1 && a < b) {
        // critical points are the distinct roots of the square-free part
        const Poly g = poly_gcd(d1, d1.derivative());
        Poly s = g.degree() >= 1 ? poly_divmod(d1, g).quotient : d1;
        for (const Rational& endpoint : {a, b})
            if (s.eval(endpoint) == 0) s = deflate(s, endpoint);  // endpoint max already counted

        const Rational radius = std::max({abs_rat(a), abs_rat(b), Rational(1)});
        const Rational deriv_bound = coeff_bound(d1, radius);
        const Rational eps = (b - a) / Rational(Int(1) << 48);

        std::vector<std::pair<Rational, Rational>> work{{a, b}};
        while (!work.empty() && s.degree() >= 1) {
            auto [x, y] = work.back();
            work.pop_back();
            auto chain = sturm_chain(s);
            if (sign_variations(chain, x) - sign_variations(chain, y) <= 0) continue;
            if (y - x <= eps) {
                // unresolved (irrational) root inside: bound the wiggle
                const Rational local = std::max(abs_rat(P.eval(x)), abs_rat(P.eval(y)));
                const double bound =
                    to_double(local) + 2.0 * to_double((y - x) * deriv_bound);
                slack_max = std::max(slack_max, bound);
                continue;
            }
            // pick a split point that is not itself a root; when it is, that
            // root is rational: record it exactly and deflate it away
            Rational m = (x + y) / 2;
            while (s.eval(m) == 0) {
                best = std::max(best, abs_rat(P.eval(m)));
                s = deflate(s, m);
                if (s.degree() < 1) break;
            }
            if (s.degree() < 1) break;
            work.emplace_back(x, m);
            work.emplace_back(m, y);
        }
    }
    return std::max(to_double(best), slack_max);
}

}  // namespace

double max_abs_value(const PiecewisePoly& p, const Rational& lo, const Rational& hi) {
    if (lo > hi) throw InvalidInput("empty interval");
    if (lo < p.domain_lo() || hi > p.domain_hi()) throw InvalidInput("interval outside domain");
    if (lo == hi) return std::abs(to_double(p.eval(lo)));
    double best = 0.0;
    const auto& b = p.breakpoints();
    for (std::size_t j = 0; j + 1 < b.size(); ++j) {
        const Rational a = std::max(lo, b[j]);
        const Rational z = std::min(hi, b[j + 1]);
        if (a > z) continue;
        best = std::max(best, segment_max_abs(p.piece(j), a, z));
    }
    return best;
}

double lipschitz_bound(const PiecewisePoly& p, const Rational& M) {
    return max_abs_value(p.derivative(), -M, M);
}

}  // namespace torusdecay
