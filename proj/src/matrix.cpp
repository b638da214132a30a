#include "torusdecay/matrix.hpp"

#include <utility>

namespace torusdecay {

RatMat RatMat::identity(std::size_t n) {
    RatMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
}

RatMat RatMat::transpose() const {
    RatMat t(cols, rows);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) t.at(j, i) = at(i, j);
    return t;
}

RatVec RatMat::row(std::size_t i) const {
    return RatVec(a.begin() + static_cast<std::ptrdiff_t>(i * cols),
                  a.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
}

void RatMat::set_row(std::size_t i, const RatVec& v) {
    for (std::size_t j = 0; j < cols; ++j) at(i, j) = v[j];
}

RatMat operator*(const RatMat& x, const RatMat& y) {
    RatMat p(x.rows, y.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t k = 0; k < x.cols; ++k) {
            if (x.at(i, k) == 0) continue;
            for (std::size_t j = 0; j < y.cols; ++j) p.at(i, j) += x.at(i, k) * y.at(k, j);
        }
    return p;
}

IntMat IntMat::identity(std::size_t n) {
    IntMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
}

IntMat IntMat::transpose() const {
    IntMat t(cols, rows);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) t.at(j, i) = at(i, j);
    return t;
}

IntVec IntMat::row(std::size_t i) const {
    return IntVec(a.begin() + static_cast<std::ptrdiff_t>(i * cols),
                  a.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
}

IntMat operator*(const IntMat& x, const IntMat& y) {
    IntMat p(x.rows, y.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t k = 0; k < x.cols; ++k) {
            if (x.at(i, k) == 0) continue;
            for (std::size_t j = 0; j < y.cols; ++j) p.at(i, j) += x.at(i, k) * y.at(k, j);
        }
    return p;
}

RatMat to_rational(const IntMat& m) {
    RatMat r(m.rows, m.cols);
    for (std::size_t k = 0; k < m.a.size(); ++k) r.a[k] = Rational(m.a[k]);
    return r;
}

std::vector<std::size_t> rref_in_place(RatMat& m) {
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < m.cols && r < m.rows; ++c) {
        std::size_t p = r;
        while (p < m.rows && m.at(p, c) == 0) ++p;
        if (p == m.rows) continue;
        if (p != r)
            for (std::size_t j = 0; j < m.cols; ++j) std::swap(m.at(p, j), m.at(r, j));
        const Rational inv = Rational(1) / m.at(r, c);
        for (std::size_t j = c; j < m.cols; ++j) m.at(r, j) *= inv;
        for (std::size_t i = 0; i < m.rows; ++i) {
            if (i == r || m.at(i, c) == 0) continue;
            const Rational f = m.at(i, c);
            for (std::size_t j = c; j < m.cols; ++j) m.at(i, j) -= f * m.at(r, j);
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

std::size_t rank(RatMat m) { return rref_in_place(m).size(); }

RatMat kernel_basis(const RatMat& m) {
    RatMat r = m;
    const auto pivots = rref_in_place(r);
    std::vector<bool> is_pivot(m.cols, false);
    for (auto c : pivots) is_pivot[c] = true;
    RatMat basis(m.cols - pivots.size(), m.cols);
    std::size_t out = 0;
    for (std::size_t f = 0; f < m.cols; ++f) {
        if (is_pivot[f]) continue;
        basis.at(out, f) = 1;
        for (std::size_t pr = 0; pr < pivots.size(); ++pr) basis.at(out, pivots[pr]) = -r.at(pr, f);
        ++out;
    }
    return basis;
}

Rational determinant(RatMat m) {
    if (m.rows != m.cols) throw InvalidInput("determinant of non-square matrix");
    Rational det(1);
    for (std::size_t c = 0; c < m.cols; ++c) {
        std::size_t p = c;
        while (p < m.rows && m.at(p, c) == 0) ++p;
        if (p == m.rows) return Rational(0);
        if (p != c) {
            for (std::size_t j = 0; j < m.cols; ++j) std::swap(m.at(p, j), m.at(c, j));
            det = -det;
        }
        det *= m.at(c, c);
        const Rational inv = Rational(1) / m.at(c, c);
        for (std::size_t i = c + 1; i < m.rows; ++i) {
            if (m.at(i, c) == 0) continue;
            const Rational f = m.at(i, c) * inv;
            for (std::size_t j = c; j < m.cols; ++j) m.at(i, j) -= f * m.at(c, j);
        }
    }
    return det;
}

RatMat inverse(const RatMat& m) {
    if (m.rows != m.cols) throw InvalidInput("inverse of non-square matrix");
    const std::size_t n = m.rows;
    RatMat aug(n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug.at(i, j) = m.at(i, j);
        aug.at(i, n + i) = 1;
    }
    const auto pivots = rref_in_place(aug);
    if (pivots.size() != n || pivots.back() != n - 1)
        throw InvalidInput("matrix is singular");
    RatMat inv(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) inv.at(i, j) = aug.at(i, n + j);
    return inv;
}

Int determinant(IntMat m) {
    if (m.rows != m.cols) throw InvalidInput("determinant of non-square matrix");
    const std::size_t n = m.rows;
    if (n == 0) return Int(1);
    // Bareiss fraction-free elimination
    Int prev(1);
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        std::size_t p = k;
        while (p < n && m.at(p, k) == 0) ++p;
        if (p == n) return Int(0);
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m.at(p, j), m.at(k, j));
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j)
                m.at(i, j) = (m.at(i, j) * m.at(k, k) - m.at(i, k) * m.at(k, j)) / prev;
        prev = m.at(k, k);
    }
    return sign > 0 ? m.at(n - 1, n - 1) : -m.at(n - 1, n - 1);
}

IntMat clear_denominators(const RatMat& m) {
    IntMat z(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        Int d(1);
        for (std::size_t j = 0; j < m.cols; ++j) d = lcm_int(d, denominator(m.at(i, j)));
        if (d == 0) d = 1;
        for (std::size_t j = 0; j < m.cols; ++j) {
            const Rational scaled = m.at(i, j) * Rational(d);
            z.at(i, j) = numerator(scaled);
        }
    }
    return z;
}

namespace {

void add_row_multiple(IntMat& m, std::size_t dst, std::size_t src, const Int& f) {
    for (std::size_t j = 0; j < m.cols; ++j) m.at(dst, j) += f * m.at(src, j);
}

void swap_rows(IntMat& m, std::size_t i, std::size_t k) {
    for (std::size_t j = 0; j < m.cols; ++j) std::swap(m.at(i, j), m.at(k, j));
}

void negate_row(IntMat& m, std::size_t i) {
    for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) = -m.at(i, j);
}

} // namespace

IntMat hnf(const IntMat& m, IntMat* transform) {
    IntMat h = m;
    IntMat t = IntMat::identity(m.rows);
    std::size_t r = 0;
    for (std::size_t c = 0; c < h.cols && r < h.rows; ++c) {
        // Euclid on column c, rows >= r, until at most one nonzero remains.
        while (true) {
            std::size_t best = h.rows;
            for (std::size_t i = r; i < h.rows; ++i) {
                if (h.at(i, c) == 0) continue;
                if (best == h.rows || abs(h.at(i, c)) < abs(h.at(best, c))) best = i;
            }
            if (best == h.rows) break; // column is zero below r
            bool reduced_any = false;
            for (std::size_t i = r; i < h.rows; ++i) {
                if (i == best || h.at(i, c) == 0) continue;
                const Int q = floor_div(h.at(i, c), h.at(best, c));
                if (q != 0) {
                    add_row_multiple(h, i, best, -q);
                    add_row_multiple(t, i, best, -q);
                }
                if (h.at(i, c) != 0) reduced_any = true;
            }
            if (!reduced_any) {
                if (best != r) {
                    swap_rows(h, r, best);
                    swap_rows(t, r, best);
                }
                if (h.at(r, c) < 0) {
                    negate_row(h, r);
                    negate_row(t, r);
                }
                for (std::size_t i = 0; i < r; ++i) {
                    const Int q = floor_div(h.at(i, c), h.at(r, c));
                    if (q != 0) {
                        add_row_multiple(h, i, r, -q);
                        add_row_multiple(t, i, r, -q);
                    }
                }
                ++r;
                break;
            }
        }
    }
    if (transform) *transform = t;
    return h;
}

IntMat hnf_trimmed(const IntMat& m) {
    IntMat h = hnf(m);
    std::size_t nz = 0;
    for (std::size_t i = 0; i < h.rows; ++i) {
        bool zero = true;
        for (std::size_t j = 0; j < h.cols; ++j)
            if (h.at(i, j) != 0) { zero = false; break; }
        if (!zero) nz = i + 1;
    }
    IntMat out(nz, h.cols);
    for (std::size_t i = 0; i < nz; ++i)
        for (std::size_t j = 0; j < h.cols; ++j) out.at(i, j) = h.at(i, j);
    return out;
}

namespace {

// Column operation helpers for the Smith form; the v factor accumulates the
// inverse operations so that u * d * v stays equal to the input throughout.
void snf_swap_rows(IntMat& d, IntMat& u, std::size_t i, std::size_t k) {
    swap_rows(d, i, k);
    // d <- P d compensated by u <- u P (P is its own inverse, acting on columns)
    for (std::size_t r = 0; r < u.rows; ++r) std::swap(u.at(r, i), u.at(r, k));
}

void snf_swap_cols(IntMat& d, IntMat& v, std::size_t j, std::size_t k) {
    for (std::size_t r = 0; r < d.rows; ++r) std::swap(d.at(r, j), d.at(r, k));
    swap_rows(v, j, k);
}

void snf_add_row(IntMat& d, IntMat& u, std::size_t dst, std::size_t src, const Int& f) {
    add_row_multiple(d, dst, src, f);
    // d <- E d with E = I + f e_dst e_src^T; u <- u E^{-1} subtracts f * col dst from col src
    for (std::size_t r = 0; r < u.rows; ++r) u.at(r, src) -= f * u.at(r, dst);
}

void snf_add_col(IntMat& d, IntMat& v, std::size_t dst, std::size_t src, const Int& f) {
    for (std::size_t r = 0; r < d.rows; ++r) d.at(r, dst) += f * d.at(r, src);
    // d <- d F with F = I + f e_src e_dst^T; v <- F^{-1} v subtracts f * row dst from row src
    for (std::size_t c = 0; c < v.cols; ++c) v.at(src, c) -= f * v.at(dst, c);
}

void snf_negate_row(IntMat& d, IntMat& u, std::size_t i) {
    negate_row(d, i);
    for (std::size_t r = 0; r < u.rows; ++r) u.at(r, i) = -u.at(r, i);
}

} // namespace

SmithResult smith_normal_form(const IntMat& m) {
    SmithResult res;
    res.u = IntMat::identity(m.rows);
    res.v = IntMat::identity(m.cols);
    res.d = m;
    IntMat& d = res.d;
    const std::size_t bound = std::min(m.rows, m.cols);

    bool exhausted = false;
    for (std::size_t t = 0; t < bound && !exhausted; ++t) {
        while (true) {
            // Re-select the smallest nonzero entry of the trailing submatrix as
            // the pivot before every sweep. Eliminating against a stale pivot
            // lets quotients compound and entry sizes explode; with a global
            // minimum the quotients stay Euclid-sized and the minimum strictly
            // decreases whenever a sweep leaves a remainder behind.
            std::size_t pi = d.rows, pj = d.cols;
            for (std::size_t i = t; i < d.rows; ++i)
                for (std::size_t j = t; j < d.cols; ++j) {
                    if (d.at(i, j) == 0) continue;
                    if (pi == d.rows || abs(d.at(i, j)) < abs(d.at(pi, pj))) { pi = i; pj = j; }
                }
            if (pi == d.rows) { exhausted = true; break; } // submatrix is zero
            if (pi != t) snf_swap_rows(d, res.u, t, pi);
            if (pj != t) snf_swap_cols(d, res.v, t, pj);

            bool dirty = false;
            for (std::size_t i = t + 1; i < d.rows; ++i) {
                if (d.at(i, t) == 0) continue;
                const Int q = floor_div(d.at(i, t), d.at(t, t));
                if (q != 0) snf_add_row(d, res.u, i, t, -q);
                if (d.at(i, t) != 0) dirty = true; // remainder stays put; next sweep picks it up
            }
            for (std::size_t j = t + 1; j < d.cols; ++j) {
                if (d.at(t, j) == 0) continue;
                const Int q = floor_div(d.at(t, j), d.at(t, t));
                if (q != 0) snf_add_col(d, res.v, j, t, -q);
                if (d.at(t, j) != 0) dirty = true;
            }
            if (dirty) continue;
            // divisibility: pivot must divide every remaining entry. Folding an
            // offending row into row t leaves a nonzero remainder on the next
            // sweep, which strictly shrinks the pivot.
            bool divides = true;
            for (std::size_t i = t + 1; i < d.rows && divides; ++i)
                for (std::size_t j = t + 1; j < d.cols && divides; ++j)
                    if (d.at(i, j) % d.at(t, t) != 0) {
                        snf_add_row(d, res.u, t, i, Int(1));
                        divides = false;
                    }
            if (divides) break;
        }
        if (exhausted) break;
        if (d.at(t, t) < 0) snf_negate_row(d, res.u, t);
    }
    return res;
}

IntMat unimodular_inverse(const IntMat& m) {
    const Int det = determinant(m);
    if (det != 1 && det != -1) throw InvalidInput("matrix is not unimodular");
    const RatMat inv = inverse(to_rational(m));
    IntMat z(inv.rows, inv.cols);
    for (std::size_t k = 0; k < inv.a.size(); ++k) {
        if (denominator(inv.a[k]) != 1) throw InvalidInput("matrix is not unimodular");
        z.a[k] = numerator(inv.a[k]);
    }
    return z;
}

RatVec mat_vec(const RatMat& m, const RatVec& x) {
    RatVec y(m.rows, Rational(0));
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) y[i] += m.at(i, j) * x[j];
    return y;
}

Rational dot(const RatVec& x, const RatVec& y) {
    Rational s(0);
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
    return s;
}

} // namespace torusdecay
