#include "nsbox/distribution.hpp"
#include "nsbox/errors.hpp"

#include <vector>

namespace nsbox {

namespace {

using Row = std::vector<Rational>;

// Incremental row reduction: keeps the indices of a maximal linearly
// independent subset of the given rows.
std::vector<std::size_t> independent_rows(const std::vector<Row>& rows) {
    std::vector<Row> basis;
    std::vector<std::size_t> pivot_col;
    std::vector<std::size_t> kept;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Row v = rows[r];
        for (std::size_t k = 0; k < basis.size(); ++k) {
            const Rational& coeff = v[pivot_col[k]];
            if (coeff != 0) {
                const Rational f = coeff; // basis rows are pivot-normalized
                for (std::size_t j = 0; j < v.size(); ++j)
                    v[j] -= f * basis[k][j];
            }
        }
        std::size_t pc = v.size();
        for (std::size_t j = 0; j < v.size(); ++j)
            if (v[j] != 0) { pc = j; break; }
        if (pc == v.size()) continue; // dependent
        const Rational inv = v[pc];
        for (std::size_t j = 0; j < v.size(); ++j) v[j] /= inv;
        basis.push_back(std::move(v));
        pivot_col.push_back(pc);
        kept.push_back(r);
    }
    return kept;
}

// Solves M x = b for symmetric positive-definite M by Gaussian elimination.
std::vector<Rational> solve_spd(std::vector<Row> m, std::vector<Rational> b) {
    const std::size_t n = m.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && m[piv][col] == 0) ++piv;
        if (piv == n) throw DomainError("singular projection system");
        std::swap(m[piv], m[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            if (m[r][col] == 0) continue;
            const Rational f = m[r][col] / m[col][col];
            for (std::size_t j = col; j < n; ++j) m[r][j] -= f * m[col][j];
            b[r] -= f * b[col];
        }
    }
    std::vector<Rational> x(n, Rational(0));
    for (std::size_t i = n; i-- > 0;) {
        Rational s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= m[i][j] * x[j];
        x[i] = s / m[i][i];
    }
    return x;
}

struct ConstraintSystem {
    std::vector<Row> rows;
    std::vector<Rational> rhs;
};

// Normalization plus both marginal-equality families, as affine equalities
// over the flattened table.
ConstraintSystem build_constraints(int X, int Y, int A, int B) {
    const std::size_t n = static_cast<std::size_t>(X) * Y * A * B;
    auto idx = [&](int x, int y, int a, int b) {
        return ((static_cast<std::size_t>(x) * Y + y) * A + a) * B + b;
    };
    ConstraintSystem sys;
    for (int x = 0; x < X; ++x)
        for (int y = 0; y < Y; ++y) {
            Row row(n, Rational(0));
            for (int a = 0; a < A; ++a)
                for (int b = 0; b < B; ++b) row[idx(x, y, a, b)] = 1;
            sys.rows.push_back(std::move(row));
            sys.rhs.emplace_back(1);
        }
    for (int x = 0; x < X; ++x)
        for (int a = 0; a < A; ++a)
            for (int y = 1; y < Y; ++y) {
                Row row(n, Rational(0));
                for (int b = 0; b < B; ++b) {
                    row[idx(x, y, a, b)] = 1;
                    row[idx(x, 0, a, b)] -= 1;
                }
                sys.rows.push_back(std::move(row));
                sys.rhs.emplace_back(0);
            }
    for (int y = 0; y < Y; ++y)
        for (int b = 0; b < B; ++b)
            for (int x = 1; x < X; ++x) {
                Row row(n, Rational(0));
                for (int a = 0; a < A; ++a) {
                    row[idx(x, y, a, b)] = 1;
                    row[idx(0, y, a, b)] -= 1;
                }
                sys.rows.push_back(std::move(row));
                sys.rhs.emplace_back(0);
            }
    return sys;
}

// Euclidean projection of p onto {v : A v = c}, with A linearly independent.
std::vector<Rational> project(const std::vector<Row>& a,
                              const std::vector<Rational>& c,
                              const std::vector<Rational>& p) {
    const std::size_t r = a.size(), n = p.size();
    std::vector<Row> gram(r, Row(r, Rational(0)));
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = i; j < r; ++j) {
            Rational s = 0;
            for (std::size_t k = 0; k < n; ++k)
                if (a[i][k] != 0 && a[j][k] != 0) s += a[i][k] * a[j][k];
            gram[i][j] = s;
            gram[j][i] = s;
        }
    std::vector<Rational> defect(r, Rational(0));
    for (std::size_t i = 0; i < r; ++i) {
        Rational s = c[i];
        for (std::size_t k = 0; k < n; ++k)
            if (a[i][k] != 0) s -= a[i][k] * p[k];
        defect[i] = s;
    }
    const std::vector<Rational> lambda = solve_spd(gram, defect);
    std::vector<Rational> out = p;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t k = 0; k < n; ++k)
            if (a[i][k] != 0) out[k] += lambda[i] * a[i][k];
    return out;
}

Integer round_to_multiple(const Rational& v, const Integer& m) {
    // nearest integer to v*m, ties away from zero
    const Rational t = v * m;
    const Integer num = numerator(t), den = denominator(t);
    Integer q = num / den, rem = num % den;
    if (rem < 0) { rem += den; q -= 1; }
    if (2 * rem >= den) q += 1;
    return q;
}

} // namespace

ConditionalDistribution rationalize(const FloatTable& table,
                                    const Integer& max_denominator,
                                    double tolerance) {
    const int X = table.x_size, Y = table.y_size, A = table.a_size,
              B = table.b_size;
    if (X < 1 || Y < 1 || A < 1 || B < 1)
        throw ShapeError("rationalize: sizes must be positive");
    const std::size_t n = static_cast<std::size_t>(X) * Y * A * B;
    if (table.probs.size() != n)
        throw ShapeError("rationalize: table length does not match sizes");
    if (n > 4096)
        throw ResourceCapError("rationalize: table too large for exact projection (" +
                               std::to_string(n) + " entries)");
    if (max_denominator < 1)
        throw DomainError("rationalize: max_denominator must be positive");
    if (!(tolerance > 0))
        throw DomainError("rationalize: tolerance must be positive");

    std::vector<Rational> input(n);
    for (std::size_t i = 0; i < n; ++i)
        input[i] = rational_from_double(table.probs[i]);
    const Rational tol = rational_from_double(tolerance);

    const ConstraintSystem sys = build_constraints(X, Y, A, B);
    const std::vector<std::size_t> kept = independent_rows(sys.rows);
    std::vector<Row> a;
    std::vector<Rational> c;
    a.reserve(kept.size());
    for (std::size_t k : kept) {
        a.push_back(sys.rows[k]);
        c.push_back(sys.rhs[k]);
    }

    std::vector<Integer> denominators;
    for (Integer m = 2; m < max_denominator; m *= 2) denominators.push_back(m);
    denominators.push_back(max_denominator);

    const Rational uniform(1, static_cast<long long>(A) * B);
    for (const Integer& m : denominators) {
        std::vector<Rational> p(n);
        for (std::size_t i = 0; i < n; ++i)
            p[i] = Rational(round_to_multiple(input[i], m), m);

        std::vector<Rational> proj = project(a, c, p);

        Rational w = 0; // smallest uniform-mixing weight restoring >= 0
        for (const Rational& v : proj)
            if (v < 0) {
                const Rational need = -v / (uniform - v);
                if (need > w) w = need;
            }
        if (w > 0)
            for (Rational& v : proj) v = (1 - w) * v + w * uniform;

        Rational worst = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const Rational diff = boost::multiprecision::abs(proj[i] - input[i]);
            if (diff > worst) worst = diff;
        }
        if (worst <= tol) {
            ConditionalDistribution out(X, Y, A, B);
            std::size_t i = 0;
            for (int x = 0; x < X; ++x)
                for (int y = 0; y < Y; ++y)
                    for (int aa = 0; aa < A; ++aa)
                        for (int bb = 0; bb < B; ++bb)
                            out.set(x, y, aa, bb, proj[i++]);
            return out;
        }
    }
    throw RationalizeError(
        "rationalize: no denominator up to " + max_denominator.str() +
        " lands within tolerance; try a larger max denominator");
}

} // namespace nsbox
