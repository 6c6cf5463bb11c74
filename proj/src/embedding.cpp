#include "nsbox/embedding.hpp"

#include "nsbox/errors.hpp"

#include <algorithm>
#include <string>

namespace nsbox {

namespace {

// d*P(ab|xy) as an integer; throws if d is not a multiple of the entry's
// denominator.
std::int64_t scaled_entry(const Rational& p, std::int64_t d) {
    const Rational t = p * d;
    if (denominator(t) != 1)
        throw ShapeError("probability " + rational_str(p) +
                         " is not a multiple of 1/" + std::to_string(d));
    return numerator(t).convert_to<std::int64_t>();
}

} // namespace

Partitioning::Partitioning(const ConditionalDistribution& p, std::int64_t d)
    : d_(d), xs_(p.x_size()), ys_(p.y_size()), as_(p.a_size()),
      bs_(p.b_size()) {
    if (d < 1) throw DomainError("partitioning order must be positive");

    a_pref_.assign(static_cast<std::size_t>(xs_) * (as_ + 1), 0);
    b_pref_.assign(static_cast<std::size_t>(ys_) * (bs_ + 1), 0);
    a_sub_pref_.assign(static_cast<std::size_t>(xs_) * ys_ * as_ * (bs_ + 1),
                       0);
    b_sub_pref_.assign(static_cast<std::size_t>(xs_) * ys_ * bs_ * (as_ + 1),
                       0);

    // Alice's outer blocks from P(a|x) (y = 0 column; the caller guarantees
    // non-signaling, and the sub-block consistency check below would catch
    // a lie).
    for (int x = 0; x < xs_; ++x) {
        std::int64_t acc = 0;
        for (int a = 0; a < as_; ++a) {
            a_pref_[static_cast<std::size_t>(x) * (as_ + 1) + a] = acc;
            Rational m = 0;
            for (int b = 0; b < bs_; ++b) m += p.at(x, 0, a, b);
            acc += scaled_entry(m, d);
        }
        a_pref_[static_cast<std::size_t>(x) * (as_ + 1) + as_] = acc;
        if (acc != d)
            throw ShapeError("Alice blocks for x=" + std::to_string(x) +
                             " cover " + std::to_string(acc) +
                             " of " + std::to_string(d) + " symbols");
    }
    for (int y = 0; y < ys_; ++y) {
        std::int64_t acc = 0;
        for (int b = 0; b < bs_; ++b) {
            b_pref_[static_cast<std::size_t>(y) * (bs_ + 1) + b] = acc;
            Rational m = 0;
            for (int a = 0; a < as_; ++a) m += p.at(0, y, a, b);
            acc += scaled_entry(m, d);
        }
        b_pref_[static_cast<std::size_t>(y) * (bs_ + 1) + bs_] = acc;
        if (acc != d)
            throw ShapeError("Bob blocks for y=" + std::to_string(y) +
                             " do not cover S_d");
    }

    // Sub-blocks: contiguous inside their outer block, in increasing b on
    // Alice's side and increasing a on Bob's. Non-signaling makes the sizes
    // fill each outer block exactly.
    for (int x = 0; x < xs_; ++x)
        for (int y = 0; y < ys_; ++y) {
            for (int a = 0; a < as_; ++a) {
                const Range blk = a_block(x, a);
                std::int64_t acc = blk.lo;
                const std::size_t base =
                    ((static_cast<std::size_t>(x) * ys_ + y) * as_ + a) *
                    (bs_ + 1);
                for (int b = 0; b < bs_; ++b) {
                    a_sub_pref_[base + b] = acc;
                    acc += scaled_entry(p.at(x, y, a, b), d);
                }
                a_sub_pref_[base + bs_] = acc;
                if (acc != blk.hi)
                    throw ShapeError(
                        "sub-blocks overflow block A(a=" + std::to_string(a) +
                        ",x=" + std::to_string(x) + ") at y=" +
                        std::to_string(y) + "; input is signaling");
            }
            for (int b = 0; b < bs_; ++b) {
                const Range blk = b_block(y, b);
                std::int64_t acc = blk.lo;
                const std::size_t base =
                    ((static_cast<std::size_t>(x) * ys_ + y) * bs_ + b) *
                    (as_ + 1);
                for (int a = 0; a < as_; ++a) {
                    b_sub_pref_[base + a] = acc;
                    acc += scaled_entry(p.at(x, y, a, b), d);
                }
                b_sub_pref_[base + as_] = acc;
                if (acc != blk.hi)
                    throw ShapeError(
                        "sub-blocks overflow block B(b=" + std::to_string(b) +
                        ",y=" + std::to_string(y) + ") at x=" +
                        std::to_string(x) + "; input is signaling");
            }
        }
}

Partitioning::Range Partitioning::a_block(int x, int a) const {
    const std::size_t base = static_cast<std::size_t>(x) * (as_ + 1);
    return {a_pref_[base + a], a_pref_[base + a + 1]};
}

Partitioning::Range Partitioning::b_block(int y, int b) const {
    const std::size_t base = static_cast<std::size_t>(y) * (bs_ + 1);
    return {b_pref_[base + b], b_pref_[base + b + 1]};
}

Partitioning::Range Partitioning::a_sub(int x, int y, int a, int b) const {
    const std::size_t base =
        ((static_cast<std::size_t>(x) * ys_ + y) * as_ + a) * (bs_ + 1);
    return {a_sub_pref_[base + b], a_sub_pref_[base + b + 1]};
}

Partitioning::Range Partitioning::b_sub(int x, int y, int a, int b) const {
    const std::size_t base =
        ((static_cast<std::size_t>(x) * ys_ + y) * bs_ + b) * (as_ + 1);
    return {b_sub_pref_[base + a], b_sub_pref_[base + a + 1]};
}

int Partitioning::decode_a(int x, std::int64_t v) const {
    if (v < 0 || v >= d_) throw ShapeError("decode_a: symbol out of range");
    const auto begin = a_pref_.begin() + static_cast<std::size_t>(x) * (as_ + 1);
    const auto it = std::upper_bound(begin, begin + as_ + 1, v);
    return static_cast<int>(it - begin) - 1;
}

int Partitioning::decode_b(int y, std::int64_t v) const {
    if (v < 0 || v >= d_) throw ShapeError("decode_b: symbol out of range");
    const auto begin = b_pref_.begin() + static_cast<std::size_t>(y) * (bs_ + 1);
    const auto it = std::upper_bound(begin, begin + bs_ + 1, v);
    return static_cast<int>(it - begin) - 1;
}

Integer compute_order(const ConditionalDistribution& p) {
    Integer d = 1;
    for (int x = 0; x < p.x_size(); ++x)
        for (int y = 0; y < p.y_size(); ++y)
            for (int a = 0; a < p.a_size(); ++a)
                for (int b = 0; b < p.b_size(); ++b)
                    d = boost::multiprecision::lcm(
                        d, denominator(p.at(x, y, a, b)));
    return d;
}

Partitioning build_partitions(const ConditionalDistribution& p,
                              std::int64_t d) {
    return Partitioning(p, d);
}

PermutationFamily build_family(const ConditionalDistribution& p,
                               std::int64_t d,
                               const Partitioning& partitioning) {
    const int X = p.x_size(), Y = p.y_size(), A = p.a_size(), B = p.b_size();
    std::vector<std::vector<int>> rows;
    rows.reserve(static_cast<std::size_t>(X) * Y);
    for (int x = 0; x < X; ++x)
        for (int y = 0; y < Y; ++y) {
            std::vector<int> perm(static_cast<std::size_t>(d), -1);
            for (int a = 0; a < A; ++a)
                for (int b = 0; b < B; ++b) {
                    const auto as = partitioning.a_sub(x, y, a, b);
                    const auto bs = partitioning.b_sub(x, y, a, b);
                    if (as.size() != bs.size())
                        throw ShapeError(
                            "partition cardinality mismatch at (x=" +
                            std::to_string(x) + ",y=" + std::to_string(y) +
                            ",a=" + std::to_string(a) + ",b=" +
                            std::to_string(b) + ")");
                    for (std::int64_t i = 0; i < as.size(); ++i)
                        perm[static_cast<std::size_t>(as.lo + i)] =
                            static_cast<int>(bs.lo + i);
                }
            rows.push_back(std::move(perm));
        }
    return PermutationFamily::from_table(static_cast<int>(d),
                                         static_cast<std::uint64_t>(X),
                                         static_cast<std::uint64_t>(Y),
                                         std::move(rows));
}

Embedding embed(const ConditionalDistribution& p, std::int64_t order_cap) {
    const ValidationReport rep = validate(p);
    if (!rep.non_signaling)
        throw SignalingError("embedding requires a non-signaling system");
    if (!rep.ok())
        throw ShapeError("embedding requires a normalized nonnegative table");

    const Integer order_big = compute_order(p);
    if (order_big > order_cap)
        throw ResourceCapError("embedding order d = " + order_big.str() +
                               " exceeds the cap of " +
                               std::to_string(order_cap));
    // Deterministic tables have lcm 1; promote to 2 so the family is a
    // genuine bipartite system.
    const std::int64_t d =
        std::max<std::int64_t>(2, order_big.convert_to<std::int64_t>());

    Partitioning parts = build_partitions(p, d);
    PermutationFamily family = build_family(p, d, parts);
    return Embedding{p, d, std::move(parts), std::move(family)};
}

int decode(const Embedding& e, Side side, std::int64_t raw, int input) {
    if (side == Side::alice) return e.partitioning.decode_a(input, raw);
    return e.partitioning.decode_b(input, raw);
}

ConditionalDistribution exact_embedded_distribution(const Embedding& e) {
    const ConditionalDistribution& src = e.source;
    const int X = src.x_size(), Y = src.y_size(), A = src.a_size(),
              B = src.b_size();
    ConditionalDistribution out(X, Y, A, B);
    std::vector<std::int64_t> counts;
    for (int x = 0; x < X; ++x)
        for (int y = 0; y < Y; ++y) {
            counts.assign(static_cast<std::size_t>(A) * B, 0);
            for (std::int64_t v = 0; v < e.order; ++v) {
                const int a = e.partitioning.decode_a(x, v);
                const int b = e.partitioning.decode_b(
                    y, e.family.apply(static_cast<std::uint64_t>(x),
                                      static_cast<std::uint64_t>(y),
                                      static_cast<int>(v)));
                ++counts[static_cast<std::size_t>(a) * B + b];
            }
            for (int a = 0; a < A; ++a)
                for (int b = 0; b < B; ++b)
                    out.set(x, y, a, b,
                            Rational(counts[static_cast<std::size_t>(a) * B + b],
                                     e.order));
        }
    return out;
}

} // namespace nsbox
