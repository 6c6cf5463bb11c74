#include "nsbox/perm_family.hpp"

#include "nsbox/errors.hpp"

#include <string>

namespace nsbox {

PermutationFamily PermutationFamily::from_table(
    int d, std::uint64_t x_size, std::uint64_t y_size,
    std::vector<std::vector<int>> rows) {
    if (d < 2) throw DomainError("permutation family needs order >= 2");
    if (x_size == 0 || y_size == 0)
        throw ShapeError("permutation family needs nonempty input sets");
    if (rows.size() != x_size * y_size)
        throw ShapeError("permutation table has wrong row count");
    for (std::uint64_t x = 0; x < x_size; ++x)
        for (std::uint64_t y = 0; y < y_size; ++y) {
            const auto& row = rows[x * y_size + y];
            const std::string where =
                " at (x=" + std::to_string(x) + ",y=" + std::to_string(y) + ")";
            if (row.size() != static_cast<std::size_t>(d))
                throw ShapeError("permutation row of wrong length" + where);
            std::vector<bool> seen(d, false);
            for (int v : row) {
                if (v < 0 || v >= d || seen[v])
                    throw InvalidPermutationError(
                        "row is not a bijection of S_" + std::to_string(d) +
                        where);
                seen[v] = true;
            }
        }
    PermutationFamily f;
    f.d_ = d;
    f.xs_ = x_size;
    f.ys_ = y_size;
    f.rows_ = std::move(rows);
    return f;
}

PermutationFamily PermutationFamily::from_rule(int d, std::uint64_t x_size,
                                               std::uint64_t y_size,
                                               Rule rule) {
    if (d < 2) throw DomainError("permutation family needs order >= 2");
    if (x_size == 0 || y_size == 0)
        throw ShapeError("permutation family needs nonempty input sets");
    if (!rule) throw DomainError("rule-backed family needs a rule");
    PermutationFamily f;
    f.d_ = d;
    f.xs_ = x_size;
    f.ys_ = y_size;
    f.rule_ = std::move(rule);
    return f;
}

int PermutationFamily::apply(std::uint64_t x, std::uint64_t y, int a) const {
    if (x >= xs_ || y >= ys_ || a < 0 || a >= d_)
        throw ShapeError("permutation family input out of range");
    if (table_backed()) return rows_[x * ys_ + y][a];
    return rule_(x, y, a);
}

int PermutationFamily::apply_inverse(std::uint64_t x, std::uint64_t y,
                                     int b) const {
    if (x >= xs_ || y >= ys_ || b < 0 || b >= d_)
        throw ShapeError("permutation family input out of range");
    if (table_backed()) {
        const auto& row = rows_[x * ys_ + y];
        for (int a = 0; a < d_; ++a)
            if (row[a] == b) return a;
    } else {
        for (int a = 0; a < d_; ++a)
            if (rule_(x, y, a) == b) return a;
    }
    throw InvalidPermutationError("value has no preimage; rule is not onto");
}

std::vector<int> PermutationFamily::permutation(std::uint64_t x,
                                                std::uint64_t y) const {
    std::vector<int> row(d_);
    for (int a = 0; a < d_; ++a) row[a] = apply(x, y, a);
    return row;
}

PermutationFamily nlb() {
    return PermutationFamily::from_rule(
        2, 2, 2, [](std::uint64_t x, std::uint64_t y, int a) {
            return static_cast<int>((static_cast<std::uint64_t>(a) ^ (x & y)) &
                                    1u);
        });
}

ConditionalDistribution to_distribution(const PermutationFamily& family,
                                        std::size_t entry_cap) {
    const int d = family.order();
    const std::uint64_t xs = family.x_size(), ys = family.y_size();
    const std::uint64_t entries =
        xs * ys * static_cast<std::uint64_t>(d) * static_cast<std::uint64_t>(d);
    if (entries > entry_cap)
        throw ResourceCapError("to_distribution: " + std::to_string(entries) +
                               " entries exceed the enumeration cap");
    ConditionalDistribution p(static_cast<int>(xs), static_cast<int>(ys), d, d);
    const Rational w(1, d);
    for (std::uint64_t x = 0; x < xs; ++x)
        for (std::uint64_t y = 0; y < ys; ++y)
            for (int a = 0; a < d; ++a)
                p.set(static_cast<int>(x), static_cast<int>(y), a,
                      family.apply(x, y, a), w);
    return p;
}

std::pair<int, int> SystemInstance::invoke(std::uint64_t x, std::uint64_t y,
                                           RngStream& rng) {
    if (consumed_)
        throw ConsumedError("system instance already consumed");
    consumed_ = true;
    const int a =
        static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(
            family_->order())));
    return {a, family_->apply(x, y, a)};
}

std::pair<int, int> sample_family(const PermutationFamily& family,
                                  std::uint64_t x, std::uint64_t y,
                                  RngStream& rng) {
    SystemInstance inst(family);
    return inst.invoke(x, y, rng);
}

} // namespace nsbox
