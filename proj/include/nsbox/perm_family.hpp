#pragma once

#include "nsbox/distribution.hpp"
#include "nsbox/rng.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace nsbox {

/// Uniform-output permutation system of order d: on inputs (x,y) the left
/// output a is uniform on S_d = {0..d-1} and the right output is f_xy(a)
/// for an input-indexed permutation f_xy.
///
/// Families are either table-backed (every f_xy materialized and validated)
/// or rule-backed (f_xy evaluated per point). Rule backing exists because
/// cascade-generated input alphabets grow multiplicatively and cannot be
/// materialized.
class PermutationFamily {
public:
    using Rule = std::function<int(std::uint64_t x, std::uint64_t y, int a)>;

    /// rows[x*y_size + y] lists f_xy as images of 0..d-1. Rejects rows that
    /// are not bijections, naming the offending (x,y).
    static PermutationFamily from_table(int d, std::uint64_t x_size,
                                        std::uint64_t y_size,
                                        std::vector<std::vector<int>> rows);

    static PermutationFamily from_rule(int d, std::uint64_t x_size,
                                       std::uint64_t y_size, Rule rule);

    int order() const { return d_; }
    std::uint64_t x_size() const { return xs_; }
    std::uint64_t y_size() const { return ys_; }
    bool table_backed() const { return !rows_.empty(); }

    /// f_xy(a)
    int apply(std::uint64_t x, std::uint64_t y, int a) const;
    /// f_xy^{-1}(b)
    int apply_inverse(std::uint64_t x, std::uint64_t y, int b) const;
    /// Materializes one f_xy as an image vector.
    std::vector<int> permutation(std::uint64_t x, std::uint64_t y) const;

private:
    PermutationFamily() = default;

    int d_ = 0;
    std::uint64_t xs_ = 0, ys_ = 0;
    std::vector<std::vector<int>> rows_;
    Rule rule_;
};

/// The non-local box: d = 2, binary inputs, f_xy = flip iff xy = 1.
PermutationFamily nlb();

/// Full table P(ab|xy) = 1/d on the graph of f_xy. Refuses families whose
/// table would exceed entry_cap entries.
ConditionalDistribution to_distribution(const PermutationFamily& family,
                                        std::size_t entry_cap = std::size_t(1)
                                                                << 24);

/// Single-use handle: one draw per instance, mirroring the resource
/// semantics of a physical system. A second invoke throws ConsumedError.
class SystemInstance {
public:
    explicit SystemInstance(const PermutationFamily& family)
        : family_(&family) {}
    explicit SystemInstance(PermutationFamily&&) = delete; // no temporaries

    std::pair<int, int> invoke(std::uint64_t x, std::uint64_t y,
                               RngStream& rng);
    bool consumed() const { return consumed_; }

private:
    const PermutationFamily* family_;
    bool consumed_ = false;
};

/// Convenience one-shot draw through a fresh instance.
std::pair<int, int> sample_family(const PermutationFamily& family,
                                  std::uint64_t x, std::uint64_t y,
                                  RngStream& rng);

} // namespace nsbox
