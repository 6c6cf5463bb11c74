#pragma once

#include "nsbox/distribution.hpp"
#include "nsbox/perm_family.hpp"

#include <cstdint>
#include <vector>

namespace nsbox {

/// Nested partitions of S_d that carry a rational non-signaling P:
///   per (a,x) a block A_ax with |A_ax| = d*P(a|x), partitioning S_d;
///   per (a,b,x,y) a sub-block A_abxy inside A_ax with |A_abxy| = d*P(ab|xy);
/// mirrored on Bob's side with the roles of a and b swapped.
///
/// The construction is canonical: blocks are contiguous intervals in
/// increasing output order, sub-blocks contiguous inside their block (the
/// construction admits any choice; a fixed one keeps results reproducible).
class Partitioning {
public:
    struct Range {
        std::int64_t lo = 0, hi = 0;
        std::int64_t size() const { return hi - lo; }
        bool contains(std::int64_t v) const { return lo <= v && v < hi; }
    };

    Partitioning(const ConditionalDistribution& p, std::int64_t d);

    std::int64_t order() const { return d_; }

    Range a_block(int x, int a) const;
    Range b_block(int y, int b) const;
    Range a_sub(int x, int y, int a, int b) const;
    Range b_sub(int x, int y, int a, int b) const;

    /// Index of the block containing v (the decode rule).
    int decode_a(int x, std::int64_t v) const;
    int decode_b(int y, std::int64_t v) const;

private:
    std::int64_t d_;
    int xs_, ys_, as_, bs_;
    std::vector<std::int64_t> a_pref_;     // (xs, as+1)
    std::vector<std::int64_t> b_pref_;     // (ys, bs+1)
    std::vector<std::int64_t> a_sub_pref_; // (xs*ys*as, bs+1), absolute
    std::vector<std::int64_t> b_sub_pref_; // (xs*ys*bs, as+1), absolute
};

/// Smallest d making every d*P(ab|xy) an integer: the lcm of the entry
/// denominators (entries are stored in lowest terms).
Integer compute_order(const ConditionalDistribution& p);

Partitioning build_partitions(const ConditionalDistribution& p,
                              std::int64_t d);

/// Permutation family of order d whose f_xy is the union of the canonical
/// order-preserving bijections A_abxy -> B_abxy.
PermutationFamily build_family(const ConditionalDistribution& p,
                               std::int64_t d,
                               const Partitioning& partitioning);

enum class Side { alice, bob };

struct Embedding {
    ConditionalDistribution source;
    std::int64_t order;
    Partitioning partitioning;
    PermutationFamily family;
};

/// Validates P, computes the order (promoted to at least 2 so the family
/// is a genuine bipartite system), and assembles partitions, family, and
/// decode rules. Throws SignalingError for signaling or unnormalized
/// input and ResourceCapError when the order exceeds order_cap (the
/// message names the computed order).
Embedding embed(const ConditionalDistribution& p,
                std::int64_t order_cap = 1'000'000);

/// Block lookup for one raw output symbol.
int decode(const Embedding& e, Side side, std::int64_t raw, int input);

/// Walks the graph of every f_xy, decodes both ends, and accumulates 1/d
/// per point. Equal to the source distribution exactly, by construction.
ConditionalDistribution exact_embedded_distribution(const Embedding& e);

} // namespace nsbox
