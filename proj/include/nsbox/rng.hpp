#pragma once

#include "nsbox/rational.hpp"

#include <cstdint>
#include <vector>

namespace nsbox {

/// Splittable counter-style PRNG (splitmix64 core).
///
/// Streams form a tree: split(key) derives an independent child stream
/// without advancing the parent. Seeding the same tree path always yields
/// the same sequence, so simulations are reproducible no matter how work
/// is scheduled across threads.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    /// Child stream for the given key; the parent state is untouched.
    RngStream split(std::uint64_t key) const;

    std::uint64_t next_u64();

    /// Unbiased uniform draw from {0, ..., n-1} via rejection.
    std::uint64_t uniform_below(std::uint64_t n);

    /// Big-integer version, still exact.
    Integer uniform_below_big(const Integer& n);

    /// Exact Bernoulli: true with probability p (a rational in [0,1]).
    bool bernoulli(const Rational& p);

    /// Exact categorical draw from rational weights summing to 1.
    std::size_t categorical(const std::vector<Rational>& probs);

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

} // namespace nsbox
