#include "nsbox/rng.hpp"

#include "nsbox/errors.hpp"

#include <limits>

namespace nsbox {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

RngStream::RngStream(std::uint64_t seed) : state_(mix64(seed + kGolden)) {}

RngStream RngStream::split(std::uint64_t key) const {
    RngStream child(0);
    // Two mixing passes keep sibling streams and parent sequences apart.
    child.state_ = mix64(state_ ^ mix64(key * kGolden + 0x632BE59BD9B4E019ULL));
    return child;
}

std::uint64_t RngStream::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
    if (n == 0)
        throw DomainError("uniform_below: n must be positive");
    if ((n & (n - 1)) == 0)
        return next_u64() & (n - 1);
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r < limit) return r % n;
    }
}

Integer RngStream::uniform_below_big(const Integer& n) {
    if (n <= 0)
        throw DomainError("uniform_below_big: n must be positive");
    if (n <= std::numeric_limits<std::uint64_t>::max())
        return Integer(uniform_below(n.convert_to<std::uint64_t>()));
    const std::size_t bits = boost::multiprecision::msb(n) + 1;
    const std::size_t words = (bits + 63) / 64;
    for (;;) {
        Integer v = 0;
        for (std::size_t i = 0; i < words; ++i)
            v = (v << 64) | Integer(next_u64());
        v >>= static_cast<unsigned>(words * 64 - bits);
        if (v < n) return v;
    }
}

bool RngStream::bernoulli(const Rational& p) {
    if (p < 0 || p > 1)
        throw DomainError("bernoulli: p must lie in [0,1]");
    if (p == 0) return false;
    if (p == 1) return true;
    return uniform_below_big(denominator(p)) < numerator(p);
}

std::size_t RngStream::categorical(const std::vector<Rational>& probs) {
    Integer den = 1;
    for (const Rational& p : probs)
        den = boost::multiprecision::lcm(den, denominator(p));
    const Integer u = uniform_below_big(den);
    Integer acc = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += numerator(probs[i]) * (den / denominator(probs[i]));
        if (u < acc) return i;
    }
    throw DomainError("categorical: weights do not sum to 1");
}

} // namespace nsbox
