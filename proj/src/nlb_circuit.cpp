#include "nsbox/nlb_circuit.hpp"

#include "nsbox/errors.hpp"

#include <string>

namespace nsbox {

BooleanProfile profile(const PermutationFamily& d2, std::size_t entry_cap) {
    if (d2.order() != 2)
        throw DomainError("profile: family must have order 2");
    const std::uint64_t xs = d2.x_size(), ys = d2.y_size();
    if (xs * ys > entry_cap)
        throw ResourceCapError("profile: " + std::to_string(xs * ys) +
                               " input pairs exceed the enumeration cap");
    BooleanProfile out;
    out.x_size = xs;
    out.y_size = ys;
    out.h.resize(xs * ys);
    for (std::uint64_t x = 0; x < xs; ++x)
        for (std::uint64_t y = 0; y < ys; ++y)
            out.h[x * ys + y] = static_cast<std::uint8_t>(d2.apply(x, y, 0));
    return out;
}

std::uint8_t NLBCircuit::h_at(std::uint64_t x, std::uint64_t y) const {
    std::uint8_t v = static_cast<std::uint8_t>(alice_local[x] ^ bob_local[y]);
    for (const Monomial& m : monomials)
        v ^= static_cast<std::uint8_t>(m.alpha[x] & m.beta[y]);
    return v;
}

NLBCircuit decompose(const BooleanProfile& h) {
    NLBCircuit c;
    c.x_size = h.x_size;
    c.y_size = h.y_size;
    c.alice_local.assign(h.x_size, 0);
    c.bob_local.assign(h.y_size, 0);

    const bool over_y = h.y_size <= h.x_size;
    const std::uint64_t outer = over_y ? h.y_size : h.x_size;
    const std::uint64_t inner = over_y ? h.x_size : h.y_size;

    for (std::uint64_t o = 0; o < outer; ++o) {
        // slice of h with the outer input pinned to o
        std::vector<std::uint8_t> slice(inner);
        bool any0 = false, any1 = false;
        for (std::uint64_t i = 0; i < inner; ++i) {
            slice[i] = over_y ? h.at(i, o) : h.at(o, i);
            (slice[i] ? any1 : any0) = true;
        }
        if (!any1) continue; // contributes nothing
        if (!any0) {
            // constant-1 slice: a purely local term on the pinned side
            (over_y ? c.bob_local[o] : c.alice_local[o]) ^= 1;
            continue;
        }
        std::vector<std::uint8_t> indicator(outer, 0);
        indicator[o] = 1;
        if (outer == 1) {
            // indicator is the constant 1: fold the slice into the other
            // side's local XOR instead of spending boxes
            auto& local = over_y ? c.alice_local : c.bob_local;
            for (std::uint64_t i = 0; i < inner; ++i) local[i] ^= slice[i];
            continue;
        }
        if (over_y)
            c.monomials.push_back({std::move(slice), std::move(indicator)});
        else
            c.monomials.push_back({std::move(indicator), std::move(slice)});
    }
    return c;
}

NLBCircuit compile_d2(const PermutationFamily& d2, std::size_t entry_cap) {
    return decompose(profile(d2, entry_cap));
}

std::pair<int, int> eval_circuit(const NLBCircuit& circuit, std::uint64_t x,
                                 std::uint64_t y, RngStream& stream) {
    RngStream mask = stream.split(0);
    const int r = static_cast<int>(mask.uniform_below(2));
    int ua = 0, vb = 0;
    for (std::size_t j = 0; j < circuit.monomials.size(); ++j) {
        const Monomial& m = circuit.monomials[j];
        RngStream gate = stream.split(1 + j);
        const int u = static_cast<int>(gate.uniform_below(2));
        const int v = u ^ (m.alpha[x] & m.beta[y]);
        ua ^= u;
        vb ^= v;
    }
    return {r ^ ua ^ circuit.alice_local[x], r ^ vb ^ circuit.bob_local[y]};
}

ConditionalDistribution circuit_exact_distribution(const NLBCircuit& circuit,
                                                   int gate_cap) {
    const int g = static_cast<int>(circuit.nlb_count());
    if (g > gate_cap)
        throw ResourceCapError("circuit_exact_distribution: " +
                               std::to_string(g) +
                               " gates exceed the enumeration cap");
    const std::uint64_t xs = circuit.x_size, ys = circuit.y_size;
    ConditionalDistribution out(static_cast<int>(xs), static_cast<int>(ys), 2,
                                2);
    const std::uint64_t strings = std::uint64_t(1) << (g + 1);
    const Rational w(1, Integer(strings));
    for (std::uint64_t x = 0; x < xs; ++x)
        for (std::uint64_t y = 0; y < ys; ++y) {
            Rational acc[2][2] = {{0, 0}, {0, 0}};
            for (std::uint64_t bits = 0; bits < strings; ++bits) {
                const int r = static_cast<int>(bits & 1);
                int ua = 0, vb = 0;
                for (int j = 0; j < g; ++j) {
                    const Monomial& m = circuit.monomials[j];
                    const int u = static_cast<int>((bits >> (j + 1)) & 1);
                    ua ^= u;
                    vb ^= u ^ (m.alpha[x] & m.beta[y]);
                }
                const int a = r ^ ua ^ circuit.alice_local[x];
                const int b = r ^ vb ^ circuit.bob_local[y];
                acc[a][b] += w;
            }
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    out.set(static_cast<int>(x), static_cast<int>(y), a, b,
                            acc[a][b]);
        }
    return out;
}

} // namespace nsbox
