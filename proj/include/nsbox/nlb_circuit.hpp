#pragma once

#include "nsbox/distribution.hpp"
#include "nsbox/perm_family.hpp"
#include "nsbox/rng.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace nsbox {

/// The distributed Boolean function behind an order-2 family:
/// h(x,y) = f_xy(0), i.e. 1 exactly when f_xy is the flip.
struct BooleanProfile {
    std::uint64_t x_size = 0, y_size = 0;
    std::vector<std::uint8_t> h; // x*y_size + y

    std::uint8_t at(std::uint64_t x, std::uint64_t y) const {
        return h[x * y_size + y];
    }
};

/// Throws DomainError unless the family has order 2; refuses profiles
/// larger than entry_cap.
BooleanProfile profile(const PermutationFamily& d2,
                       std::size_t entry_cap = std::size_t(1) << 24);

/// One non-local box worth of work: the XOR share of alpha(x) * beta(y).
struct Monomial {
    std::vector<std::uint8_t> alpha; // over X
    std::vector<std::uint8_t> beta;  // over Y
};

/// XOR-of-products realization of h plus one shared mask bit:
///   a = r ^ (xor of u_j) ^ alice_local(x)
///   b = r ^ (xor of v_j) ^ bob_local(y)
/// with u_j uniform, v_j = u_j ^ alpha_j(x) beta_j(y), r shared uniform.
/// Terms with a constant side never spend a box: they fold into the local
/// XOR corrections instead.
struct NLBCircuit {
    std::uint64_t x_size = 0, y_size = 0;
    std::vector<Monomial> monomials;
    std::vector<std::uint8_t> alice_local; // over X
    std::vector<std::uint8_t> bob_local;   // over Y

    std::size_t nlb_count() const { return monomials.size(); }

    /// h reconstructed from the pieces (for checks).
    std::uint8_t h_at(std::uint64_t x, std::uint64_t y) const;
};

/// Indicator decomposition over the smaller input side: at most
/// min(|X|,|Y|) monomials survive after constant columns are folded away.
NLBCircuit decompose(const BooleanProfile& h);

NLBCircuit compile_d2(const PermutationFamily& d2,
                      std::size_t entry_cap = std::size_t(1) << 24);

/// Samples one circuit evaluation: every box consumed once, mask shared.
std::pair<int, int> eval_circuit(const NLBCircuit& circuit, std::uint64_t x,
                                 std::uint64_t y, RngStream& stream);

/// Brute-force oracle: enumerates all 2^(gates+1) randomness strings.
/// Refuses circuits with more than gate_cap gates.
ConditionalDistribution circuit_exact_distribution(const NLBCircuit& circuit,
                                                   int gate_cap = 20);

} // namespace nsbox
