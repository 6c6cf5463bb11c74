#pragma once

#include "nsbox/perm_family.hpp"
#include "nsbox/rational.hpp"
#include "nsbox/rng.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace nsbox {

/// Relabeling bijections around a removed symbol pair (a0, b0):
///   up_a : S_{d-1} -> S_d \ {a0},  a0 |-> d-1, fixed elsewhere
/// and its inverse down_a; same for the b side. They let the order-(d-1)
/// protocol talk about all d parent symbols, with (a0, b0) standing in for
/// d-1 and its image.
struct RelabelPair {
    int d;
    int a0, b0;

    int up_a(int a) const { return a == a0 ? d - 1 : a; }
    int up_b(int b) const { return b == b0 ? d - 1 : b; }
    int down_a(int v) const { return v == d - 1 ? a0 : v; }
    int down_b(int v) const { return v == d - 1 ? b0 : v; }
};

/// The order-(d-1) permutation g for child inputs (x,a0),(y,b0), evaluated
/// at a.
///
/// Equivalent to the two-case relabeling rule
///     g(a) = down_b(f_xy(a0))        if f_xy(a) = b0 and a != a0,
///     g(a) = down_b(f_xy(up_a(a)))   otherwise,
/// totalized: when f_xy(d-1) = b0 the second case would hit the removed
/// value b0 at a = a0; the first case's image is the unique value missing
/// from the rest of the row, so it is used there as well. The result is a
/// permutation of S_{d-1} for every input (verified exhaustively in tests).
int child_permutation_value(const PermutationFamily& parent, std::uint64_t x,
                            int a0, std::uint64_t y, int b0, int a);

/// Order-(d-1) family derived from an order-d parent. Child inputs are the
/// parent input paired with a held symbol, flattened as x*d + a0 (and
/// y*d + b0 on the right).
struct ChildFamily {
    int parent_order = 0;
    PermutationFamily child;

    std::uint64_t child_x(std::uint64_t x, int a0) const {
        return x * static_cast<std::uint64_t>(parent_order) +
               static_cast<std::uint64_t>(a0);
    }
    std::uint64_t child_y(std::uint64_t y, int b0) const {
        return y * static_cast<std::uint64_t>(parent_order) +
               static_cast<std::uint64_t>(b0);
    }
};

/// Builds the child family. Throws DomainError for parents of order 2
/// (that base case is compiled to non-local boxes, not reduced further).
ChildFamily build_child(const PermutationFamily& parent);

/// Held pair at the start (or end) of a protocol round.
struct RoundState {
    int a0 = 0, b0 = 0;
};

/// One round's local output rule:
///   a_t = a0 if s = 0, else up_a(a);  b_t likewise with up_b(b).
RoundState run_round(int d, const RoundState& state,
                     std::pair<int, int> child_ab, int s);

/// Supplies child-system draws to the round protocol. Each draw consumes
/// one instance; draws past the budget throw ExhaustedError.
class ChildSource {
public:
    virtual ~ChildSource() = default;
    virtual std::pair<int, int> draw(std::uint64_t child_x,
                                     std::uint64_t child_y, RngStream& rng) = 0;
};

/// Error-free child: a uniform, b = g(a).
class IdealChildSource : public ChildSource {
public:
    static constexpr std::uint64_t kUnlimited = ~std::uint64_t(0);

    explicit IdealChildSource(const PermutationFamily& child,
                              std::uint64_t budget = kUnlimited);
    std::pair<int, int> draw(std::uint64_t child_x, std::uint64_t child_y,
                             RngStream& rng) override;

private:
    const PermutationFamily* child_;
    std::uint64_t remaining_;
};

/// Child that errs with probability delta: the right output is then drawn
/// uniformly from the wrong values S_{d-1} \ {g(a)}.
class NoisyChildSource : public ChildSource {
public:
    NoisyChildSource(const PermutationFamily& child, Rational delta,
                     std::uint64_t budget = IdealChildSource::kUnlimited);
    std::pair<int, int> draw(std::uint64_t child_x, std::uint64_t child_y,
                             RngStream& rng) override;

private:
    const PermutationFamily* child_;
    Rational delta_;
    std::uint64_t remaining_;
};

/// Runs the n-round simulation of the parent at (x, y): uniform independent
/// initial pair (local randomness on each side), then per round a shared
/// bit s with P(s=0) = 1/d, one child draw at ((x,a0),(y,b0)), and the
/// output rule, chaining a0 <- a_t, b0 <- b_t. Returns the final pair.
///
/// forced_initial pins the starting pair (test hook).
std::pair<int, int> simulate_parent(const PermutationFamily& parent,
                                    std::uint64_t x, std::uint64_t y,
                                    int rounds, ChildSource& children,
                                    RngStream stream,
                                    std::optional<RoundState> forced_initial =
                                        std::nullopt);

/// Exact end-of-round pair distribution from a fixed start with an ideal
/// child, indexed a_t*d + b_t.
std::vector<Rational> round_state_distribution(const PermutationFamily& parent,
                                               std::uint64_t x, std::uint64_t y,
                                               int a0, int b0);

/// Probability that the round ends incorrectly correlated
/// (f_xy(a_t) != b_t): 2/d from any incorrect start, 0 from a correct one.
Rational round_error_exact(const PermutationFamily& parent, std::uint64_t x,
                           std::uint64_t y, int a0, int b0);

/// Exact distribution of the final pair after n rounds from a uniform
/// independent start. Children are ideal except for erring with probability
/// child_error (uniformly wrong output). n = 0 returns the initial
/// distribution.
std::vector<Rational> chain_state_distribution(const PermutationFamily& parent,
                                               std::uint64_t x, std::uint64_t y,
                                               int rounds,
                                               const Rational& child_error);

/// P(f_xy(a_t) != b_t) after n rounds; with ideal children this equals
/// ((d-1)/d) * (2/d)^n exactly.
Rational chain_failure_probability(const PermutationFamily& parent,
                                   std::uint64_t x, std::uint64_t y, int rounds,
                                   const Rational& child_error);

/// Round count for a target error: the smallest integer strictly greater
/// than log_{2/d} delta. epsilon in (0,1] is the rounding slack; an exact
/// integer logarithm is bumped by one (epsilon = 1).
struct RoundChoice {
    int rounds;
    double epsilon;
};
RoundChoice rounds_needed(int d, double delta);

/// Child error budget delta_{d-1} = 1 - ((1-delta)/(1-(2/d)^eps*delta))^(1/n),
/// strictly positive for valid inputs. Evaluated in extended precision;
/// protocol probabilities are unaffected (they stay rational).
double child_budget(int d, double delta, int rounds, double epsilon);

/// Success lower bound (1-child_delta)^n * (1-(2/d)^n).
double success_bound(int d, int rounds, double child_delta);
Rational success_bound_exact(int d, int rounds, const Rational& child_delta);

struct CascadeLevel {
    int order;           // d of the system simulated at this level
    int rounds;          // n_d
    double epsilon;
    double level_budget; // delta_d granted to this level
    double child_delta;  // budget handed to the level below
};

/// Round counts and budgets for the chain D_d -> D_{d-1} -> ... -> D_2.
/// Order-2 systems are compiled exactly, so the last child budget is slack.
struct CascadePlan {
    int target_order = 2;
    double delta_total = 0;
    std::vector<CascadeLevel> levels; // orders d down to 3; empty for d <= 2

    Integer d2_instances() const;

    /// Budget assigned to the systems one level below the top (0 when the
    /// children are exact order-2 realizations).
    double top_child_budget() const;
};

CascadePlan plan_cascade(int d, double delta_total);

} // namespace nsbox
