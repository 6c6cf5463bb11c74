#include "nsbox/reduction.hpp"

#include "nsbox/errors.hpp"

#include <cmath>
#include <string>

namespace nsbox {

int child_permutation_value(const PermutationFamily& parent, std::uint64_t x,
                            int a0, std::uint64_t y, int b0, int a) {
    const int d = parent.order();
    if (a < 0 || a >= d - 1 || a0 < 0 || a0 >= d || b0 < 0 || b0 >= d)
        throw ShapeError("child permutation arguments out of range");
    const RelabelPair r{d, a0, b0};
    const int lifted = parent.apply(x, y, r.up_a(a));
    if (lifted == b0) return r.down_b(parent.apply(x, y, a0));
    return r.down_b(lifted);
}

ChildFamily build_child(const PermutationFamily& parent) {
    const int d = parent.order();
    if (d < 3)
        throw DomainError(
            "build_child: order-2 systems are the base case and are not "
            "reduced further");
    // Child rule closes over a copy of the parent so the family owns its
    // definition.
    const PermutationFamily p = parent;
    PermutationFamily child = PermutationFamily::from_rule(
        d - 1, parent.x_size() * static_cast<std::uint64_t>(d),
        parent.y_size() * static_cast<std::uint64_t>(d),
        [p, d](std::uint64_t xp, std::uint64_t yp, int a) {
            const std::uint64_t du = static_cast<std::uint64_t>(d);
            return child_permutation_value(p, xp / du,
                                           static_cast<int>(xp % du), yp / du,
                                           static_cast<int>(yp % du), a);
        });
    return ChildFamily{d, std::move(child)};
}

RoundState run_round(int d, const RoundState& state,
                     std::pair<int, int> child_ab, int s) {
    const RelabelPair r{d, state.a0, state.b0};
    if (s == 0) return state;
    return {r.up_a(child_ab.first), r.up_b(child_ab.second)};
}

IdealChildSource::IdealChildSource(const PermutationFamily& child,
                                   std::uint64_t budget)
    : child_(&child), remaining_(budget) {}

std::pair<int, int> IdealChildSource::draw(std::uint64_t child_x,
                                           std::uint64_t child_y,
                                           RngStream& rng) {
    if (remaining_ == 0)
        throw ExhaustedError("child source exhausted");
    if (remaining_ != kUnlimited) --remaining_;
    const int dc = child_->order();
    const int a = static_cast<int>(rng.uniform_below(dc));
    return {a, child_->apply(child_x, child_y, a)};
}

NoisyChildSource::NoisyChildSource(const PermutationFamily& child,
                                   Rational delta, std::uint64_t budget)
    : child_(&child), delta_(std::move(delta)), remaining_(budget) {
    if (delta_ < 0 || delta_ > 1)
        throw DomainError("child noise must lie in [0,1]");
    if (child_->order() < 2)
        throw DomainError("noisy child needs order >= 2");
}

std::pair<int, int> NoisyChildSource::draw(std::uint64_t child_x,
                                           std::uint64_t child_y,
                                           RngStream& rng) {
    if (remaining_ == 0)
        throw ExhaustedError("child source exhausted");
    if (remaining_ != IdealChildSource::kUnlimited) --remaining_;
    const int dc = child_->order();
    const int a = static_cast<int>(rng.uniform_below(dc));
    int b = child_->apply(child_x, child_y, a);
    if (delta_ > 0 && rng.bernoulli(delta_)) {
        // uniform over the dc-1 wrong values
        const int w = static_cast<int>(rng.uniform_below(dc - 1));
        b = w < b ? w : w + 1;
    }
    return {a, b};
}

std::pair<int, int> simulate_parent(const PermutationFamily& parent,
                                    std::uint64_t x, std::uint64_t y,
                                    int rounds, ChildSource& children,
                                    RngStream stream,
                                    std::optional<RoundState> forced_initial) {
    const int d = parent.order();
    if (rounds < 1) throw DomainError("simulate_parent: need at least 1 round");
    const std::uint64_t du = static_cast<std::uint64_t>(d);

    RoundState state;
    if (forced_initial) {
        state = *forced_initial;
    } else {
        RngStream alice = stream.split(0);
        RngStream bob = stream.split(1);
        state.a0 = static_cast<int>(alice.uniform_below(du));
        state.b0 = static_cast<int>(bob.uniform_below(du));
    }
    for (int r = 0; r < rounds; ++r) {
        RngStream round_stream = stream.split(2 + static_cast<std::uint64_t>(r));
        RngStream shared = round_stream.split(0);
        const int s = shared.uniform_below(du) == 0 ? 0 : 1;
        RngStream child_rng = round_stream.split(1);
        const auto ab = children.draw(x * du + state.a0, y * du + state.b0,
                                      child_rng);
        state = run_round(d, state, ab, s);
    }
    return {state.a0, state.b0};
}

std::vector<Rational> round_state_distribution(const PermutationFamily& parent,
                                               std::uint64_t x, std::uint64_t y,
                                               int a0, int b0) {
    const int d = parent.order();
    if (d < 3) throw DomainError("round analysis needs order >= 3");
    std::vector<Rational> out(static_cast<std::size_t>(d) * d, Rational(0));
    const RelabelPair r{d, a0, b0};
    // s = 0 keeps the pair
    out[static_cast<std::size_t>(a0) * d + b0] += Rational(1, d);
    // s = 1: child output a uniform on S_{d-1}, b = g(a); total weight
    // (d-1)/d * 1/(d-1) = 1/d per a.
    for (int a = 0; a < d - 1; ++a) {
        const int g = child_permutation_value(parent, x, a0, y, b0, a);
        out[static_cast<std::size_t>(r.up_a(a)) * d + r.up_b(g)] +=
            Rational(1, d);
    }
    return out;
}

Rational round_error_exact(const PermutationFamily& parent, std::uint64_t x,
                           std::uint64_t y, int a0, int b0) {
    const int d = parent.order();
    const auto dist = round_state_distribution(parent, x, y, a0, b0);
    Rational err = 0;
    for (int at = 0; at < d; ++at)
        for (int bt = 0; bt < d; ++bt)
            if (parent.apply(x, y, at) != bt)
                err += dist[static_cast<std::size_t>(at) * d + bt];
    return err;
}

std::vector<Rational> chain_state_distribution(const PermutationFamily& parent,
                                               std::uint64_t x, std::uint64_t y,
                                               int rounds,
                                               const Rational& child_error) {
    const int d = parent.order();
    if (d < 3) throw DomainError("chain analysis needs order >= 3");
    if (rounds < 0) throw DomainError("round count must be nonnegative");
    if (child_error < 0 || child_error > 1)
        throw DomainError("child error must lie in [0,1]");

    const std::size_t states = static_cast<std::size_t>(d) * d;
    std::vector<Rational> cur(states, Rational(1, static_cast<long long>(d) * d));
    const Rational keep(1, d);
    const Rational per_a(1, d); // (d-1)/d * 1/(d-1)

    std::vector<Rational> next(states);
    for (int r = 0; r < rounds; ++r) {
        std::fill(next.begin(), next.end(), Rational(0));
        for (int a0 = 0; a0 < d; ++a0)
            for (int b0 = 0; b0 < d; ++b0) {
                const Rational& m = cur[static_cast<std::size_t>(a0) * d + b0];
                if (m == 0) continue;
                const RelabelPair rl{d, a0, b0};
                next[static_cast<std::size_t>(a0) * d + b0] += m * keep;
                for (int a = 0; a < d - 1; ++a) {
                    const int g =
                        child_permutation_value(parent, x, a0, y, b0, a);
                    const int at = rl.up_a(a);
                    const Rational base = m * per_a;
                    next[static_cast<std::size_t>(at) * d + rl.up_b(g)] +=
                        base * (1 - child_error);
                    if (child_error > 0) {
                        const Rational wrong =
                            base * child_error / (d - 2);
                        for (int wb = 0; wb < d - 1; ++wb) {
                            if (wb == g) continue;
                            next[static_cast<std::size_t>(at) * d +
                                 rl.up_b(wb)] += wrong;
                        }
                    }
                }
            }
        cur.swap(next);
    }
    return cur;
}

Rational chain_failure_probability(const PermutationFamily& parent,
                                   std::uint64_t x, std::uint64_t y, int rounds,
                                   const Rational& child_error) {
    const int d = parent.order();
    const auto dist = chain_state_distribution(parent, x, y, rounds,
                                               child_error);
    Rational err = 0;
    for (int at = 0; at < d; ++at)
        for (int bt = 0; bt < d; ++bt)
            if (parent.apply(x, y, at) != bt)
                err += dist[static_cast<std::size_t>(at) * d + bt];
    return err;
}

RoundChoice rounds_needed(int d, double delta) {
    if (d < 3) throw DomainError("rounds_needed: order must be >= 3");
    if (!(delta > 0.0) || !(delta < 1.0))
        throw DomainError("rounds_needed: delta must lie in (0,1)");
    const long double len = std::log(static_cast<long double>(delta)) /
                            std::log(2.0L / d);
    // Snap logs within 1e-9 of an integer to that integer; those cases get
    // epsilon = 1 (bump past the exact value).
    const long double nearest = std::floor(len + 0.5L);
    long long n;
    long double eps;
    if (std::fabs(static_cast<double>(len - nearest)) <= 1e-9) {
        n = static_cast<long long>(nearest) + 1;
        eps = 1.0L;
    } else {
        n = static_cast<long long>(std::floor(len)) + 1;
        eps = n - len;
    }
    if (n < 1) { n = 1; eps = 1.0L; }
    return {static_cast<int>(n), static_cast<double>(eps)};
}

double child_budget(int d, double delta, int rounds, double epsilon) {
    if (d < 3) throw DomainError("child_budget: order must be >= 3");
    if (rounds < 1) throw DomainError("child_budget: rounds must be >= 1");
    const long double q = 2.0L / d;
    const long double shrunk = std::pow(q, static_cast<long double>(epsilon)) *
                               static_cast<long double>(delta);
    const long double ratio = (1.0L - static_cast<long double>(delta)) /
                              (1.0L - shrunk);
    return static_cast<double>(1.0L - std::pow(ratio, 1.0L / rounds));
}

double success_bound(int d, int rounds, double child_delta) {
    const long double q = std::pow(2.0L / d, static_cast<long double>(rounds));
    const long double ok =
        std::pow(1.0L - static_cast<long double>(child_delta),
                 static_cast<long double>(rounds));
    return static_cast<double>(ok * (1.0L - q));
}

Rational success_bound_exact(int d, int rounds, const Rational& child_delta) {
    Rational ok = 1, q = 1;
    const Rational one_minus = 1 - child_delta;
    const Rational ratio(2, d);
    for (int i = 0; i < rounds; ++i) {
        ok *= one_minus;
        q *= ratio;
    }
    return ok * (1 - q);
}

Integer CascadePlan::d2_instances() const {
    Integer total = 1;
    for (const auto& level : levels) total *= level.rounds;
    return total;
}

double CascadePlan::top_child_budget() const {
    // The level below the top is cascade-simulated only if it exists and is
    // itself of order >= 3; order-2 children are compiled exactly.
    if (levels.size() >= 2) return levels[1].level_budget;
    return 0.0;
}

CascadePlan plan_cascade(int d, double delta_total) {
    if (d < 2) throw DomainError("plan_cascade: order must be >= 2");
    CascadePlan plan;
    plan.target_order = d;
    plan.delta_total = delta_total;
    if (d == 2) return plan; // exact base case, one order-2 instance
    if (!(delta_total > 0.0) || !(delta_total < 1.0))
        throw DomainError("plan_cascade: delta must lie in (0,1)");
    double delta = delta_total;
    for (int k = d; k >= 3; --k) {
        const RoundChoice rc = rounds_needed(k, delta);
        const double child = child_budget(k, delta, rc.rounds, rc.epsilon);
        plan.levels.push_back({k, rc.rounds, rc.epsilon, delta, child});
        delta = child;
    }
    return plan;
}

} // namespace nsbox
