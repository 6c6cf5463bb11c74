#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nsbox/errors.hpp"
#include "nsbox/nlb_circuit.hpp"
#include "nsbox/reduction.hpp"
#include "testutil.hpp"

#include <cmath>
#include <map>

using namespace nsbox;
using namespace nsbox::testutil;

namespace {

PermutationFamily identity_family(int d, int xs = 1, int ys = 1) {
    return PermutationFamily::from_rule(
        d, xs, ys, [](std::uint64_t, std::uint64_t, int a) { return a; });
}

// Chain failure law with ideal children: ((d-1)/d) * (2/d)^n.
Rational chain_law(int d, int n) {
    Rational f(d - 1, d);
    for (int i = 0; i < n; ++i) f *= Rational(2, d);
    return f;
}

} // namespace

TEST_CASE("child permutation: all-identity parent, held pair (2,2)") {
    const auto parent = identity_family(3);
    for (int a = 0; a < 2; ++a)
        CHECK(child_permutation_value(parent, 0, 2, 0, 2, a) == a);
}

TEST_CASE("child permutation: identity parent, held pair (0,1) swaps") {
    const auto parent = identity_family(3);
    CHECK(child_permutation_value(parent, 0, 0, 0, 1, 1) == 0);
    CHECK(child_permutation_value(parent, 0, 0, 0, 1, 0) == 1);
}

TEST_CASE("child permutation stays bijective when f maps d-1 to b0") {
    // identity parent, b0 = d-1 = 2, a0 = 0: the raw relabeling rule has no
    // value for a = a0; the completed rule must still be a bijection.
    const auto parent = identity_family(3);
    const int g0 = child_permutation_value(parent, 0, 0, 0, 2, 0);
    const int g1 = child_permutation_value(parent, 0, 0, 0, 2, 1);
    CHECK(g0 != g1);
    CHECK(g0 >= 0);
    CHECK(g0 < 2);
    CHECK(g1 >= 0);
    CHECK(g1 < 2);
    // and the round error from this incorrect pair is still 2/d
    CHECK(round_error_exact(parent, 0, 0, 0, 2) == Rational(2, 3));
}

TEST_CASE("build_child rejects order-2 parents") {
    CHECK_THROWS_AS(build_child(nlb()), DomainError);
}

TEST_CASE("every child permutation is a bijection (random parents)") {
    RngStream rng(6001);
    for (int iter = 0; iter < 25; ++iter) {
        const int d = 3 + static_cast<int>(rng.uniform_below(4)); // 3..6
        const int xs = 1 + static_cast<int>(rng.uniform_below(3));
        const int ys = 1 + static_cast<int>(rng.uniform_below(3));
        const auto parent = random_family(rng, d, xs, ys);
        const ChildFamily cf = build_child(parent);
        CHECK(cf.child.order() == d - 1);
        CHECK(cf.child.x_size() == static_cast<std::uint64_t>(xs) * d);
        CHECK(cf.child.y_size() == static_cast<std::uint64_t>(ys) * d);
        for (std::uint64_t xp = 0; xp < cf.child.x_size(); ++xp)
            for (std::uint64_t yp = 0; yp < cf.child.y_size(); ++yp) {
                std::vector<bool> seen(d - 1, false);
                for (int a = 0; a < d - 1; ++a) {
                    const int g = cf.child.apply(xp, yp, a);
                    REQUIRE(g >= 0);
                    REQUIRE(g < d - 1);
                    CHECK_FALSE(seen[g]);
                    seen[g] = true;
                }
            }
    }
}

TEST_CASE("run_round") {
    // s = 0 keeps the held pair
    CHECK(run_round(3, {1, 1}, {0, 0}, 0).a0 == 1);
    CHECK(run_round(3, {1, 1}, {0, 0}, 0).b0 == 1);

    // identity parent, held (0,1), child returns (0, g(0)) = (0,1):
    // relabeling lifts both to 2.
    const auto parent = identity_family(3);
    const int g0 = child_permutation_value(parent, 0, 0, 0, 1, 0);
    CHECK(g0 == 1);
    const RoundState st = run_round(3, {0, 1}, {0, g0}, 1);
    CHECK(st.a0 == 2);
    CHECK(st.b0 == 2);
}

TEST_CASE("correct pairs stay correct through a round, exactly") {
    RngStream rng(777);
    for (int iter = 0; iter < 10; ++iter) {
        const int d = 3 + static_cast<int>(rng.uniform_below(4));
        const auto parent = random_family(rng, d, 2, 2);
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                for (int a0 = 0; a0 < d; ++a0) {
                    const int b0 = parent.apply(x, y, a0); // correct pair
                    CHECK(round_error_exact(parent, x, y, a0, b0) == 0);
                    // end state is uniform over d correct pairs
                    const auto dist =
                        round_state_distribution(parent, x, y, a0, b0);
                    int support = 0;
                    for (int at = 0; at < d; ++at)
                        for (int bt = 0; bt < d; ++bt) {
                            const Rational& m =
                                dist[static_cast<std::size_t>(at) * d + bt];
                            if (m == 0) continue;
                            CHECK(m == Rational(1, d));
                            CHECK(parent.apply(x, y, at) == bt);
                            ++support;
                        }
                    CHECK(support == d);
                }
    }
}

TEST_CASE("incorrect pairs err with probability exactly 2/d") {
    RngStream rng(778);
    for (int d = 3; d <= 6; ++d) {
        const auto parent = random_family(rng, d, 2, 2);
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                for (int a0 = 0; a0 < d; ++a0)
                    for (int b0 = 0; b0 < d; ++b0) {
                        if (parent.apply(x, y, a0) == b0) continue;
                        CHECK(round_error_exact(parent, x, y, a0, b0) ==
                              Rational(2, d));
                    }
    }
}

TEST_CASE("after an incorrect start the round lands uniformly on d pairs, "
          "2 of them incorrect") {
    RngStream rng(779);
    const int d = 4;
    const auto parent = random_family(rng, d, 2, 2);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int a0 = 0; a0 < d; ++a0)
                for (int b0 = 0; b0 < d; ++b0) {
                    if (parent.apply(x, y, a0) == b0) continue;
                    const auto dist =
                        round_state_distribution(parent, x, y, a0, b0);
                    int support = 0, incorrect = 0;
                    for (int at = 0; at < d; ++at)
                        for (int bt = 0; bt < d; ++bt) {
                            const Rational& m =
                                dist[static_cast<std::size_t>(at) * d + bt];
                            if (m == 0) continue;
                            CHECK(m == Rational(1, d));
                            ++support;
                            if (parent.apply(x, y, at) != bt) ++incorrect;
                        }
                    CHECK(support == d);
                    CHECK(incorrect == 2);
                }
}

TEST_CASE("chain law: exact failure ((d-1)/d)(2/d)^n with ideal children") {
    RngStream rng(91);
    for (int d = 3; d <= 5; ++d) {
        const auto parent = random_family(rng, d, 2, 2);
        for (int n = 0; n <= 6; ++n)
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y)
                    CHECK(chain_failure_probability(parent, x, y, n,
                                                    Rational(0)) ==
                          chain_law(d, n));
    }
}

TEST_CASE("chain with zero rounds is the uniform independent pair") {
    const auto parent = identity_family(3);
    const auto dist = chain_state_distribution(parent, 0, 0, 0, Rational(0));
    for (const Rational& m : dist) CHECK(m == Rational(1, 9));
}

TEST_CASE("chain success dominates the closed-form bound, exactly") {
    RngStream rng(92);
    for (int d = 3; d <= 5; ++d) {
        const auto parent = random_family(rng, d, 2, 2);
        for (int n = 1; n <= 6; ++n)
            for (const Rational& delta : {Rational(0), Rational(1, 100)}) {
                const Rational success =
                    1 - chain_failure_probability(parent, 0, 1, n, delta);
                CHECK(success >= success_bound_exact(d, n, delta));
            }
    }
}

TEST_CASE("noisy chain stays normalized") {
    const auto parent = identity_family(4, 2, 2);
    const auto dist =
        chain_state_distribution(parent, 1, 1, 5, Rational(3, 100));
    Rational total = 0;
    for (const Rational& m : dist) {
        CHECK(m >= 0);
        total += m;
    }
    CHECK(total == 1);
}

TEST_CASE("simulate_parent matches the chain law at d=3, n=2") {
    const auto parent = identity_family(3);
    const ChildFamily cf = build_child(parent);
    IdealChildSource children(cf.child);
    const int trials = 60000;
    int failures = 0;
    RngStream root(4242);
    for (int t = 0; t < trials; ++t) {
        const auto [a, b] =
            simulate_parent(parent, 0, 0, 2, children, root.split(t));
        if (a != b) ++failures; // identity family: correct iff a == b
    }
    const double expect = trials * (8.0 / 27.0);
    const double sigma = std::sqrt(trials * (8.0 / 27.0) * (19.0 / 27.0));
    CHECK(std::abs(failures - expect) < 3.5 * sigma);
}

TEST_CASE("a forced correct start never fails") {
    RngStream rng(5150);
    const auto parent = random_family(rng, 4, 2, 2);
    const ChildFamily cf = build_child(parent);
    IdealChildSource children(cf.child);
    RngStream root(99);
    for (int t = 0; t < 2000; ++t) {
        const int a0 = static_cast<int>(root.split(t).uniform_below(4));
        const RoundState start{a0, parent.apply(1, 0, a0)};
        const auto [a, b] = simulate_parent(parent, 1, 0, 3, children,
                                            root.split(100000 + t), start);
        CHECK(parent.apply(1, 0, a) == b);
    }
}

TEST_CASE("an exhausted child source throws") {
    const auto parent = identity_family(3);
    const ChildFamily cf = build_child(parent);
    IdealChildSource children(cf.child, 5); // budget below the 6 draws needed
    RngStream root(1);
    (void)simulate_parent(parent, 0, 0, 3, children, root.split(0));
    CHECK_THROWS_AS(simulate_parent(parent, 0, 0, 3, children, root.split(1)),
                    ExhaustedError);
}

TEST_CASE("box-compiled children drive the protocol like ideal ones") {
    // order-2 children realized as compiled circuits instead of direct
    // family draws; the chain law must be unchanged
    struct CircuitChildSource final : ChildSource {
        NLBCircuit circuit;
        std::pair<int, int> draw(std::uint64_t cx, std::uint64_t cy,
                                 RngStream& rng) override {
            return eval_circuit(circuit, cx, cy, rng);
        }
    };
    const auto parent = identity_family(3, 2, 2);
    const ChildFamily cf = build_child(parent);
    CircuitChildSource children;
    children.circuit = compile_d2(cf.child);
    const int trials = 40000;
    int failures = 0;
    RngStream root(90210);
    for (int t = 0; t < trials; ++t) {
        const auto [a, b] =
            simulate_parent(parent, 1, 0, 2, children, root.split(t));
        if (a != b) ++failures;
    }
    const double expect = trials * (8.0 / 27.0);
    const double sigma = std::sqrt(trials * (8.0 / 27.0) * (19.0 / 27.0));
    CHECK(std::abs(failures - expect) < 3.5 * sigma);
}

TEST_CASE("noisy children degrade the chain as the DP predicts") {
    const auto parent = identity_family(3);
    const ChildFamily cf = build_child(parent);
    const Rational delta(1, 10);
    NoisyChildSource children(cf.child, delta);
    const int trials = 60000;
    int failures = 0;
    RngStream root(31);
    for (int t = 0; t < trials; ++t) {
        const auto [a, b] =
            simulate_parent(parent, 0, 0, 2, children, root.split(t));
        if (a != b) ++failures;
    }
    const double expect =
        trials *
        rational_to_double(chain_failure_probability(parent, 0, 0, 2, delta));
    const double sigma = std::sqrt(expect);
    CHECK(std::abs(failures - expect) < 4 * sigma);
}

TEST_CASE("rounds_needed reproduces the worked examples") {
    const RoundChoice a = rounds_needed(3, 0.01);
    CHECK(a.rounds == 12);
    CHECK(a.epsilon == doctest::Approx(0.64225282546).epsilon(1e-9));

    const RoundChoice b = rounds_needed(4, 0.05);
    CHECK(b.rounds == 5);
    CHECK(b.epsilon == doctest::Approx(0.67807190511).epsilon(1e-9));

    // integer logarithm: bumped by one with epsilon = 1
    const double delta = std::pow(2.0 / 3.0, 7);
    const RoundChoice c = rounds_needed(3, delta);
    CHECK(c.rounds == 8);
    CHECK(c.epsilon == doctest::Approx(1.0));

    CHECK_THROWS_AS(rounds_needed(3, 0.0), DomainError);
    CHECK_THROWS_AS(rounds_needed(3, 1.0), DomainError);
    CHECK_THROWS_AS(rounds_needed(2, 0.5), DomainError);
}

TEST_CASE("child_budget reproduces the frozen oracle value") {
    // Reference evaluated independently at 50-digit precision:
    // 1 - (0.99 / (1 - (2/3)^eps * 0.01))^(1/12) with eps = 12 - log_{2/3}(0.01)
    //   = 1.9274259999855634e-4
    const RoundChoice rc = rounds_needed(3, 0.01);
    const double d2 = child_budget(3, 0.01, rc.rounds, rc.epsilon);
    CHECK(std::abs(d2 - 1.9274259999855634e-4) < 1e-12);
}

TEST_CASE("child budgets are strictly positive and vanish with delta") {
    for (int d = 3; d <= 8; ++d) {
        double prev = 1.0;
        for (const double delta : {0.4, 0.1, 0.01, 1e-4, 1e-8}) {
            const RoundChoice rc = rounds_needed(d, delta);
            const double child = child_budget(d, delta, rc.rounds, rc.epsilon);
            CHECK(child > 0.0);
            CHECK(child < 1.0);
            CHECK(child < prev);
            prev = child;
        }
        CHECK(prev < 1e-8);
    }
}

TEST_CASE("success_bound") {
    CHECK(success_bound_exact(4, 2, Rational(0)) == Rational(3, 4));
    CHECK(success_bound(4, 2, 0.0) == doctest::Approx(0.75));
    // monotone to 1 in n at delta = 0
    CHECK(success_bound(3, 60, 0.0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("plan_cascade") {
    const CascadePlan base = plan_cascade(2, 0.01);
    CHECK(base.levels.empty());
    CHECK(base.d2_instances() == 1);
    CHECK(base.top_child_budget() == 0.0);

    const CascadePlan p3 = plan_cascade(3, 0.01);
    REQUIRE(p3.levels.size() == 1);
    CHECK(p3.levels[0].order == 3);
    CHECK(p3.levels[0].rounds == 12);
    CHECK(p3.levels[0].child_delta ==
          doctest::Approx(1.9274259999855634e-4).epsilon(1e-9));
    CHECK(p3.d2_instances() == 12);
    CHECK(p3.top_child_budget() == 0.0); // order-2 children are exact

    // d=4, delta=0.05: level 4 runs 5 rounds; its child budget
    // 0.0039012893346465874 (frozen oracle) forces 14 rounds at level 3.
    const CascadePlan p4 = plan_cascade(4, 0.05);
    REQUIRE(p4.levels.size() == 2);
    CHECK(p4.levels[0].order == 4);
    CHECK(p4.levels[0].rounds == 5);
    CHECK(p4.levels[0].child_delta ==
          doctest::Approx(0.0039012893346465874).epsilon(1e-9));
    CHECK(p4.levels[1].order == 3);
    CHECK(p4.levels[1].rounds == 14);
    CHECK(p4.d2_instances() == 70);
    CHECK(p4.top_child_budget() ==
          doctest::Approx(0.0039012893346465874).epsilon(1e-9));

    CHECK_THROWS_AS(plan_cascade(1, 0.1), DomainError);
    CHECK_THROWS_AS(plan_cascade(3, 0.0), DomainError);
}
