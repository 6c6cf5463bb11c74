// Acceptance suite: one line per criterion, exit 0 only if all pass.
// Expected values marked "oracle" were computed independently (50-digit
// arithmetic for the budget formula, hand enumeration for the small closed
// forms) before the implementation existed, and are frozen here.

#include "nsbox/cli.hpp"
#include "nsbox/embedding.hpp"
#include "nsbox/engine.hpp"
#include "nsbox/errors.hpp"
#include "nsbox/io.hpp"
#include "nsbox/nlb_circuit.hpp"
#include "nsbox/reduction.hpp"
#include "testutil.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace nsbox;
using namespace nsbox::testutil;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
    if (!cond) throw Failure(what);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- criterion bodies ------------------------------------------------

void criterion_chsh(std::ostream& log) {
    const auto box = to_distribution(nlb());
    require(chsh_value(box) == 1, "PR box CHSH value is not exactly 1");
    Rational best = 0;
    for (int fa = 0; fa < 4; ++fa)
        for (int fb = 0; fb < 4; ++fb) {
            const auto p = deterministic_system(
                2, 2, 2, 2, [fa](int x) { return (fa >> x) & 1; },
                [fb](int y) { return (fb >> y) & 1; });
            best = std::max(best, chsh_value(p));
        }
    require(best == Rational(3, 4),
            "deterministic maximum is " + rational_str(best) + ", not 3/4");
    log << "PR box = 1/1, deterministic max = 3/4 over 16 strategies";
}

void criterion_nonsignaling_gate(std::ostream& log) {
    require(validate(to_distribution(nlb())).non_signaling,
            "PR box failed the non-signaling gate");
    RngStream rng(101);
    int families = 0;
    for (int iter = 0; iter < 10; ++iter) {
        const int d = 2 + static_cast<int>(rng.uniform_below(5));
        const auto fam = random_family(rng, d, 2, 3);
        require(validate(to_distribution(fam)).non_signaling,
                "a uniform-permutation family failed the gate");
        ++families;
    }
    ConditionalDistribution sig(2, 2, 2, 2);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) sig.set(x, y, 0, x, Rational(1));
    require(!validate(sig).non_signaling,
            "the b=x signaling system passed the gate");
    log << "PR box and " << families
        << " permutation families pass; b=x system rejected";
}

void criterion_embedding_exactness(std::ostream& log) {
    RngStream rng(20260809);
    int count = 0;
    for (int iter = 0; iter < 50; ++iter) {
        const int X = 1 + static_cast<int>(rng.uniform_below(3));
        const int Y = 1 + static_cast<int>(rng.uniform_below(3));
        const int A = 1 + static_cast<int>(rng.uniform_below(3));
        const int B = 1 + static_cast<int>(rng.uniform_below(3));
        const int q = 2 + static_cast<int>(rng.uniform_below(11));
        const auto p = random_nonsignaling_system(rng, X, Y, A, B, q);
        const Embedding e = embed(p);
        require(exact_embedded_distribution(e) == p,
                "round-trip mismatch at iteration " + std::to_string(iter));
        ++count;
    }
    log << count << " random rational systems re-simulated with zero error";
}

void criterion_child_bijections(std::ostream& log) {
    RngStream rng(555);
    int parents = 0, rows = 0;
    for (int iter = 0; iter < 20; ++iter) {
        const int d = 3 + static_cast<int>(rng.uniform_below(4));
        const int xs = 1 + static_cast<int>(rng.uniform_below(3));
        const int ys = 1 + static_cast<int>(rng.uniform_below(3));
        const auto parent = random_family(rng, d, xs, ys);
        const ChildFamily cf = build_child(parent);
        for (std::uint64_t xp = 0; xp < cf.child.x_size(); ++xp)
            for (std::uint64_t yp = 0; yp < cf.child.y_size(); ++yp) {
                std::vector<bool> seen(d - 1, false);
                for (int a = 0; a < d - 1; ++a) {
                    const int g = cf.child.apply(xp, yp, a);
                    require(g >= 0 && g < d - 1 && !seen[g],
                            "derived rule is not a bijection");
                    seen[g] = true;
                }
                ++rows;
            }
        ++parents;
    }
    log << parents << " parents, " << rows
        << " derived permutations, all bijective";
}

void criterion_round_error(std::ostream& log) {
    RngStream rng(556);
    int checked = 0;
    for (int d = 3; d <= 6; ++d) {
        const auto parent = random_family(rng, d, 2, 2);
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                for (int a0 = 0; a0 < d; ++a0)
                    for (int b0 = 0; b0 < d; ++b0) {
                        const Rational err =
                            round_error_exact(parent, x, y, a0, b0);
                        const bool correct = parent.apply(x, y, a0) == b0;
                        require(err == (correct ? Rational(0) : Rational(2, d)),
                                "round error " + rational_str(err) +
                                    " at d=" + std::to_string(d));
                        ++checked;
                    }
    }
    log << checked << " start pairs: error exactly 2/d when incorrect, 0 "
                      "when correct";
}

void criterion_chain_law(std::ostream& log) {
    RngStream rng(557);
    int checked = 0;
    for (int d = 3; d <= 5; ++d) {
        const auto parent = random_family(rng, d, 2, 2);
        for (int n = 1; n <= 6; ++n) {
            Rational law(d - 1, d);
            for (int i = 0; i < n; ++i) law *= Rational(2, d);
            require(chain_failure_probability(parent, 0, 1, n, Rational(0)) ==
                        law,
                    "ideal chain law broken at d=" + std::to_string(d) +
                        ", n=" + std::to_string(n));
            for (const Rational& delta : {Rational(0), Rational(1, 100)}) {
                const Rational success =
                    1 - chain_failure_probability(parent, 1, 0, n, delta);
                require(success >= success_bound_exact(d, n, delta),
                        "success bound violated at d=" + std::to_string(d));
            }
            ++checked;
        }
    }
    log << checked
        << " (d,n) points: failure = ((d-1)/d)(2/d)^n and bound respected "
           "(exact rationals; no float tolerance needed)";
}

void criterion_planner(std::ostream& log) {
    // Oracle: 1 - (0.99/(1-(2/3)^eps/100))^(1/12), eps = 12 - log_{2/3}(1/100),
    // evaluated independently at 50 digits = 1.9274259999855634e-4.
    // (The value is quoted elsewhere rounded as 1.9e-4-ish; the formula
    // itself is the authority and this constant is its direct evaluation.)
    const double oracle = 1.9274259999855634e-4;
    const CascadePlan plan = plan_cascade(3, 0.01);
    require(plan.levels.size() == 1, "d=3 plan must have a single level");
    require(plan.levels[0].rounds == 12,
            "planner chose " + std::to_string(plan.levels[0].rounds) +
                " rounds, expected 12");
    const double got = plan.levels[0].child_delta;
    require(std::abs(got - oracle) <= 1e-6,
            "planner child budget " + std::to_string(got) +
                " does not match the oracle");
    std::ostringstream prec;
    prec.precision(10);
    prec << "n=12, child budget " << got << " vs oracle " << oracle
         << " (|diff| <= 1e-6)";
    log << prec.str();
}

void criterion_base_case(std::ostream& log) {
    require(compile_d2(nlb()).nlb_count() == 1,
            "the non-local box itself must compile to exactly 1 box");
    RngStream rng(558);
    int count = 0;
    for (int iter = 0; iter < 20; ++iter) {
        const int xs = 1 + static_cast<int>(rng.uniform_below(4));
        const int ys = 1 + static_cast<int>(rng.uniform_below(4));
        const auto fam = random_family(rng, 2, xs, ys);
        require(circuit_exact_distribution(compile_d2(fam)) ==
                    to_distribution(fam),
                "circuit distribution differs from the family table");
        ++count;
    }
    log << count
        << " random order-2 families reproduced exactly; nlb uses 1 box";
}

struct EndToEnd {
    fs::path dir;
    std::string target_path;
    std::string report1, report2;

    EndToEnd() {
        dir = fs::temp_directory_path() /
              ("nsbox_acceptance_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        ConditionalDistribution p(3, 3, 3, 3);
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 3; ++y)
                for (int a = 0; a < 3; ++a)
                    p.set(x, y, a, (a + x * y) % 3, Rational(1, 3));
        target_path = (dir / "d3_cyclic.json").string();
        write_json_file(target_path, system_to_json(p));
        report1 = (dir / "report1.json").string();
        report2 = (dir / "report2.json").string();
    }
    ~EndToEnd() { fs::remove_all(dir); }

    int simulate(const std::string& out_file) const {
        std::ostringstream out, err;
        return cli::run({"simulate", target_path, "--delta", "0.05",
                         "--mode", "ideal-d2", "--trials", "100000", "--seed",
                         "20260809", "--threads", "2", "-o", out_file},
                        out, err);
    }
};

EndToEnd& end_to_end() {
    static EndToEnd instance;
    return instance;
}

void criterion_end_to_end(std::ostream& log) {
    EndToEnd& e2e = end_to_end();
    const int code = e2e.simulate(e2e.report1);
    require(code == 0, "simulate exited with code " + std::to_string(code));
    const Json rep = Json::parse(slurp(e2e.report1));
    const double worst_tv = rep["worst_tv_float"].get<double>();
    const double worst_se = rep["worst_se"].get<double>();
    require(rep["pass"].get<bool>(), "simulation reported failure");
    require(worst_tv <= 0.05 + 3.0 * worst_se,
            "worst TV " + std::to_string(worst_tv) + " above threshold");
    std::ostringstream prec;
    prec.precision(4);
    prec << "10^5 trials x 9 input pairs: worst TV " << worst_tv
         << " <= 0.05 + 3*" << worst_se;
    log << prec.str();
}

void criterion_determinism(std::ostream& log) {
    EndToEnd& e2e = end_to_end();
    const int code = e2e.simulate(e2e.report2);
    require(code == 0, "second simulate run failed");
    const std::string r1 = slurp(e2e.report1), r2 = slurp(e2e.report2);
    require(!r1.empty(), "first report is missing");
    require(r1 == r2, "reports differ between identically seeded runs");
    log << "two seeded runs produced byte-identical reports ("
        << r1.size() << " bytes)";
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* label;
        double limit_seconds;
        std::function<void(std::ostream&)> body;
    };
    const std::vector<Criterion> criteria{
        {1, "CHSH fixtures", 1.0, criterion_chsh},
        {2, "non-signaling gate", 1.0, criterion_nonsignaling_gate},
        {3, "embedding exactness", 10.0, criterion_embedding_exactness},
        {4, "derived permutations bijective", 5.0, criterion_child_bijections},
        {5, "per-round error 2/d", 5.0, criterion_round_error},
        {6, "chain law vs closed-form bound", 5.0, criterion_chain_law},
        {7, "budget planner", 1.0, criterion_planner},
        {8, "base-case completeness", 5.0, criterion_base_case},
        {9, "end-to-end simulation", 60.0, criterion_end_to_end},
        {10, "seeded determinism", 60.0, criterion_determinism},
    };

    int passed = 0;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::ostringstream detail;
        bool ok = true;
        std::string why;
        try {
            c.body(detail);
        } catch (const std::exception& e) {
            ok = false;
            why = e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          t0)
                .count();
        if (ok && secs > c.limit_seconds) {
            ok = false;
            why = "exceeded the " + std::to_string(c.limit_seconds) +
                  "s budget";
        }
        std::cout << "criterion " << c.id << " [" << (ok ? "PASS" : "FAIL")
                  << "] " << c.label << " (" << std::fixed
                  << std::setprecision(2) << secs << "s)";
        std::cout.unsetf(std::ios::fixed);
        if (ok)
            std::cout << ": " << detail.str();
        else
            std::cout << ": " << why;
        std::cout << "\n";
        if (ok) ++passed;
    }
    std::cout << "acceptance: " << passed << "/" << criteria.size()
              << " criteria passed\n";
    return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
