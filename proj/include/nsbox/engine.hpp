#pragma once

#include "nsbox/distribution.hpp"
#include "nsbox/embedding.hpp"
#include "nsbox/nlb_circuit.hpp"
#include "nsbox/reduction.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace nsbox {

/// How order-2 systems are realized at the bottom of the cascade.
enum class BaseMode {
    ideal_d2,     // sampled directly (a uniform, b = f(a))
    nlb_expanded, // compiled to non-local box circuits and evaluated gate
                  // by gate
};

/// Child behavior assumed by the exact evaluator.
enum class ChildModel {
    ideal,              // error-free children one level down
    budget_noise,       // children at exactly their planned error budget
    recursive_protocol, // children are themselves the compiled protocols
};

struct EngineCaps {
    std::int64_t embed_order_cap = 1'000'000;
    std::int64_t cascade_order_cap = 8;
    std::size_t circuit_entry_cap = std::size_t(1) << 22;
    std::size_t exact_memo_cap = 4'000'000;
    double mc_work_cap = 4e9; // trials * pairs * child draws per trial
};

/// Everything needed to run or evaluate the compiled pipeline:
/// embedding of the target into an order-d family, the cascade plan, the
/// derived family chain (orders d, d-1, ..., 2), and the base realization.
struct CompiledProtocol {
    Embedding embedding;
    CascadePlan plan;
    std::vector<PermutationFamily> families; // orders d down to 2
    BaseMode mode = BaseMode::ideal_d2;
    std::optional<NLBCircuit> base_circuit;  // present in nlb_expanded mode
    std::uint64_t seed = 0;                  // default seed for simulation
};

/// Embeds P, plans the cascade for delta_total, derives the family chain,
/// and (in nlb_expanded mode) compiles the bottom family to boxes.
/// Orders beyond the caps are refused with the computed order named.
CompiledProtocol compile_full(const ConditionalDistribution& p,
                              double delta_total,
                              BaseMode mode = BaseMode::ideal_d2,
                              std::uint64_t seed = 0,
                              const EngineCaps& caps = {});

/// Exact output distribution of the protocol via per-input dynamic
/// programming on the held-pair chain, then decoding. The child model
/// picks what stands in for the systems one level down; budget_noise is
/// the planner's contract check, recursive_protocol the true pipeline.
ConditionalDistribution exact_protocol_distribution(
    const CompiledProtocol& protocol,
    ChildModel model = ChildModel::budget_noise, const EngineCaps& caps = {});

struct PairReport {
    int x = 0, y = 0;
    std::vector<std::uint64_t> counts; // a*b_size + b
    Rational tv_to_target = 0;         // exact: counts/N vs target
    double se_tv = 0;                  // multinomial delta-method bound
};

struct SimulationReport {
    std::uint64_t trials_per_input = 0;
    std::uint64_t seed = 0;
    int threads = 1;
    double delta_total = 0;
    double eq_success_bound = 0; // top-level success lower bound
    double child_noise = 0;
    std::vector<PairReport> pairs;
    Rational worst_tv = 0;
    double worst_se = 0;
    bool pass = false; // worst_tv <= delta_total + 3 * worst_se
    double wall_seconds = 0; // informational; not part of serialized output
};

/// Seeded Monte-Carlo run of the full protocol, trials_per_input per input
/// pair. Streams split per (pair, trial, round, gate): reports are
/// bit-identical for a fixed seed regardless of thread count.
/// base_child_noise > 0 flips the bottom systems' right output with that
/// probability (planner validation hook).
SimulationReport run_monte_carlo(const CompiledProtocol& protocol,
                                 std::uint64_t trials_per_input,
                                 std::uint64_t seed, int threads = 1,
                                 double base_child_noise = 0.0,
                                 const EngineCaps& caps = {});

struct ResourceReport {
    Integer embedding_order = 0;
    std::vector<std::pair<int, int>> level_rounds; // (order, rounds)
    Integer d2_instances = 1;   // per trial
    bool nlb_exact = false;     // true when the bottom is actually expanded
    Integer nlb_per_d2 = 1;     // gate count, or 1 as a flagged lower bound
    Integer nlb_total = 1;      // per trial
    Integer shared_bit_draws = 0; // biased s draws per trial
    Integer shared_masks = 0;     // circuit mask bits per trial (expanded)
};

ResourceReport resource_report(const CompiledProtocol& protocol);

} // namespace nsbox
