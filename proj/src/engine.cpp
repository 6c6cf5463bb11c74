#include "nsbox/engine.hpp"

#include "nsbox/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>
#include <unordered_map>

namespace nsbox {

namespace {

struct MemoKey {
    std::size_t level;
    std::uint64_t x, y;
    bool operator==(const MemoKey&) const = default;
};

struct MemoKeyHash {
    std::size_t operator()(const MemoKey& k) const {
        std::uint64_t h = k.level * 0x9E3779B97F4A7C15ULL;
        h ^= k.x + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
        h ^= k.y + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

// Exact pair distribution of the compiled pipeline at one input of one
// level, with children taken as the recursively evaluated protocols below.
class RecursiveEvaluator {
public:
    RecursiveEvaluator(const CompiledProtocol& proto, const EngineCaps& caps)
        : proto_(proto), caps_(caps) {}

    const std::vector<Rational>& pair_distribution(std::size_t level,
                                                   std::uint64_t x,
                                                   std::uint64_t y) {
        const MemoKey key{level, x, y};
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        if (memo_.size() >= caps_.exact_memo_cap)
            throw ResourceCapError(
                "exact evaluation exceeds the memo cap of " +
                std::to_string(caps_.exact_memo_cap) + " entries");

        const PermutationFamily& fam = proto_.families[level];
        const int k = fam.order();
        std::vector<Rational> dist;
        if (k == 2) {
            dist.assign(4, Rational(0));
            int h;
            if (proto_.mode == BaseMode::nlb_expanded)
                h = proto_.base_circuit->h_at(x, y);
            else
                h = fam.apply(x, y, 0);
            dist[static_cast<std::size_t>(0) * 2 + h] = Rational(1, 2);
            dist[static_cast<std::size_t>(1) * 2 + (1 ^ h)] = Rational(1, 2);
        } else {
            const int n = proto_.plan.levels[level].rounds;
            const std::uint64_t ku = static_cast<std::uint64_t>(k);
            const std::size_t states = static_cast<std::size_t>(k) * k;
            std::vector<Rational> cur(states,
                                      Rational(1, static_cast<long long>(k) * k));
            std::vector<Rational> next(states);
            const Rational keep(1, k);
            const Rational advance(k - 1, k);
            for (int r = 0; r < n; ++r) {
                std::fill(next.begin(), next.end(), Rational(0));
                for (int a0 = 0; a0 < k; ++a0)
                    for (int b0 = 0; b0 < k; ++b0) {
                        const Rational& m =
                            cur[static_cast<std::size_t>(a0) * k + b0];
                        if (m == 0) continue;
                        const RelabelPair rl{k, a0, b0};
                        next[static_cast<std::size_t>(a0) * k + b0] += m * keep;
                        const auto& child = pair_distribution(
                            level + 1, x * ku + a0, y * ku + b0);
                        const Rational scale = m * advance;
                        for (int ca = 0; ca < k - 1; ++ca)
                            for (int cb = 0; cb < k - 1; ++cb) {
                                const Rational& mc =
                                    child[static_cast<std::size_t>(ca) *
                                              (k - 1) +
                                          cb];
                                if (mc == 0) continue;
                                next[static_cast<std::size_t>(rl.up_a(ca)) * k +
                                     rl.up_b(cb)] += scale * mc;
                            }
                    }
                cur.swap(next);
            }
            dist = std::move(cur);
        }
        return memo_.emplace(key, std::move(dist)).first->second;
    }

private:
    const CompiledProtocol& proto_;
    const EngineCaps& caps_;
    std::unordered_map<MemoKey, std::vector<Rational>, MemoKeyHash> memo_;
};

std::pair<int, int> sample_level(const CompiledProtocol& proto,
                                 std::size_t level, std::uint64_t x,
                                 std::uint64_t y, RngStream stream,
                                 const Rational& base_noise) {
    const PermutationFamily& fam = proto.families[level];
    const int k = fam.order();
    if (k == 2) {
        int a, b;
        if (proto.mode == BaseMode::nlb_expanded) {
            RngStream circuit_stream = stream.split(0);
            std::tie(a, b) =
                eval_circuit(*proto.base_circuit, x, y, circuit_stream);
        } else {
            RngStream box = stream.split(0);
            a = static_cast<int>(box.uniform_below(2));
            b = fam.apply(x, y, a);
        }
        if (base_noise > 0) {
            RngStream noise = stream.split(1);
            if (noise.bernoulli(base_noise)) b ^= 1;
        }
        return {a, b};
    }
    const int n = proto.plan.levels[level].rounds;
    const std::uint64_t ku = static_cast<std::uint64_t>(k);
    RngStream alice = stream.split(0);
    RngStream bob = stream.split(1);
    RoundState st{static_cast<int>(alice.uniform_below(ku)),
                  static_cast<int>(bob.uniform_below(ku))};
    for (int r = 0; r < n; ++r) {
        RngStream round_stream = stream.split(2 + static_cast<std::uint64_t>(r));
        RngStream shared = round_stream.split(0);
        const int s = shared.uniform_below(ku) == 0 ? 0 : 1;
        const auto ab =
            sample_level(proto, level + 1, x * ku + st.a0, y * ku + st.b0,
                         round_stream.split(1), base_noise);
        st = run_round(k, st, ab, s);
    }
    return {st.a0, st.b0};
}

} // namespace

CompiledProtocol compile_full(const ConditionalDistribution& p,
                              double delta_total, BaseMode mode,
                              std::uint64_t seed, const EngineCaps& caps) {
    Embedding embedding = embed(p, caps.embed_order_cap);
    const std::int64_t d = embedding.order;
    if (d > 2 && d > caps.cascade_order_cap)
        throw ResourceCapError(
            "embedding order d = " + std::to_string(d) +
            " exceeds the cascade cap of " +
            std::to_string(caps.cascade_order_cap) +
            "; the protocol exists but is not simulable at desk scale");
    CascadePlan plan = plan_cascade(static_cast<int>(d), delta_total);

    std::vector<PermutationFamily> families;
    families.push_back(embedding.family);
    for (int k = static_cast<int>(d); k >= 3; --k)
        families.push_back(build_child(families.back()).child);

    std::optional<NLBCircuit> base_circuit;
    if (mode == BaseMode::nlb_expanded)
        base_circuit = compile_d2(families.back(), caps.circuit_entry_cap);
    return CompiledProtocol{std::move(embedding), std::move(plan),
                            std::move(families), mode, std::move(base_circuit),
                            seed};
}

ConditionalDistribution exact_protocol_distribution(
    const CompiledProtocol& protocol, ChildModel model,
    const EngineCaps& caps) {
    const ConditionalDistribution& src = protocol.embedding.source;
    const int X = src.x_size(), Y = src.y_size(), A = src.a_size(),
              B = src.b_size();
    const std::int64_t d = protocol.embedding.order;
    ConditionalDistribution out(X, Y, A, B);

    RecursiveEvaluator recursive(protocol, caps);
    for (int x = 0; x < X; ++x)
        for (int y = 0; y < Y; ++y) {
            std::vector<Rational> final_pairs;
            if (d == 2 || model == ChildModel::recursive_protocol) {
                final_pairs = recursive.pair_distribution(
                    0, static_cast<std::uint64_t>(x),
                    static_cast<std::uint64_t>(y));
            } else {
                const Rational child_error =
                    model == ChildModel::ideal
                        ? Rational(0)
                        : rational_from_double(protocol.plan.top_child_budget());
                final_pairs = chain_state_distribution(
                    protocol.embedding.family, static_cast<std::uint64_t>(x),
                    static_cast<std::uint64_t>(y),
                    protocol.plan.levels.front().rounds, child_error);
            }
            for (std::int64_t at = 0; at < d; ++at)
                for (std::int64_t bt = 0; bt < d; ++bt) {
                    const Rational& m =
                        final_pairs[static_cast<std::size_t>(at) * d + bt];
                    if (m == 0) continue;
                    const int a = protocol.embedding.partitioning.decode_a(x, at);
                    const int b = protocol.embedding.partitioning.decode_b(y, bt);
                    out.set(x, y, a, b, out.at(x, y, a, b) + m);
                }
        }
    return out;
}

SimulationReport run_monte_carlo(const CompiledProtocol& protocol,
                                 std::uint64_t trials_per_input,
                                 std::uint64_t seed, int threads,
                                 double base_child_noise,
                                 const EngineCaps& caps) {
    if (trials_per_input < 1)
        throw DomainError("run_monte_carlo: need at least one trial");
    if (base_child_noise < 0.0 || base_child_noise > 1.0)
        throw DomainError("run_monte_carlo: child noise must lie in [0,1]");
    const ConditionalDistribution& src = protocol.embedding.source;
    const int X = src.x_size(), Y = src.y_size(), A = src.a_size(),
              B = src.b_size();
    const int pairs = X * Y;

    const double per_trial =
        protocol.plan.d2_instances().convert_to<double>();
    if (static_cast<double>(trials_per_input) * pairs * per_trial >
        caps.mc_work_cap)
        throw ResourceCapError(
            "simulation needs about " +
            std::to_string(static_cast<double>(trials_per_input) * pairs *
                           per_trial) +
            " child draws, over the work cap");

    const auto t_start = std::chrono::steady_clock::now();
    const Rational noise = rational_from_double(base_child_noise);

    if (threads < 1) threads = 1;
    const unsigned hw = std::thread::hardware_concurrency();
    threads = std::min<int>(threads, hw == 0 ? 1 : static_cast<int>(hw));

    struct Chunk {
        int pair;
        std::uint64_t t0, t1;
        std::vector<std::uint64_t> counts;
    };
    const std::uint64_t chunk_size = std::max<std::uint64_t>(
        1, trials_per_input / (static_cast<std::uint64_t>(threads) * 4));
    std::vector<Chunk> chunks;
    for (int pr = 0; pr < pairs; ++pr)
        for (std::uint64_t t0 = 0; t0 < trials_per_input; t0 += chunk_size)
            chunks.push_back({pr, t0,
                              std::min(trials_per_input, t0 + chunk_size),
                              std::vector<std::uint64_t>(
                                  static_cast<std::size_t>(A) * B, 0)});

    RngStream root(seed);
    auto run_chunk = [&](Chunk& ch) {
        const int x = ch.pair / Y, y = ch.pair % Y;
        RngStream pair_stream = root.split(static_cast<std::uint64_t>(ch.pair));
        for (std::uint64_t t = ch.t0; t < ch.t1; ++t) {
            const auto raw = sample_level(protocol, 0,
                                          static_cast<std::uint64_t>(x),
                                          static_cast<std::uint64_t>(y),
                                          pair_stream.split(t), noise);
            const int a = protocol.embedding.partitioning.decode_a(x, raw.first);
            const int b =
                protocol.embedding.partitioning.decode_b(y, raw.second);
            ++ch.counts[static_cast<std::size_t>(a) * B + b];
        }
    };

    if (threads == 1) {
        for (Chunk& ch : chunks) run_chunk(ch);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i =
                        next.fetch_add(1, std::memory_order_relaxed);
                    if (i >= chunks.size()) return;
                    run_chunk(chunks[i]);
                }
            });
        for (auto& th : pool) th.join();
    }

    SimulationReport rep;
    rep.trials_per_input = trials_per_input;
    rep.seed = seed;
    rep.threads = threads;
    rep.delta_total = protocol.plan.delta_total;
    rep.child_noise = base_child_noise;
    rep.eq_success_bound =
        protocol.plan.levels.empty()
            ? 1.0
            : success_bound(protocol.plan.levels.front().order,
                            protocol.plan.levels.front().rounds,
                            protocol.plan.top_child_budget());

    std::vector<std::vector<std::uint64_t>> counts(
        pairs, std::vector<std::uint64_t>(static_cast<std::size_t>(A) * B, 0));
    for (const Chunk& ch : chunks)
        for (std::size_t i = 0; i < ch.counts.size(); ++i)
            counts[ch.pair][i] += ch.counts[i];

    for (int pr = 0; pr < pairs; ++pr) {
        const int x = pr / Y, y = pr % Y;
        PairReport pair_rep;
        pair_rep.x = x;
        pair_rep.y = y;
        pair_rep.counts = counts[pr];
        Rational tv = 0;
        double var_sum = 0;
        for (int a = 0; a < A; ++a)
            for (int b = 0; b < B; ++b) {
                const Rational emp(
                    Integer(counts[pr][static_cast<std::size_t>(a) * B + b]),
                    Integer(trials_per_input));
                tv += boost::multiprecision::abs(emp - src.at(x, y, a, b));
                const double pe = rational_to_double(emp);
                var_sum += pe * (1.0 - pe);
            }
        pair_rep.tv_to_target = tv / 2;
        pair_rep.se_tv = 0.5 * std::sqrt(var_sum /
                                         static_cast<double>(trials_per_input));
        if (pair_rep.tv_to_target > rep.worst_tv) {
            rep.worst_tv = pair_rep.tv_to_target;
            rep.worst_se = pair_rep.se_tv;
        }
        rep.pairs.push_back(std::move(pair_rep));
    }
    rep.pass = rational_to_double(rep.worst_tv) <=
               rep.delta_total + 3.0 * rep.worst_se;
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
    return rep;
}

ResourceReport resource_report(const CompiledProtocol& protocol) {
    ResourceReport rep;
    rep.embedding_order = protocol.embedding.order;
    Integer running = 1;
    for (const CascadeLevel& level : protocol.plan.levels) {
        rep.level_rounds.emplace_back(level.order, level.rounds);
        running *= level.rounds;
        rep.shared_bit_draws += running;
    }
    rep.d2_instances = protocol.plan.d2_instances();
    if (protocol.mode == BaseMode::nlb_expanded && protocol.base_circuit) {
        rep.nlb_exact = true;
        rep.nlb_per_d2 = Integer(protocol.base_circuit->nlb_count());
        rep.shared_masks = rep.d2_instances;
    } else {
        // ideal-d2 mode: 1 box per order-2 system is only a lower-bound
        // estimate; the bottom alphabets are too large to compile here.
        rep.nlb_exact = false;
        rep.nlb_per_d2 = 1;
        rep.shared_masks = 0;
    }
    rep.nlb_total = rep.d2_instances * rep.nlb_per_d2;
    return rep;
}

} // namespace nsbox
