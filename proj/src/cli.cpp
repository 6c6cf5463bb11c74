#include "nsbox/cli.hpp"

#include "nsbox/engine.hpp"
#include "nsbox/errors.hpp"
#include "nsbox/io.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <ostream>

namespace nsbox::cli {

namespace {

struct InputOptions {
    std::string path;
    std::string rationalize_denominator; // empty = not requested
    double tolerance = 1e-6;
};

void add_input_options(CLI::App* cmd, InputOptions& opts) {
    cmd->add_option("file", opts.path, "system file (JSON)")->required();
    cmd->add_option("--rationalize", opts.rationalize_denominator,
                    "repair float entries exactly, denominators up to M");
    cmd->add_option("--tolerance", opts.tolerance,
                    "entrywise tolerance for --rationalize");
}

ConditionalDistribution load_input(const InputOptions& opts) {
    LoadedSystem sys = load_system_file(opts.path);
    if (sys.is_exact()) return *sys.exact;
    if (opts.rationalize_denominator.empty())
        throw ParseError("'" + opts.path +
                         "' has float entries; pass --rationalize M to "
                         "repair them exactly");
    const Integer m(opts.rationalize_denominator);
    return rationalize(sys.floats, m, opts.tolerance);
}

BaseMode parse_mode(const std::string& mode) {
    if (mode == "ideal-d2") return BaseMode::ideal_d2;
    if (mode == "nlb") return BaseMode::nlb_expanded;
    throw ParseError("unknown mode '" + mode + "' (ideal-d2 | nlb)");
}

const char* mode_name(BaseMode mode) {
    return mode == BaseMode::ideal_d2 ? "ideal-d2" : "nlb";
}

Json plan_to_json(const CascadePlan& plan) {
    Json j;
    j["target_order"] = plan.target_order;
    j["delta_total"] = plan.delta_total;
    Json levels = Json::array();
    for (const CascadeLevel& level : plan.levels) {
        Json l;
        l["order"] = level.order;
        l["rounds"] = level.rounds;
        l["epsilon"] = level.epsilon;
        l["level_budget"] = level.level_budget;
        l["child_budget"] = level.child_delta;
        levels.push_back(std::move(l));
    }
    j["levels"] = std::move(levels);
    j["d2_instances"] = plan.d2_instances().str();
    return j;
}

Json resources_to_json(const ResourceReport& res) {
    Json j;
    j["embedding_order"] = res.embedding_order.str();
    Json levels = Json::array();
    for (const auto& [order, rounds] : res.level_rounds) {
        Json l;
        l["order"] = order;
        l["rounds"] = rounds;
        levels.push_back(std::move(l));
    }
    j["levels"] = std::move(levels);
    j["d2_instances"] = res.d2_instances.str();
    j["nlb_per_d2"] = res.nlb_per_d2.str();
    j["nlb_per_d2_is_lower_bound"] = !res.nlb_exact;
    j["nlb_total"] = res.nlb_total.str();
    j["shared_bit_draws"] = res.shared_bit_draws.str();
    j["shared_masks"] = res.shared_masks.str();
    return j;
}

Json simulation_to_json(const SimulationReport& rep, BaseMode mode) {
    Json j;
    j["trials_per_input"] = rep.trials_per_input;
    j["seed"] = rep.seed;
    j["threads"] = rep.threads;
    j["mode"] = mode_name(mode);
    j["delta_total"] = rep.delta_total;
    j["child_noise"] = rep.child_noise;
    j["success_bound"] = rep.eq_success_bound;
    Json pairs = Json::array();
    for (const PairReport& pr : rep.pairs) {
        Json p;
        p["x"] = pr.x;
        p["y"] = pr.y;
        p["counts"] = pr.counts;
        p["tv"] = rational_str(pr.tv_to_target);
        p["tv_float"] = rational_to_double(pr.tv_to_target);
        p["se_tv"] = pr.se_tv;
        pairs.push_back(std::move(p));
    }
    j["pairs"] = std::move(pairs);
    j["worst_tv"] = rational_str(rep.worst_tv);
    j["worst_tv_float"] = rational_to_double(rep.worst_tv);
    j["worst_se"] = rep.worst_se;
    j["pass"] = rep.pass;
    return j;
}

Json report_shell(const std::string& command) {
    Json j;
    j["schema_version"] = 1;
    j["command"] = command;
    return j;
}

void maybe_write(const std::string& path, const Json& j) {
    if (!path.empty()) write_json_file(path, j);
}

int cmd_validate(const InputOptions& in, const std::string& out_path,
                 std::ostream& out) {
    const ConditionalDistribution p = load_input(in);
    const ValidationReport rep = validate(p);
    out << "input: " << in.path << "\n";
    out << "normalized: " << (rep.all_normalized ? "true" : "false") << "\n";
    out << "nonnegative: " << (rep.nonnegative ? "true" : "false") << "\n";
    out << "non-signaling: " << (rep.non_signaling ? "true" : "false") << "\n";
    out << "worst violation: " << rational_str(rep.worst_violation) << "\n";
    for (const std::string& o : rep.offending) out << "  - " << o << "\n";

    Json j = report_shell("validate");
    j["input"] = in.path;
    j["normalized"] = rep.all_normalized;
    j["nonnegative"] = rep.nonnegative;
    j["non_signaling"] = rep.non_signaling;
    j["worst_violation"] = rational_str(rep.worst_violation);
    j["offending"] = rep.offending;
    j["valid"] = rep.ok();
    maybe_write(out_path, j);
    return rep.ok() ? 0 : 1;
}

int cmd_chsh(const InputOptions& in, const std::string& out_path,
             std::ostream& out) {
    const ConditionalDistribution p = load_input(in);
    const Rational v = chsh_value(p);
    out << rational_str(v) << "\n";

    Json j = report_shell("chsh");
    j["input"] = in.path;
    j["chsh_value"] = rational_str(v);
    j["chsh_float"] = rational_to_double(v);
    maybe_write(out_path, j);
    return 0;
}

int cmd_embed(const InputOptions& in, std::int64_t order_cap,
              const std::string& out_path, std::ostream& out) {
    const ConditionalDistribution p = load_input(in);
    const Embedding emb = embed(p, order_cap);
    const bool roundtrip = exact_embedded_distribution(emb) == p;

    out << "order d: " << emb.order << "\n";
    Json alice = Json::array(), bob = Json::array();
    for (int x = 0; x < p.x_size(); ++x) {
        Json row = Json::array();
        out << "alice blocks x=" << x << ":";
        for (int a = 0; a < p.a_size(); ++a) {
            const auto blk = emb.partitioning.a_block(x, a);
            out << " " << blk.size();
            row.push_back(blk.size());
        }
        out << "\n";
        alice.push_back(std::move(row));
    }
    for (int y = 0; y < p.y_size(); ++y) {
        Json row = Json::array();
        out << "bob blocks y=" << y << ":";
        for (int b = 0; b < p.b_size(); ++b) {
            const auto blk = emb.partitioning.b_block(y, b);
            out << " " << blk.size();
            row.push_back(blk.size());
        }
        out << "\n";
        bob.push_back(std::move(row));
    }
    out << "round-trip exact: " << (roundtrip ? "true" : "false") << "\n";

    Json j = report_shell("embed");
    j["input"] = in.path;
    j["order"] = std::to_string(emb.order);
    j["alice_block_sizes"] = std::move(alice);
    j["bob_block_sizes"] = std::move(bob);
    j["roundtrip_exact"] = roundtrip;
    maybe_write(out_path, j);
    return roundtrip ? 0 : 1;
}

int cmd_plan(int d, double delta, const std::string& out_path,
             std::ostream& out) {
    const CascadePlan plan = plan_cascade(d, delta);
    out << "cascade plan: target order " << d << ", delta " << delta << "\n";
    for (const CascadeLevel& level : plan.levels)
        out << "  level d=" << level.order << ": rounds " << level.rounds
            << ", epsilon " << level.epsilon << ", level budget "
            << level.level_budget << ", child budget " << level.child_delta
            << "\n";
    out << "order-2 instances per trial: " << plan.d2_instances().str()
        << "\n";

    Json j = report_shell("plan");
    j.update(plan_to_json(plan));
    maybe_write(out_path, j);
    return 0;
}

int cmd_compile(const InputOptions& in, double delta, BaseMode mode,
                const EngineCaps& caps, const std::string& out_path,
                std::ostream& out) {
    const ConditionalDistribution p = load_input(in);
    const CompiledProtocol proto = compile_full(p, delta, mode, 0, caps);
    const ResourceReport res = resource_report(proto);

    out << "compiled: order d=" << proto.embedding.order << ", mode "
        << mode_name(mode) << "\n";
    for (const CascadeLevel& level : proto.plan.levels)
        out << "  level d=" << level.order << ": rounds " << level.rounds
            << ", budget " << level.level_budget << "\n";
    out << "order-2 instances per trial: " << res.d2_instances.str() << "\n";
    out << "non-local boxes per order-2 system: " << res.nlb_per_d2.str()
        << (res.nlb_exact ? "" : " (lower bound)") << "\n";

    Json j = report_shell("compile");
    j["input"] = in.path;
    j["mode"] = mode_name(mode);
    j["order"] = std::to_string(proto.embedding.order);
    j["plan"] = plan_to_json(proto.plan);
    j["resources"] = resources_to_json(res);
    maybe_write(out_path, j);
    return 0;
}

int cmd_simulate(const InputOptions& in, double delta, BaseMode mode,
                 std::uint64_t trials, std::uint64_t seed, int threads,
                 double child_noise, const EngineCaps& caps,
                 const std::string& out_path, std::ostream& out) {
    const ConditionalDistribution p = load_input(in);
    const CompiledProtocol proto = compile_full(p, delta, mode, seed, caps);
    const SimulationReport rep =
        run_monte_carlo(proto, trials, seed, threads, child_noise, caps);

    out << "simulate: trials=" << trials << " seed=" << seed
        << " threads=" << rep.threads << " mode=" << mode_name(mode) << "\n";
    out << "delta budget: " << delta
        << "  success bound: " << rep.eq_success_bound << "\n";
    for (const PairReport& pr : rep.pairs)
        out << "  pair (x=" << pr.x << ",y=" << pr.y
            << "): tv=" << rational_to_double(pr.tv_to_target)
            << " se=" << pr.se_tv << "\n";
    out << "worst tv: " << rational_to_double(rep.worst_tv)
        << "  threshold: " << delta + 3 * rep.worst_se << "\n";
    out << "pass: " << (rep.pass ? "true" : "false") << "\n";
    out << "wall seconds: " << rep.wall_seconds << "\n";

    Json j = report_shell("simulate");
    j["input"] = in.path;
    j.update(simulation_to_json(rep, mode));
    maybe_write(out_path, j);
    return rep.pass ? 0 : 1;
}

int cmd_exact(const InputOptions& in, double delta, BaseMode mode,
              const std::string& model_name, const EngineCaps& caps,
              const std::string& out_path, std::ostream& out) {
    ChildModel model;
    if (model_name == "ideal") model = ChildModel::ideal;
    else if (model_name == "budget") model = ChildModel::budget_noise;
    else if (model_name == "recursive") model = ChildModel::recursive_protocol;
    else
        throw ParseError("unknown model '" + model_name +
                         "' (ideal | budget | recursive)");

    const ConditionalDistribution p = load_input(in);
    const CompiledProtocol proto = compile_full(p, delta, mode, 0, caps);
    const ConditionalDistribution dist =
        exact_protocol_distribution(proto, model, caps);
    const Rational tv = tv_distance(dist, p);
    const bool within = rational_to_double(tv) <= delta + 1e-12;

    out << "exact evaluation (model: " << model_name << ", mode "
        << mode_name(mode) << ")\n";
    out << "order d: " << proto.embedding.order << "\n";
    out << "tv to target: " << rational_str(tv) << " ("
        << rational_to_double(tv) << ")\n";
    out << "within budget " << delta << ": " << (within ? "true" : "false")
        << "\n";

    Json j = report_shell("exact");
    j["input"] = in.path;
    j["model"] = model_name;
    j["mode"] = mode_name(mode);
    j["order"] = std::to_string(proto.embedding.order);
    j["delta_total"] = delta;
    j["tv_to_target"] = rational_str(tv);
    j["tv_float"] = rational_to_double(tv);
    j["within_budget"] = within;
    j["distribution"] = system_to_json(dist);
    maybe_write(out_path, j);
    return within ? 0 : 1;
}

int cmd_report(const InputOptions& in, double delta, BaseMode mode,
               const EngineCaps& caps, const std::string& out_path,
               std::ostream& out) {
    const ConditionalDistribution p = load_input(in);
    const CompiledProtocol proto = compile_full(p, delta, mode, 0, caps);
    const ResourceReport res = resource_report(proto);

    out << "embedding order d: " << res.embedding_order.str() << "\n";
    for (const auto& [order, rounds] : res.level_rounds)
        out << "  level d=" << order << ": rounds " << rounds << "\n";
    out << "order-2 instances per trial: " << res.d2_instances.str() << "\n";
    out << "non-local boxes per order-2 system: " << res.nlb_per_d2.str()
        << (res.nlb_exact ? "" : " (lower bound; ideal-d2 mode)") << "\n";
    out << "non-local boxes per trial: " << res.nlb_total.str()
        << (res.nlb_exact ? "" : " (lower bound)") << "\n";
    out << "shared biased bits per trial: " << res.shared_bit_draws.str()
        << "\n";
    out << "shared mask bits per trial: " << res.shared_masks.str() << "\n";

    Json j = report_shell("report");
    j["input"] = in.path;
    j["mode"] = mode_name(mode);
    j.update(resources_to_json(res));
    maybe_write(out_path, j);
    return 0;
}

} // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"compile non-signaling systems into shared randomness plus "
                 "non-local boxes, and verify the result"};
    app.name("nsbox");
    app.require_subcommand(1);

    InputOptions in;
    std::string out_path;
    std::string mode_name_flag = "ideal-d2";
    std::string model_name = "budget";
    double delta = 0.0;
    int plan_d = 0;
    std::uint64_t trials = 0, seed = 0;
    int threads = 1;
    double child_noise = 0.0;
    EngineCaps caps;

    CLI::App* validate_cmd =
        app.add_subcommand("validate", "check normalization and the "
                                       "non-signaling equalities");
    add_input_options(validate_cmd, in);
    validate_cmd->add_option("-o,--output", out_path, "write JSON report");

    CLI::App* chsh_cmd =
        app.add_subcommand("chsh", "CHSH winning probability (binary systems)");
    add_input_options(chsh_cmd, in);
    chsh_cmd->add_option("-o,--output", out_path, "write JSON report");

    CLI::App* embed_cmd = app.add_subcommand(
        "embed", "embed the system into a uniform-permutation family");
    add_input_options(embed_cmd, in);
    embed_cmd->add_option("--order-cap", caps.embed_order_cap,
                          "largest embedding order to materialize");
    embed_cmd->add_option("-o,--output", out_path, "write JSON report");

    CLI::App* plan_cmd =
        app.add_subcommand("plan", "round counts and error budgets for the "
                                   "order-lowering cascade");
    plan_cmd->add_option("--d", plan_d, "target order")->required();
    plan_cmd->add_option("--delta", delta, "total error budget")->required();
    plan_cmd->add_option("-o,--output", out_path, "write JSON report");

    auto add_engine_options = [&](CLI::App* cmd) {
        add_input_options(cmd, in);
        cmd->add_option("--delta", delta, "total error budget")->required();
        cmd->add_option("--mode", mode_name_flag,
                        "base realization: ideal-d2 | nlb");
        cmd->add_option("--order-cap", caps.embed_order_cap,
                        "largest embedding order to materialize");
        cmd->add_option("--cascade-cap", caps.cascade_order_cap,
                        "largest order to run through the cascade");
        cmd->add_option("-o,--output", out_path, "write JSON report");
    };

    CLI::App* compile_cmd = app.add_subcommand(
        "compile", "embed, plan, and derive the full protocol");
    add_engine_options(compile_cmd);

    CLI::App* simulate_cmd = app.add_subcommand(
        "simulate", "seeded Monte-Carlo run of the compiled protocol");
    add_engine_options(simulate_cmd);
    simulate_cmd->add_option("--trials", trials, "trials per input pair")
        ->required();
    simulate_cmd->add_option("--seed", seed, "64-bit root seed");
    simulate_cmd->add_option("--threads", threads, "parallelism cap");
    simulate_cmd->add_option("--child-noise", child_noise,
                             "error injected into the bottom systems");

    CLI::App* exact_cmd = app.add_subcommand(
        "exact", "exact protocol distribution by dynamic programming");
    add_engine_options(exact_cmd);
    exact_cmd->add_option("--model", model_name,
                          "child model: ideal | budget | recursive");

    CLI::App* report_cmd =
        app.add_subcommand("report", "resource counts for the compiled "
                                     "protocol");
    add_engine_options(report_cmd);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));

        if (app.got_subcommand(validate_cmd))
            return cmd_validate(in, out_path, out);
        if (app.got_subcommand(chsh_cmd)) return cmd_chsh(in, out_path, out);
        if (app.got_subcommand(embed_cmd))
            return cmd_embed(in, caps.embed_order_cap, out_path, out);
        if (app.got_subcommand(plan_cmd))
            return cmd_plan(plan_d, delta, out_path, out);
        if (app.got_subcommand(compile_cmd))
            return cmd_compile(in, delta, parse_mode(mode_name_flag), caps,
                               out_path, out);
        if (app.got_subcommand(simulate_cmd))
            return cmd_simulate(in, delta, parse_mode(mode_name_flag), trials,
                                seed, threads, child_noise, caps, out_path,
                                out);
        if (app.got_subcommand(exact_cmd))
            return cmd_exact(in, delta, parse_mode(mode_name_flag), model_name,
                             caps, out_path, out);
        if (app.got_subcommand(report_cmd))
            return cmd_report(in, delta, parse_mode(mode_name_flag), caps,
                              out_path, out);
        err << "no subcommand selected\n";
        return 2;
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ResourceCapError& e) {
        err << "resource refusal: " << e.what() << "\n";
        return 3;
    } catch (const SignalingError& e) {
        err << "verification failure: " << e.what() << "\n";
        return 1;
    } catch (const RationalizeError& e) {
        err << "verification failure: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        err << "shape error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace nsbox::cli
