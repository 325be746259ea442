#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "tmc/checker.hpp"
#include "tmc/dqn.hpp"
#include "tmc/environment.hpp"
#include "tmc/envs.hpp"
#include "tmc/errors.hpp"
#include "tmc/joint.hpp"
#include "tmc/simulate.hpp"

namespace tmc::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr int kSchemaVersion = 1;

struct ModelArgs {
    std::string model;
    std::string builtin;
    std::string params;
};

struct Loaded {
    GuardedProgram program;
    std::optional<BenchmarkSpec> spec;
    json description;
};

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, sep);)
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const char* what) {
    std::vector<std::size_t> out;
    for (const auto& item : split(text, ',')) {
        try {
            std::size_t used = 0;
            long long v = std::stoll(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("{}: '{}' is not a positive integer", what, item));
        }
    }
    return out;
}

Loaded load_model(const ModelArgs& a) {
    if (a.model.empty() == a.builtin.empty()) throw ConfigError("give exactly one of --model and --builtin");
    BenchmarkParams params = parse_params(a.params);
    if (!a.builtin.empty()) {
        BenchmarkSpec spec = benchmark(a.builtin, params);
        json desc{{"builtin", spec.name}, {"params", spec.params}};
        GuardedProgram program = instantiate(spec);
        return {std::move(program), std::move(spec), std::move(desc)};
    }
    std::ifstream in(a.model);
    if (!in) throw ConfigError(fmt::format("cannot read model file '{}'", a.model));
    std::stringstream text;
    text << in.rdbuf();
    ConstantOverrides overrides;
    for (const auto& [k, v] : params) overrides[k] = std::to_string(v);
    return {parse_program(text.str(), overrides), std::nullopt, json{{"file", a.model}, {"params", params}}};
}

pctl::StatePtr parse_prop(const std::string& text) {
    if (text.empty()) throw ConfigError("--prop is required");
    try {
        return pctl::parse_property(text);
    } catch (const PositionedError& e) {
        throw PropertyError(fmt::format("property: {}", e.what()));
    }
}

std::vector<AgentPolicy> load_policies(const Loaded& m, const std::string& files, const std::string& scripted,
                                       bool scripted_given) {
    if (!files.empty() && scripted_given) throw ConfigError("give either --policies or --scripted, not both");
    if (scripted_given) {
        if (!m.spec) throw ConfigError("--scripted needs a --builtin benchmark");
        return scripted_policies(*m.spec, m.program, scripted);
    }
    if (files.empty()) throw ConfigError("--policies or --scripted is required");
    std::vector<AgentPolicy> out;
    for (const auto& path : split(files, ',')) {
        if (!fs::exists(path)) throw ConfigError(fmt::format("policy file '{}' does not exist", path));
        out.push_back(load_policy(path, m.program.schema(), m.program.actions()));
    }
    return out;
}

json stats_json(const BuildStats& s) {
    return {{"states", s.states},
            {"transitions", s.transitions},
            {"choices", s.choices},
            {"policy_queries", s.policy_queries},
            {"fallbacks", s.fallbacks},
            {"seconds", s.seconds},
            {"mean_query_seconds", s.mean_query_seconds}};
}

void emit(const json& result, const std::string& out) {
    const std::string text = result.dump(2);
    std::cout << text << "\n";
    if (!out.empty()) {
        std::ofstream f(out);
        if (!f) throw ConfigError(fmt::format("cannot write '{}'", out));
        f << text << "\n";
    }
}

json check_json(const CheckResult& r, const pctl::StateFormula& f) {
    json j{{"property", pctl::format_property(f)},
           {"solver", {{"iterations", r.stats.iterations}, {"residual", r.stats.residual}, {"converged", r.stats.converged}}},
           {"check_seconds", r.seconds}};
    if (r.is_query) {
        j["value"] = r.value_at_initial;
    } else {
        j["satisfied"] = r.value_at_initial == 1.0;
    }
    return j;
}

void ensure_time_left(const Clock::time_point& start, const std::optional<double>& cap) {
    if (cap && std::chrono::duration<double>(Clock::now() - start).count() > *cap) {
        throw Timeout(fmt::format("run exceeded the {} s wall-clock cap", *cap));
    }
}

// Shared options for commands that build and check a model.
struct CheckArgs {
    ModelArgs model;
    std::string policies;
    std::string scripted;
    std::string prop;
    double tol = 1e-8;
    std::uint64_t max_iterations = 1'000'000;
    std::size_t budget = 50'000'000;
    std::optional<double> timeout;
    std::uint64_t seed = 128;
    std::string out;
    std::string export_path;
};

void add_model_options(CLI::App* cmd, ModelArgs& m) {
    cmd->add_option("--model", m.model, "Guarded-command model file");
    cmd->add_option("--builtin", m.builtin, "Built-in benchmark: mabp, tictactoe, pokemon, cc");
    cmd->add_option("--params", m.params, "Benchmark parameters or constant overrides, k=v,...");
}

void add_check_options(CLI::App* cmd, CheckArgs& a) {
    add_model_options(cmd, a.model);
    cmd->add_option("--policies", a.policies, "Policy files, one per agent in turn order");
    cmd->add_option("--scripted", a.scripted, "Use the benchmark's scripted policies (optionally a variant name)")
        ->expected(0, 1);
    cmd->add_option("--prop", a.prop, "PCTL property");
    cmd->add_option("--tol", a.tol, "Solver tolerance");
    cmd->add_option("--max-iterations", a.max_iterations, "Solver iteration cap");
    cmd->add_option("--budget", a.budget, "State budget");
    cmd->add_option("--timeout-seconds", a.timeout, "Wall-clock cap");
    cmd->add_option("--seed", a.seed, "Master seed");
    cmd->add_option("--out", a.out, "Result JSON path");
    cmd->add_option("--export", a.export_path, "Write the built model as a triple list");
}

int finish_check(const json& result, const CheckResult& r, const std::string& out) {
    emit(result, out);
    if (!r.stats.converged) {
        spdlog::error("solver did not converge within the iteration cap (residual {})", r.stats.residual);
        return kNonConvergence;
    }
    return kOk;
}

int cmd_verify(const CheckArgs& a, bool scripted_given) {
    const auto start = Clock::now();
    Loaded m = load_model(a.model);
    auto formula = parse_prop(a.prop);
    JointPolicy policy(m.program, load_policies(m, a.policies, a.scripted, scripted_given));
    InducedBuild build = build_induced_dtmc(m.program, policy, {a.budget, a.timeout});
    if (!a.export_path.empty()) {
        std::ofstream f(a.export_path);
        export_explicit(f, build.dtmc);
    }
    CheckResult r = check(build.dtmc, *formula, {a.tol, a.max_iterations});
    ensure_time_left(start, a.timeout);
    json result = check_json(r, *formula);
    result["schema_version"] = kSchemaVersion;
    result["command"] = "verify";
    result["seed"] = a.seed;
    result["model"] = m.description;
    result["states"] = build.dtmc.num_states();
    result["transitions"] = build.dtmc.num_transitions();
    result["build_seconds"] = build.stats.seconds;
    result["build"] = stats_json(build.stats);
    return finish_check(result, r, a.out);
}

int cmd_verify_monolithic(const CheckArgs& a, bool scripted_given) {
    const auto start = Clock::now();
    Loaded m = load_model(a.model);
    auto formula = parse_prop(a.prop);
    const bool restrict = !a.policies.empty() || scripted_given;
    std::optional<JointPolicy> policy;
    if (restrict) policy.emplace(m.program, load_policies(m, a.policies, a.scripted, scripted_given));
    MonolithicBuild build;
    try {
        build = build_monolithic_mdp(m.program, {a.budget, a.timeout});
    } catch (const StateBudgetExceeded& e) {
        emit(json{{"schema_version", kSchemaVersion},
                  {"command", "verify-monolithic"},
                  {"seed", a.seed},
                  {"model", m.description},
                  {"error", "StateBudgetExceeded"},
                  {"budget", e.budget()},
                  {"states_so_far", e.states_so_far()}},
             a.out);
        throw;
    }
    if (!a.export_path.empty()) {
        std::ofstream f(a.export_path);
        export_explicit(f, build.mdp);
    }
    CheckResult r;
    std::size_t states = build.mdp.num_states(), transitions = build.mdp.num_transitions();
    if (restrict) {
        SparseDtmc chain = restrict_to_policy(build.mdp, *policy);
        r = check(chain, *formula, {a.tol, a.max_iterations});
        states = chain.num_states();
        transitions = chain.num_transitions();
    } else {
        r = check(build.mdp, *formula, {a.tol, a.max_iterations});
    }
    ensure_time_left(start, a.timeout);
    json result = check_json(r, *formula);
    result["schema_version"] = kSchemaVersion;
    result["command"] = "verify-monolithic";
    result["seed"] = a.seed;
    result["model"] = m.description;
    result["states"] = states;
    result["transitions"] = transitions;
    result["build_seconds"] = build.stats.seconds;
    result["build"] = stats_json(build.stats);
    return finish_check(result, r, a.out);
}

struct SimulateArgs {
    CheckArgs check;
    std::uint64_t episodes = 100'000;
    std::uint64_t horizon = 10'000;
};

int cmd_simulate(const SimulateArgs& s, bool scripted_given) {
    const CheckArgs& a = s.check;
    Loaded m = load_model(a.model);
    auto formula = parse_prop(a.prop);
    const auto* prob = std::get_if<pctl::Prob>(&formula->node);
    if (!prob || prob->bound || prob->quantifier != pctl::Quantifier::Plain) {
        throw PropertyError("simulate needs a P=? [ ... ] query");
    }
    JointPolicy policy(m.program, load_policies(m, a.policies, a.scripted, scripted_given));
    Estimate est = estimate_path(m.program, policy, *prob->path, s.episodes, s.horizon, a.seed);
    if (est.truncated) spdlog::warn("{} of {} episodes hit the horizon undecided", est.truncated, est.episodes);
    emit(json{{"schema_version", kSchemaVersion},
              {"command", "simulate"},
              {"seed", a.seed},
              {"model", m.description},
              {"property", pctl::format_property(*formula)},
              {"estimate", est.estimate},
              {"stderr", est.std_error},
              {"episodes", est.episodes},
              {"truncated", est.truncated}},
         a.out);
    return kOk;
}

struct TrainArgs {
    ModelArgs model;
    DqnConfig config;
    std::string hidden = "256,256";
    std::string out = ".";
    std::string log;
    std::uint64_t report_every = 500;
};

int cmd_train(TrainArgs& t) {
    Loaded m = load_model(t.model);
    t.config.hidden = parse_sizes(t.hidden, "--hidden");
    t.config.validate();
    fs::create_directories(t.out);
    const fs::path log_path = t.log.empty() ? fs::path(t.out) / "training_log.csv" : fs::path(t.log);
    std::ofstream log(log_path);
    if (!log) throw ConfigError(fmt::format("cannot write '{}'", log_path.string()));
    log << "episode,agent,reward,epsilon\n";
    const std::size_t agents = agent_count(m.program);
    std::vector<double> recent(agents, 0.0);
    auto on_episode = [&](const TrainingLogRow& row) {
        log << fmt::format("{},{},{},{}\n", row.episode, row.agent, row.reward, row.epsilon);
        recent[row.agent - 1] += row.reward;
        if (row.agent == agents && row.episode % t.report_every == 0) {
            std::string means;
            for (std::size_t i = 0; i < agents; ++i) {
                means += fmt::format(" agent_{}={:.3f}", i + 1, recent[i] / static_cast<double>(t.report_every));
                recent[i] = 0.0;
            }
            spdlog::info("episode {} epsilon {:.4f} mean reward{}", row.episode, row.epsilon, means);
        }
    };
    TrainingResult result = train_tmarl(m.program, t.config, on_episode);
    json files = json::array();
    for (std::size_t i = 0; i < result.policies.size(); ++i) {
        json p = policy_to_json(result.policies[i]);
        p["seed"] = t.config.seed;
        const fs::path path = fs::path(t.out) / fmt::format("agent_{}.json", i + 1);
        std::ofstream f(path);
        if (!f) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
        f << p.dump() << "\n";
        files.push_back(path.string());
    }
    emit(json{{"schema_version", kSchemaVersion},
              {"command", "train"},
              {"seed", t.config.seed},
              {"model", m.description},
              {"episodes", t.config.episodes},
              {"steps", result.steps},
              {"policies", files},
              {"log", log_path.string()}},
         "");
    return kOk;
}

struct StatsArgs {
    ModelArgs model;
    std::string sweep = "5,10,25,50,100";
    std::string kind = "neural";
    std::string hidden = "256,256";
    std::size_t samples = 1000;
    std::size_t repeats = 5;
    std::uint64_t seed = 128;
    std::string out;
};

int cmd_stats(const StatsArgs& s) {
    if (s.model.builtin != "mabp") {
        throw ConfigError(fmt::format("stats sweeps the agent count and needs --builtin mabp, got '{}'",
                                      s.model.builtin.empty() ? s.model.model : s.model.builtin));
    }
    if (s.kind != "neural" && s.kind != "scripted") throw ConfigError("--policy-kind must be neural or scripted");
    const auto hidden = parse_sizes(s.hidden, "--hidden");
    std::ostringstream csv;
    csv << "n_agents,mean_query_seconds,states\n";
    const auto sweep = parse_sizes(s.sweep, "--sweep");
    std::vector<GuardedProgram> programs;
    std::vector<JointPolicy> joints;
    programs.reserve(sweep.size());
    joints.reserve(sweep.size());
    for (std::size_t n : sweep) {
        BenchmarkParams params = parse_params(s.model.params);
        params["n_agents"] = static_cast<std::int64_t>(n);
        BenchmarkSpec spec = benchmark("mabp", params);
        const GuardedProgram& program = programs.emplace_back(instantiate(spec));
        std::vector<AgentPolicy> policies;
        if (s.kind == "scripted") {
            policies = scripted_policies(spec, program);
        } else {
            Rng rng = Rng::stream(s.seed, n);
            for (std::size_t i = 0; i < n; ++i)
                policies.push_back(make_neural_policy(program.schema(), program.actions(), hidden, rng));
        }
        joints.emplace_back(program, std::move(policies));
    }
    std::vector<TimingTarget> targets;
    for (std::size_t k = 0; k < sweep.size(); ++k) targets.push_back({&programs[k], &joints[k]});
    std::vector<QueryTiming> timings = query_timing_profiles(targets, s.samples, s.seed, s.repeats);
    for (std::size_t k = 0; k < sweep.size(); ++k) {
        const QueryTiming& t = timings[k];
        spdlog::info("n={} states={}{} mean={:.3e}s median={:.3e}s max={:.3e}s", sweep[k], t.states,
                     t.complete ? "" : "+", t.mean, t.median, t.max);
        csv << fmt::format("{},{:.9e},{}\n", sweep[k], t.mean, t.states);
    }
    std::cout << csv.str();
    if (!s.out.empty()) {
        std::ofstream f(s.out);
        if (!f) throw ConfigError(fmt::format("cannot write '{}'", s.out));
        f << csv.str();
    }
    return kOk;
}

int cmd_export_model(const ModelArgs& m, const std::string& out) {
    if (m.builtin.empty()) throw ConfigError("export-model needs --builtin");
    BenchmarkSpec spec = benchmark(m.builtin, parse_params(m.params));
    std::string text = spec.source;
    instantiate(spec);  // fails loudly on invalid parameter combinations
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out);
        if (!f) throw ConfigError(fmt::format("cannot write '{}'", out));
        f << text;
    }
    return kOk;
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidParams*>(&e) ||
        dynamic_cast<const UnknownBenchmark*>(&e))
        return kConfig;
    if (dynamic_cast<const StateBudgetExceeded*>(&e)) return kBudget;
    if (dynamic_cast<const NonConvergence*>(&e) || dynamic_cast<const NonFiniteLoss*>(&e)) return kNonConvergence;
    if (dynamic_cast<const Timeout*>(&e)) return kTimeout;
    if (dynamic_cast<const PropertyError*>(&e)) return kProperty;
    if (dynamic_cast<const SchemaMismatch*>(&e) || dynamic_cast<const PolicyFormatError*>(&e) ||
        dynamic_cast<const TurnOutOfRange*>(&e))
        return kPolicy;
    if (dynamic_cast<const ModelError*>(&e) || dynamic_cast<const PositionedError*>(&e)) return kModel;
    return kInternal;
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"Train turn-based multi-agent policies and model-check the Markov chains they induce"};
    app.set_help_all_flag("--help-all");
    app.require_subcommand(1);
    app.fallthrough();
    bool verbose = false, quiet = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");
    app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

    CheckArgs verify_args, mono_args;
    auto* verify = app.add_subcommand("verify", "Build the policy-induced chain and check a property");
    add_check_options(verify, verify_args);
    auto* mono = app.add_subcommand("verify-monolithic", "Build the full MDP and check a property");
    add_check_options(mono, mono_args);

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "Estimate a path probability by Monte-Carlo simulation");
    add_check_options(sim, sim_args.check);
    sim->add_option("--episodes", sim_args.episodes, "Episodes");
    sim->add_option("--horizon", sim_args.horizon, "Steps per episode");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train one DQN agent per turn value");
    add_model_options(train, train_args.model);
    DqnConfig& c = train_args.config;
    train->add_option("--episodes", c.episodes, "Training episodes");
    train->add_option("--seed", c.seed, "Master seed");
    train->add_option("--max-episode-steps", c.max_episode_steps, "Step cap per episode");
    train->add_option("--epsilon", c.epsilon, "Initial exploration rate");
    train->add_option("--epsilon-min", c.epsilon_min, "Exploration floor");
    train->add_option("--epsilon-decay", c.epsilon_decay, "Per-step exploration decay");
    train->add_option("--gamma", c.gamma, "Discount");
    train->add_option("--lr", c.learning_rate, "Adam learning rate");
    train->add_option("--batch", c.batch_size, "Minibatch size");
    train->add_option("--replay", c.replay_capacity, "Replay capacity");
    train->add_option("--sync", c.target_sync_interval, "Target network sync interval in steps");
    train->add_option("--hidden", train_args.hidden, "Hidden layer widths");
    train->add_option("--out", train_args.out, "Output directory for policy files");
    train->add_option("--log", train_args.log, "Training CSV path");
    train->add_option("--report-every", train_args.report_every, "Progress log interval in episodes");

    StatsArgs stats_args;
    auto* stats = app.add_subcommand("stats", "Per-state query time against the number of agents");
    add_model_options(stats, stats_args.model);
    stats->add_option("--sweep", stats_args.sweep, "Agent counts");
    stats->add_option("--policy-kind", stats_args.kind, "neural or scripted");
    stats->add_option("--hidden", stats_args.hidden, "Hidden layer widths of the neural policies");
    stats->add_option("--samples", stats_args.samples, "States timed per agent count");
    stats->add_option("--repeats", stats_args.repeats, "Timing rounds per state; the fastest call is kept");
    stats->add_option("--seed", stats_args.seed, "Master seed");
    stats->add_option("--out", stats_args.out, "CSV path");

    ModelArgs export_args;
    std::string export_out;
    auto* exp = app.add_subcommand("export-model", "Print a built-in benchmark's model text");
    add_model_options(exp, export_args);
    exp->add_option("--out", export_out, "Output path");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*verify) return cmd_verify(verify_args, verify->count("--scripted") > 0);
        if (*mono) return cmd_verify_monolithic(mono_args, mono->count("--scripted") > 0);
        if (*sim) return cmd_simulate(sim_args, sim->count("--scripted") > 0);
        if (*train) return cmd_train(train_args);
        if (*stats) return cmd_stats(stats_args);
        if (*exp) return cmd_export_model(export_args, export_out);
    } catch (const StateBudgetExceeded& e) {
        spdlog::error("{}", e.what());
        return kBudget;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return exit_code_for(e);
    }
    return kInternal;
}

}  // namespace tmc::cli
