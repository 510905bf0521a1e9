// Command-line frontend: online runs, one-shot planning, exact policy
// evaluation, and oracle constants for regression pinning.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "cmdpkit/envs.hpp"
#include "cmdpkit/harness.hpp"
#include "cmdpkit/oracles.hpp"

using namespace cmdpkit;

namespace {

struct EnvOptions {
    std::string env = "mars";
    std::string map_path;
    double slip = 0.1;
    int horizon = 30;
    bool null_action = false;
    // random-env parameters
    uint64_t cmdp_seed = 1;
    int states = 4;
    int actions = 2;
    int resources = 1;
    int sparsity = 2;
};

void add_env_options(CLI::App* cmd, EnvOptions& opt) {
    cmd->add_option("--env", opt.env, "environment kind: mars|box|random")->check(CLI::IsMember({"mars", "box", "random"}));
    cmd->add_option("--map", opt.map_path, "map file for mars/box");
    cmd->add_option("--slip", opt.slip, "action perturbation probability");
    cmd->add_option("--horizon", opt.horizon, "episode horizon H");
    cmd->add_flag("--null-action", opt.null_action, "augment the environment with a null action");
    cmd->add_option("--cmdp-seed", opt.cmdp_seed, "random environment seed");
    cmd->add_option("--states", opt.states, "random environment state count");
    cmd->add_option("--actions", opt.actions, "random environment action count");
    cmd->add_option("--resources", opt.resources, "random environment resource count");
    cmd->add_option("--sparsity", opt.sparsity, "random environment row support size");
}

Cmdp build_env(const EnvOptions& opt, const std::vector<double>& budgets) {
    EnvConfig cfg;
    cfg.slip = opt.slip;
    cfg.horizon = opt.horizon;
    cfg.include_null_action = opt.null_action;
    Cmdp env;
    if (opt.env == "mars") {
        if (opt.map_path.empty()) throw ConfigError("mars environment needs --map");
        env = build_mars_rover(GridMap::load_file(opt.map_path), cfg);
    } else if (opt.env == "box") {
        if (opt.map_path.empty()) throw ConfigError("box environment needs --map");
        env = build_box(GridMap::load_file(opt.map_path), cfg);
    } else {
        env = build_random_cmdp(opt.cmdp_seed, opt.states, opt.actions, opt.horizon, opt.resources, opt.sparsity);
        if (opt.null_action) env = with_null_action(env);
    }
    if (!budgets.empty()) {
        if (static_cast<int>(budgets.size()) != env.num_resources)
            throw ConfigError("budget count does not match the environment's resource count");
        env.budgets = budgets;
    }
    return env;
}

ConvexSpec make_convex_spec(const Cmdp& env, double cap) {
    ConvexSpec spec;
    if (std::isfinite(cap))
        spec.f = [cap](double t) { return std::min(t, cap); };
    else
        spec.f = [](double t) { return t; };
    std::vector<double> xi = env.budgets;
    spec.g = [xi](const std::vector<double>& v) {
        double worst = -1e300;
        for (size_t i = 0; i < xi.size(); ++i) worst = std::max(worst, v[i] - xi[i]);
        return worst;
    };
    spec.lipschitz = 1.0;
    return spec;
}

void print_solution(const PlannerSolution& sol) {
    std::printf("predicted_reward %.12g\n", sol.predicted_reward);
    for (size_t i = 0; i < sol.predicted_consumption.size(); ++i)
        std::printf("predicted_cons_%zu %.12g\n", i, sol.predicted_consumption[i]);
    std::printf("components %zu\n", sol.policy.components.size());
    if (sol.null_fallback) std::printf("status null_fallback\n");
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == ';' || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value in " + path + ", got: " + line);
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t") + 1);
            return s;
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

// Expands `--config FILE` into ordinary flags placed before the explicit
// command-line flags; explicit flags override the file through the take-last
// option policy.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::vector<std::string> out;
    std::string config_path;
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw ConfigError("--config needs a file path");
            config_path = args[++i];
            continue;
        }
        out.push_back(args[i]);
    }
    if (config_path.empty()) return out;
    std::vector<std::string> from_file;
    for (const auto& [key, value] : read_kv_file(config_path)) {
        std::string flag = "--" + key;
        if (std::find(out.begin(), out.end(), flag) != out.end()) continue;  // explicit flag wins
        if (key == "null-action") {
            if (value == "true" || value == "1" || value == "yes") from_file.push_back(flag);
            continue;
        }
        from_file.push_back(flag);
        from_file.push_back(value);
    }
    if (out.empty()) throw ConfigError("a subcommand is required before --config");
    out.insert(out.begin() + 1, from_file.begin(), from_file.end());
    return out;
}

int run_main(int argc, char** argv) {
    CLI::App app{"constrained episodic RL toolkit"};
    app.require_subcommand(1);

    EnvOptions env_opt;
    std::vector<double> budgets;
    std::string planner_name = "lp";
    long long episodes = 100;
    double delta = 0.1;
    uint64_t seed = 0;
    double eta = 0.2;
    int lagr_iters = 500;
    std::string epsilon = "auto";
    double c_const = 1.0;
    double convex_cap = std::numeric_limits<double>::infinity();
    std::string out_dir = "out";

    CLI::App* run = app.add_subcommand("run", "online learning run with CSV reports");
    add_env_options(run, env_opt);
    run->add_option("--planner", planner_name, "lp|lagrangian|convex|knapsack")
        ->check(CLI::IsMember({"lp", "lagrangian", "convex", "knapsack"}));
    run->add_option("--episodes", episodes, "number of episodes K");
    run->add_option("--delta", delta, "failure probability");
    run->add_option("--seed", seed, "run seed");
    run->add_option("--eta", eta, "Lagrangian multiplier learning rate");
    run->add_option("--lagr-iters", lagr_iters, "Lagrangian planner iterations");
    run->add_option("--budget", budgets, "per-resource budgets (xi, or B in knapsack mode)")->delimiter(',');
    run->add_option("--epsilon", epsilon, "knapsack tightening: auto or a value in [0,1]");
    run->add_option("--c-const", c_const, "constant in the aggregate regret bound");
    run->add_option("--convex-cap", convex_cap, "cap for the concave reward objective");
    run->add_option("--out", out_dir, "output directory");
    std::string config_doc;
    run->add_option("--config", config_doc, "line-oriented key = value configuration file; flags override it");

    CLI::App* plan = app.add_subcommand("plan", "solve the constrained program on the true model");
    add_env_options(plan, env_opt);
    plan->add_option("--planner", planner_name, "lp|lagrangian|convex|knapsack")
        ->check(CLI::IsMember({"lp", "lagrangian", "convex", "knapsack"}));
    plan->add_option("--budget", budgets, "per-resource budgets")->delimiter(',');
    plan->add_option("--eta", eta, "Lagrangian multiplier learning rate");
    plan->add_option("--lagr-iters", lagr_iters, "Lagrangian planner iterations");
    plan->add_option("--episodes", episodes, "episode count (knapsack tightening)");
    plan->add_option("--epsilon", epsilon, "knapsack tightening: auto or a value in [0,1]");
    plan->add_option("--delta", delta, "failure probability (knapsack auto epsilon)");
    plan->add_option("--c-const", c_const, "constant in the aggregate regret bound");
    plan->add_option("--convex-cap", convex_cap, "cap for the concave reward objective");
    plan->add_option("--config", config_doc, "configuration file");

    std::string eval_policy = "benchmark";
    CLI::App* eval = app.add_subcommand("eval", "exact evaluation of a reference policy on the true model");
    add_env_options(eval, env_opt);
    eval->add_option("--budget", budgets, "per-resource budgets")->delimiter(',');
    eval->add_option("--policy", eval_policy, "benchmark|uniform|greedy")
        ->check(CLI::IsMember({"benchmark", "uniform", "greedy"}));
    eval->add_option("--config", config_doc, "configuration file");

    CLI::App* bench = app.add_subcommand("bench", "benchmark and oracle utilities");
    bench->require_subcommand(1);
    std::string instance_path;
    CLI::App* bench_oracle = bench->add_subcommand("oracle", "print a derived constant for an instance file");
    bench_oracle->add_option("--instance", instance_path, "instance description file")->required();
    CLI::App* bench_value = bench->add_subcommand("value", "print the constrained benchmark value");
    add_env_options(bench_value, env_opt);
    bench_value->add_option("--budget", budgets, "per-resource budgets")->delimiter(',');

    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    try {
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (run->parsed()) {
        Cmdp truth = build_env(env_opt, budgets);
        ExperimentConfig cfg;
        cfg.env_name = env_opt.env;
        cfg.map_path = env_opt.map_path;
        cfg.episodes = episodes;
        cfg.delta = delta;
        cfg.seed = seed;
        cfg.lagr = LagrConfig{eta, lagr_iters};
        if (planner_name == "lp") cfg.planner = PlannerKind::Lp;
        if (planner_name == "lagrangian") cfg.planner = PlannerKind::Lagrangian;
        if (planner_name == "convex") {
            cfg.planner = PlannerKind::Convex;
            cfg.convex = make_convex_spec(truth, convex_cap);
        }
        if (planner_name == "knapsack") {
            if (!env_opt.null_action) throw ConfigError("knapsack runs need --null-action");
            cfg.planner = PlannerKind::Knapsack;
            cfg.knapsack.budgets = budgets;
            cfg.knapsack.total_episodes = episodes;
            cfg.knapsack.bound_constant = c_const;
            if (epsilon != "auto") cfg.knapsack.epsilon = std::stod(epsilon);
        }
        cfg.out_dir = out_dir;
        RunResult res = run_experiment(cfg, truth);
        ReportPaths paths = write_reports(res.logs, res.report, cfg, out_dir);
        std::printf("episodes %zu\n", res.logs.size());
        std::printf("benchmark_reward %.12g\n", res.report.benchmark_reward);
        std::printf("rew_reg %.12g\n", res.report.rew_reg.back());
        std::printf("cons_reg %.12g\n", res.report.cons_reg.back());
        if (cfg.planner == PlannerKind::Knapsack) {
            std::printf("violation %s\n", res.violation ? "true" : "false");
            std::printf("epsilon %.12g\n", res.resolved_epsilon);
        }
        std::printf("csv %s\n", paths.csv_path.c_str());
        std::printf("manifest %s\n", paths.manifest_path.c_str());
        return 0;
    }

    if (plan->parsed()) {
        Cmdp truth = build_env(env_opt, budgets);
        BonusEnhancedModel model = exact_model(truth);
        PlannerSolution sol;
        if (planner_name == "lp") {
            sol = basic_conplanner(model, truth.budgets, truth.initial_state, truth.horizon);
        } else if (planner_name == "lagrangian") {
            sol = lagr_conplanner(model, truth.budgets, truth.initial_state, truth.horizon, LagrConfig{eta, lagr_iters});
        } else if (planner_name == "convex") {
            sol = convex_conplanner(model, make_convex_spec(truth, convex_cap), truth.initial_state, truth.horizon);
        } else {
            if (!env_opt.null_action) throw ConfigError("knapsack planning needs --null-action");
            KnapsackConfig kc;
            kc.budgets = truth.budgets;
            kc.total_episodes = episodes;
            kc.bound_constant = c_const;
            if (epsilon != "auto") kc.epsilon = std::stod(epsilon);
            double eps = resolve_knapsack_epsilon(kc, delta, truth.num_states, truth.num_actions, truth.horizon,
                                                  truth.num_resources);
            sol = knapsack_conplanner(model, kc, eps, truth.num_actions - 1, truth.initial_state, truth.horizon);
            std::printf("epsilon %.12g\n", eps);
        }
        print_solution(sol);
        return 0;
    }

    if (eval->parsed()) {
        Cmdp truth = build_env(env_opt, budgets);
        MixturePolicy pol;
        if (eval_policy == "benchmark") {
            pol = solve_true_benchmark(truth).policy;
        } else if (eval_policy == "uniform") {
            pol = MixturePolicy(Policy::uniform(truth.num_states, truth.num_actions, truth.horizon));
        } else {
            pol = MixturePolicy(value_iteration(truth.transitions, truth.rewards, truth.horizon).policy);
        }
        double r = mixture_expected_total(truth.transitions, pol, truth.rewards, truth.initial_state, truth.horizon);
        std::printf("expected_reward %.12g\n", r);
        for (int i = 0; i < truth.num_resources; ++i) {
            double c = mixture_expected_total(truth.transitions, pol, truth.consumption.slice(i), truth.initial_state,
                                              truth.horizon);
            std::printf("expected_cons_%d %.12g (budget %.12g)\n", i, c, truth.budgets[i]);
        }
        return 0;
    }

    if (bench_value->parsed()) {
        Cmdp truth = build_env(env_opt, budgets);
        PlannerSolution sol = solve_true_benchmark(truth);
        std::printf("benchmark_value %.17g\n", sol.predicted_reward);
        return 0;
    }

    // bench oracle
    auto kv = read_kv_file(instance_path);
    auto get = [&](const std::string& key, const std::string& fallback) {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    };
    std::string constant = get("constant", "lp_opt");
    if (constant == "agg_reg") {
        double value = agg_reg_bound(std::stoll(get("k", "1")), std::stoi(get("states", "2")),
                                     std::stoi(get("actions", "2")), std::stoi(get("horizon", "3")),
                                     std::stoi(get("resources", "1")), std::stod(get("delta", "0.1")),
                                     std::stod(get("c_const", "1")));
        std::printf("%.17g\n", value);
        return 0;
    }
    Cmdp env = build_random_cmdp(std::stoull(get("seed", "1")), std::stoi(get("states", "2")),
                                 std::stoi(get("actions", "2")), std::stoi(get("horizon", "3")),
                                 std::stoi(get("resources", "1")), std::stoi(get("sparsity", "2")));
    if (constant == "lp_opt") {
        auto exact = oracle::solve_lp_exact(oracle::RationalLp::from_double(build_occupancy_lp(
            env.transitions, env.rewards, env.consumption, env.budgets, env.initial_state, env.horizon)));
        if (exact.status != LpStatus::Optimal) throw PlannerInfeasibleError("oracle: instance LP not optimal");
        std::printf("%.17g\n", static_cast<double>(exact.objective_value));
    } else if (constant == "vi_opt") {
        ViResult vi = value_iteration(env.transitions, env.rewards, env.horizon);
        std::printf("%.17g\n", vi.values.vat(0, env.initial_state));
    } else if (constant == "enum_max") {
        double best = -1e300;
        for (const auto& ep : oracle::enumerate_policies(env, env.horizon)) best = std::max(best, ep.reward_total);
        std::printf("%.17g\n", best);
    } else if (constant == "traj_uniform") {
        Policy uniform = Policy::uniform(env.num_states, env.num_actions, env.horizon);
        std::printf("%.17g\n", oracle::exact_trajectory_expectation(env, uniform, env.rewards));
    } else {
        throw ConfigError("unknown oracle constant: " + constant);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_main(argc, argv);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const MapParseError& e) {
        std::fprintf(stderr, "map error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const SolverStallError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    } catch (const PlannerInfeasibleError& e) {
        std::fprintf(stderr, "planner error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
