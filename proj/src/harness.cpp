#include "cmdpkit/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace cmdpkit {

namespace {

int sample_from(const double* dist, int n, double u) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += dist[i];
        if (u < acc) return i;
    }
    return n - 1;
}

struct EpisodeOutcome {
    double reward = 0.0;
    std::vector<double> consumption;
};

EpisodeOutcome execute_episode(const Cmdp& truth, const MixturePolicy& mix, Counts& counts, RngStream& rng) {
    // Draw order per episode: component (only for true mixtures), then per
    // step one action draw and one transition draw.
    int comp = 0;
    if (mix.components.size() > 1) comp = sample_from(mix.weights.data(), static_cast<int>(mix.weights.size()), rng.next_unit());
    const Policy& pi = mix.components[comp];
    EpisodeOutcome out;
    out.consumption.assign(truth.num_resources, 0.0);
    int s = truth.initial_state;
    for (int h = 0; h < truth.horizon; ++h) {
        int a = sample_from(pi.dist(h, s), truth.num_actions, rng.next_unit());
        SampledStep step = sample_step(truth, s, a, rng);
        counts.record_step(s, a, step.reward, step.consumption, step.next_state);
        out.reward += step.reward;
        for (int i = 0; i < truth.num_resources; ++i) out.consumption[i] += step.consumption[i];
        s = step.next_state;
    }
    counts.episodes_seen += 1;
    return out;
}

struct ExactEval {
    double reward = 0.0;
    std::vector<double> consumption;
};

ExactEval evaluate_exact(const Cmdp& truth, const MixturePolicy& mix) {
    ExactEval ev;
    ev.consumption.assign(truth.num_resources, 0.0);
    OccupancyMeasure occ = mixture_occupancy(truth.transitions, mix, truth.initial_state, truth.horizon);
    ev.reward = expected_total(occ, truth.rewards);
    for (int i = 0; i < truth.num_resources; ++i) ev.consumption[i] = expected_total(occ, truth.consumption.slice(i));
    return ev;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string planner_kind_name(PlannerKind kind) {
    switch (kind) {
        case PlannerKind::Lp: return "lp";
        case PlannerKind::Lagrangian: return "lagrangian";
        case PlannerKind::Convex: return "convex";
        case PlannerKind::Knapsack: return "knapsack";
    }
    return "unknown";
}

void ExperimentConfig::validate() const {
    if (episodes < 1) throw ConfigError("config: episodes must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("config: delta outside (0,1)");
    if (planner == PlannerKind::Lagrangian) lagr.validate();
    if (planner == PlannerKind::Convex) {
        if (!convex) throw ConfigError("config: convex planner selected without a convex spec");
        convex->validate();
    }
    if (planner == PlannerKind::Knapsack) knapsack.validate();
}

PlannerSolution solve_true_benchmark(const Cmdp& truth) {
    truth.validate();
    try {
        return basic_conplanner(exact_model(truth), truth.budgets, truth.initial_state, truth.horizon);
    } catch (const PlannerInfeasibleError&) {
        throw ConfigError("benchmark: the true model admits no feasible policy for the given budgets");
    }
}

PlannerSolution solve_true_benchmark_convex(const Cmdp& truth, const ConvexSpec& spec) {
    truth.validate();
    try {
        return convex_conplanner(exact_model(truth), spec, truth.initial_state, truth.horizon);
    } catch (const PlannerInfeasibleError&) {
        throw ConfigError("benchmark: the true model admits no feasible policy for the convex constraint");
    }
}

namespace {

RunResult run_loop(const ExperimentConfig& cfg, const Cmdp& truth, bool knapsack_mode) {
    cfg.validate();
    truth.validate();
    const int S = truth.num_states, A = truth.num_actions, H = truth.horizon, d = truth.num_resources;
    const long long K = cfg.episodes;

    double epsilon = 0.0;
    std::vector<double> soft_budgets = truth.budgets;
    int null_action = A - 1;
    if (knapsack_mode) {
        if (static_cast<int>(cfg.knapsack.budgets.size()) != d) throw ConfigError("config: knapsack budget count mismatch");
        // the last action must be a genuine null action (zero reward and
        // consumption everywhere)
        for (int s = 0; s < S; ++s) {
            if (truth.rewards.at(s, null_action) != 0.0) throw ConfigError("knapsack: last action is not a null action");
            for (int i = 0; i < d; ++i)
                if (truth.consumption.at(s, null_action, i) != 0.0)
                    throw ConfigError("knapsack: last action is not a null action");
        }
        epsilon = resolve_knapsack_epsilon(cfg.knapsack, cfg.delta, S, A, H, d);
        soft_budgets.assign(d, 0.0);
        for (int i = 0; i < d; ++i) soft_budgets[i] = cfg.knapsack.budgets[i] / static_cast<double>(cfg.knapsack.total_episodes);
    }

    // Benchmark policy, evaluated exactly on the truth the same way each
    // episode policy is.
    PlannerSolution bench;
    if (cfg.planner == PlannerKind::Convex) {
        bench = solve_true_benchmark_convex(truth, *cfg.convex);
    } else if (knapsack_mode) {
        Cmdp bench_truth = truth;
        bench_truth.budgets = soft_budgets;
        bench = solve_true_benchmark(bench_truth);
    } else {
        bench = solve_true_benchmark(truth);
    }
    ExactEval bench_eval = evaluate_exact(truth, bench.policy);

    RunResult res;
    res.resolved_epsilon = epsilon;
    res.report.benchmark_reward = bench_eval.reward;
    res.report.benchmark_consumption = bench_eval.consumption;

    Counts counts(S, A, d);
    RngStream rng(cfg.seed);
    BonusConfig bonus_cfg{cfg.delta, S, A, H, d};

    std::vector<double> cum_realized(d, 0.0);
    double sum_exp_reward = 0.0;
    std::vector<double> sum_exp_cons(d, 0.0);
    bool guard_active = false;

    for (long long k = 1; k <= K; ++k) {
        auto t0 = std::chrono::steady_clock::now();
        EpisodeLog log;
        log.episode = k;

        MixturePolicy to_execute;
        if (knapsack_mode) {
            for (int i = 0; i < d; ++i)
                if (cum_realized[i] + H > cfg.knapsack.budgets[i]) guard_active = true;
        }
        if (guard_active) {
            to_execute = MixturePolicy(constant_policy(S, A, H, null_action));
            log.planner_status = "null_guard";
        } else {
            EmpiricalModel emp = empirical_model(counts);
            StageTable bonus = compute_bonus(counts, k, bonus_cfg);
            BonusEnhancedModel model = bonus_enhanced_model(emp, bonus);
            try {
                PlannerSolution sol;
                switch (cfg.planner) {
                    case PlannerKind::Lp:
                        sol = basic_conplanner(model, soft_budgets, truth.initial_state, H);
                        break;
                    case PlannerKind::Lagrangian:
                        sol = lagr_conplanner(model, soft_budgets, truth.initial_state, H, cfg.lagr);
                        break;
                    case PlannerKind::Convex:
                        sol = convex_conplanner(model, *cfg.convex, truth.initial_state, H);
                        break;
                    case PlannerKind::Knapsack:
                        sol = knapsack_conplanner(model, cfg.knapsack, epsilon, null_action, truth.initial_state, H);
                        break;
                }
                to_execute = std::move(sol.policy);
                log.planner_status = sol.null_fallback ? "null_fallback" : "optimal";
            } catch (const PlannerInfeasibleError&) {
                if (knapsack_mode) {
                    to_execute = MixturePolicy(constant_policy(S, A, H, null_action));
                    log.planner_status = "null_fallback";
                } else {
                    to_execute = MixturePolicy(Policy::uniform(S, A, H));
                    log.planner_status = "uniform_fallback";
                }
            }
        }

        EpisodeOutcome outcome = execute_episode(truth, to_execute, counts, rng);
        ExactEval exact = evaluate_exact(truth, to_execute);

        log.realized_reward = outcome.reward;
        log.realized_consumption = outcome.consumption;
        log.expected_reward = exact.reward;
        log.expected_consumption = exact.consumption;

        for (int i = 0; i < d; ++i) {
            cum_realized[i] += outcome.consumption[i];
            if (knapsack_mode && cum_realized[i] > cfg.knapsack.budgets[i]) res.violation = true;
        }
        sum_exp_reward += exact.reward;
        for (int i = 0; i < d; ++i) sum_exp_cons[i] += exact.consumption[i];

        double avg_reward = sum_exp_reward / static_cast<double>(k);
        res.report.rew_reg.push_back(bench_eval.reward - avg_reward);
        double worst = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < d; ++i)
            worst = std::max(worst, sum_exp_cons[i] / static_cast<double>(k) - soft_budgets[i]);
        res.report.cons_reg.push_back(d > 0 ? worst : 0.0);
        res.report.cum_consumption.push_back(cum_realized);

        if (cfg.planner == PlannerKind::Convex) {
            const auto& f = cfg.convex->f;
            const auto& g = cfg.convex->g;
            std::vector<double> avg_cons(d);
            for (int i = 0; i < d; ++i) avg_cons[i] = sum_exp_cons[i] / static_cast<double>(k);
            res.report.convex_rew_reg.push_back(f(bench_eval.reward) - f(avg_reward));
            res.report.convex_cons_reg.push_back(g(avg_cons));
        }

        log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.logs.push_back(std::move(log));
    }
    return res;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const Cmdp& truth) {
    if (cfg.planner == PlannerKind::Knapsack) return run_loop(cfg, truth, true);
    return run_loop(cfg, truth, false);
}

RunResult run_knapsack(const ExperimentConfig& cfg, const Cmdp& truth) {
    if (cfg.planner != PlannerKind::Knapsack) throw ConfigError("run_knapsack: planner kind must be knapsack");
    return run_loop(cfg, truth, true);
}

ReportPaths write_reports(const std::vector<EpisodeLog>& logs, const RegretReport& report,
                          const ExperimentConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

    const int d = logs.empty() ? static_cast<int>(report.benchmark_consumption.size())
                               : static_cast<int>(logs.front().realized_consumption.size());

    ReportPaths paths;
    paths.csv_path = (fs::path(out_dir) / "episodes.csv").string();
    paths.manifest_path = (fs::path(out_dir) / "manifest.txt").string();

    std::ofstream csv(paths.csv_path, std::ios::trunc);
    if (!csv) throw IoError("cannot open " + paths.csv_path + " for writing");
    csv << "episode,exp_reward";
    for (int i = 0; i < d; ++i) csv << ",exp_cons_" << i;
    csv << ",realized_reward";
    for (int i = 0; i < d; ++i) csv << ",realized_cons_" << i;
    for (int i = 0; i < d; ++i) csv << ",cum_cons_" << i;
    csv << ",rew_reg,cons_reg,planner_status\n";
    for (size_t k = 0; k < logs.size(); ++k) {
        const EpisodeLog& log = logs[k];
        csv << log.episode << ',' << format_double(log.expected_reward);
        for (int i = 0; i < d; ++i) csv << ',' << format_double(log.expected_consumption[i]);
        csv << ',' << format_double(log.realized_reward);
        for (int i = 0; i < d; ++i) csv << ',' << format_double(log.realized_consumption[i]);
        for (int i = 0; i < d; ++i) csv << ',' << format_double(report.cum_consumption[k][i]);
        csv << ',' << format_double(report.rew_reg[k]) << ',' << format_double(report.cons_reg[k]) << ','
            << log.planner_status << '\n';
    }
    if (!csv.good()) throw IoError("write failed on " + paths.csv_path);
    csv.close();

    std::ofstream manifest(paths.manifest_path, std::ios::trunc);
    if (!manifest) throw IoError("cannot open " + paths.manifest_path + " for writing");
    manifest << "benchmark_reward = " << format_double(report.benchmark_reward) << '\n';
    manifest << "delta = " << format_double(cfg.delta) << '\n';
    manifest << "env = " << cfg.env_name << '\n';
    manifest << "episodes = " << cfg.episodes << '\n';
    if (cfg.planner == PlannerKind::Knapsack) {
        manifest << "knapsack_budgets =";
        for (double b : cfg.knapsack.budgets) manifest << ' ' << format_double(b);
        manifest << '\n';
        manifest << "knapsack_c_const = " << format_double(cfg.knapsack.bound_constant) << '\n';
        manifest << "knapsack_epsilon_mode = " << (cfg.knapsack.epsilon ? "explicit" : "auto") << '\n';
        if (cfg.knapsack.epsilon) manifest << "knapsack_epsilon = " << format_double(*cfg.knapsack.epsilon) << '\n';
    }
    if (cfg.planner == PlannerKind::Lagrangian) {
        manifest << "lagr_eta = " << format_double(cfg.lagr.eta) << '\n';
        manifest << "lagr_iters = " << cfg.lagr.iterations << '\n';
    }
    manifest << "map = " << cfg.map_path << '\n';
    manifest << "planner = " << planner_kind_name(cfg.planner) << '\n';
    manifest << "seed = " << cfg.seed << '\n';
    if (!manifest.good()) throw IoError("write failed on " + paths.manifest_path);
    return paths;
}

}  // namespace cmdpkit
