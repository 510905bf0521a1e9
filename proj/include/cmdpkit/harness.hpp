#pragma once

#include <optional>
#include <string>

#include "cmdpkit/core.hpp"
#include "cmdpkit/envs.hpp"
#include "cmdpkit/estimation.hpp"
#include "cmdpkit/planners.hpp"

// The online learning loop: per-episode model estimation, bonus, constrained
// planning and execution, with exact regret accounting against the
// LP-optimal benchmark, plus the knapsack executor with its hard budget
// guard and the CSV/manifest reporting surface.

namespace cmdpkit {

enum class PlannerKind { Lp, Lagrangian, Convex, Knapsack };

std::string planner_kind_name(PlannerKind kind);

struct ExperimentConfig {
    std::string env_name = "random";  // manifest metadata
    std::string map_path;
    PlannerKind planner = PlannerKind::Lp;
    long long episodes = 1;
    double delta = 0.1;
    uint64_t seed = 0;
    LagrConfig lagr;
    std::optional<ConvexSpec> convex;
    KnapsackConfig knapsack;
    std::string out_dir;

    void validate() const;
};

struct EpisodeLog {
    long long episode = 0;  // 1-based
    double realized_reward = 0.0;
    std::vector<double> realized_consumption;
    double expected_reward = 0.0;  // exact DP value of the executed policy on the truth
    std::vector<double> expected_consumption;
    std::string planner_status;  // optimal | uniform_fallback | null_fallback | null_guard
    double wall_seconds = 0.0;
};

struct RegretReport {
    double benchmark_reward = 0.0;  // exact value of the benchmark policy
    std::vector<double> benchmark_consumption;
    std::vector<double> rew_reg;   // per episode, averaged form
    std::vector<double> cons_reg;  // max over resources of averaged excess
    std::vector<std::vector<double>> cum_consumption;  // realized, per episode
    // convex mode extras
    std::vector<double> convex_rew_reg;
    std::vector<double> convex_cons_reg;
};

struct RunResult {
    std::vector<EpisodeLog> logs;
    RegretReport report;
    bool violation = false;       // knapsack mode: any realized cumulative consumption above B_i
    double resolved_epsilon = 0.0;  // knapsack mode
};

/// Exact constrained benchmark on the true model (zero bonus). Convex mode
/// benchmarks the concave-convex program instead.
PlannerSolution solve_true_benchmark(const Cmdp& truth);
PlannerSolution solve_true_benchmark_convex(const Cmdp& truth, const ConvexSpec& spec);

/// Soft-constraint online loop. Planner infeasibility falls back to the
/// uniform policy for the episode and is recorded in the log.
RunResult run_experiment(const ExperimentConfig& cfg, const Cmdp& truth);

/// Knapsack online loop over a truth built with a null action (last action
/// index). Before each episode the hard guard checks whether the remaining
/// budget still covers a worst-case episode (H per resource); once it does
/// not, the pure null policy runs for all remaining episodes.
RunResult run_knapsack(const ExperimentConfig& cfg, const Cmdp& truth);

struct ReportPaths {
    std::string csv_path;
    std::string manifest_path;
};

/// Deterministic CSV emission (schema: episode, exp_reward, exp_cons_*,
/// realized_reward, realized_cons_*, cum_cons_*, rew_reg, cons_reg,
/// planner_status) plus a manifest of the fully resolved configuration.
ReportPaths write_reports(const std::vector<EpisodeLog>& logs, const RegretReport& report,
                          const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace cmdpkit
