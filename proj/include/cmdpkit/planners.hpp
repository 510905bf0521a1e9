#pragma once

#include <functional>
#include <optional>
#include <span>

#include "cmdpkit/core.hpp"
#include "cmdpkit/estimation.hpp"
#include "cmdpkit/lp.hpp"

// Constrained planners over occupancy measures: the exact LP planner (column
// generation with the bundled simplex as master engine and value iteration as
// pricing oracle), finite-horizon value iteration, the Lagrangian heuristic,
// the concave-convex planner, the knapsack-tightened planner, and the
// aggregate-regret bound formula.

namespace cmdpkit {

/// Planner output under the planning model. predicted_reward and
/// predicted_consumption equal expected_total of the occupancy with the
/// planning objective tables (for the convex planner, with the inner-selected
/// tables).
struct PlannerSolution {
    MixturePolicy policy;
    OccupancyMeasure occupancy;
    double predicted_reward = 0.0;
    std::vector<double> predicted_consumption;
    bool null_fallback = false;
};

struct ViResult {
    ValueTables values;
    Policy policy;
};

/// Greedy finite-horizon value iteration; ties break toward the lowest action
/// index, so the returned policy is deterministic.
ViResult value_iteration(const TransitionModel& p, const StageTable& r, int horizon);

/// Dense occupancy-measure encoding of the constrained planning program:
/// variables rho(s,a,h), objective sum rho*r, consumption rows, flow
/// conservation, per-stage normalization, and the initial-state restriction
/// expressed through [0,0] bounds at stage 1.
LpProblem build_occupancy_lp(const TransitionModel& p, const StageTable& r, const ResourceTable& c,
                             std::span<const double> budgets, int initial_state, int horizon);

/// Exact solution of the linear constrained planning program
///   max E[sum r]  s.t.  E[sum c_i] <= xi_i,
/// solved by column generation over deterministic-policy occupancies: the
/// restricted masters go through solve_lp, pricing goes through
/// value_iteration, and the final policy is extracted from the mixed
/// occupancy via policy_from_occupancy. Throws PlannerInfeasibleError when no
/// mixture satisfies the constraints.
PlannerSolution basic_conplanner(const BonusEnhancedModel& model, std::span<const double> budgets,
                                 int initial_state, int horizon);

struct LagrConfig {
    double eta = 0.2;
    int iterations = 500;

    void validate() const;
};

/// Lagrangian heuristic: multipliers lambda <= 0 updated by projected
/// gradient, pseudo-reward r + sum_i lambda_i (c_i - xi_i/H) planned by value
/// iteration, uniform mixture over iterates returned.
PlannerSolution lagr_conplanner(const BonusEnhancedModel& model, std::span<const double> budgets,
                                int initial_state, int horizon, const LagrConfig& cfg);

/// Concave reward objective f on the total reward and convex constraint g on
/// the total consumption vector; both must be defined on all reachable
/// totals and L-Lipschitz.
struct ConvexSpec {
    std::function<double(double)> f;
    std::function<double(const std::vector<double>&)> g;
    double lipschitz = 1.0;

    void validate() const;
};

struct ConvexBudget {
    int frank_wolfe_iterations = 80;
    int dual_doublings = 40;
    int dual_bisections = 60;
    int box_min_iterations = 300;
    double feasibility_tol = 1e-8;
};

/// Maximizes F(rho) = max_{t in [sum rho (r-b), sum rho (r+b)]} f(t) subject
/// to G(rho) = min over the consumption boxes of g(sum rho c) <= 0, by a dual
/// loop on the constraint multiplier with Frank-Wolfe inner maximization
/// (value iteration as the linear oracle, step 2/(t+2)), golden-section for
/// the scalar reward maximization and projected gradient for the box
/// minimization. Returns the best feasible iterate; throws
/// PlannerInfeasibleError when none is found within the budget.
PlannerSolution convex_conplanner(const BonusEnhancedModel& model, const ConvexSpec& spec, int initial_state,
                                  int horizon, const ConvexBudget& budget = {});

struct KnapsackConfig {
    std::vector<double> budgets;        // aggregate budgets B_i over all episodes
    long long total_episodes = 1;       // K
    std::optional<double> epsilon;      // empty selects the formula-based value
    double bound_constant = 1.0;        // constant in the aggregate-regret formula

    void validate() const;
};

/// Aggregate regret bound after k episodes:
/// k * [ (c/sqrt(k)) H^2.5 S sqrt(A) sqrt(ln k * ln(SAH(d+1)k/delta))
///     + (c/k) S^1.5 A H^3 sqrt(ln(2SAH(d+1)k/delta)) ].
double agg_reg_bound(long long k, int S, int A, int H, int d, double delta, double c_const);

/// epsilon = aggreg / min_i B_i; throws ConfigError when min_i B_i <= aggreg.
double epsilon_for_knapsack(double aggreg, std::span<const double> budgets);

/// Resolves the knapsack tightening parameter: explicit value when given,
/// otherwise the formula-based choice.
double resolve_knapsack_epsilon(const KnapsackConfig& cfg, double delta, int S, int A, int H, int d);

/// basic_conplanner with per-episode budgets (1-epsilon) B_i / K. When the
/// tightened program is infeasible under the estimated model, returns the
/// pure null policy with null_fallback set.
PlannerSolution knapsack_conplanner(const BonusEnhancedModel& model, const KnapsackConfig& cfg, double epsilon,
                                    int null_action, int initial_state, int horizon);

/// Deterministic policy selecting one fixed action everywhere.
Policy constant_policy(int S, int A, int H, int action);

/// Solution wrapper for executing a fixed policy under a model.
PlannerSolution solution_from_policy(const BonusEnhancedModel& model, Policy policy, int initial_state, int horizon);

}  // namespace cmdpkit
