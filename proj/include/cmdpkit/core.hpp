#pragma once

#include <stdexcept>
#include <string>
#include <vector>

// Tabular constrained-MDP primitives: model tables, policies, occupancy
// measures, finite-horizon dynamic programming and Bellman errors.
//
// Conventions used across the library:
//   - states s in [0,S), actions a in [0,A), resources i in [0,d)
//   - stages h in [0,H) with an implicit zero terminal layer at h = H
//   - stage-major storage: cube[h][s][a] flattened as (h*S + s)*A + a

namespace cmdpkit {

class PlannerInfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SolverStallError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MapParseError : public std::runtime_error {
public:
    MapParseError(const std::string& what, int row, int col);
    int row, col;
};

/// Transition kernel p(s'|s,a), rows stored contiguously per (s,a).
struct TransitionModel {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> probs;  // [s][a][s'], size S*A*S

    TransitionModel() = default;
    TransitionModel(int S, int A) : num_states(S), num_actions(A), probs(static_cast<size_t>(S) * A * S, 0.0) {}

    double& at(int s, int a, int s2) { return probs[(static_cast<size_t>(s) * num_actions + a) * num_states + s2]; }
    double at(int s, int a, int s2) const { return probs[(static_cast<size_t>(s) * num_actions + a) * num_states + s2]; }
    const double* row(int s, int a) const { return probs.data() + (static_cast<size_t>(s) * num_actions + a) * num_states; }
    double* row(int s, int a) { return probs.data() + (static_cast<size_t>(s) * num_actions + a) * num_states; }

    // every row must be a probability distribution (sum 1 within 1e-12)
    void validate() const;
};

/// Per-(s,a) scalar table; used for rewards, single-resource consumption and
/// exploration bonuses. Values may leave [0,1] for bonus-enhanced objectives.
struct StageTable {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> values;  // [s][a]

    StageTable() = default;
    StageTable(int S, int A, double fill = 0.0) : num_states(S), num_actions(A), values(static_cast<size_t>(S) * A, fill) {}

    double& at(int s, int a) { return values[static_cast<size_t>(s) * num_actions + a]; }
    double at(int s, int a) const { return values[static_cast<size_t>(s) * num_actions + a]; }
};

/// Per-(s,a,i) consumption table for d resources.
struct ResourceTable {
    int num_states = 0;
    int num_actions = 0;
    int num_resources = 0;
    std::vector<double> values;  // [s][a][i]

    ResourceTable() = default;
    ResourceTable(int S, int A, int d, double fill = 0.0)
        : num_states(S), num_actions(A), num_resources(d), values(static_cast<size_t>(S) * A * d, fill) {}

    double& at(int s, int a, int i) { return values[(static_cast<size_t>(s) * num_actions + a) * num_resources + i]; }
    double at(int s, int a, int i) const { return values[(static_cast<size_t>(s) * num_actions + a) * num_resources + i]; }

    StageTable slice(int resource) const;
};

/// Time-dependent stochastic policy pi_h(a|s); one distribution per (h,s).
struct Policy {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    std::vector<double> probs;  // [h][s][a]

    Policy() = default;
    Policy(int S, int A, int H, double fill = 0.0)
        : num_states(S), num_actions(A), horizon(H), probs(static_cast<size_t>(H) * S * A, fill) {}

    double& at(int h, int s, int a) { return probs[(static_cast<size_t>(h) * num_states + s) * num_actions + a]; }
    double at(int h, int s, int a) const { return probs[(static_cast<size_t>(h) * num_states + s) * num_actions + a]; }
    const double* dist(int h, int s) const { return probs.data() + (static_cast<size_t>(h) * num_states + s) * num_actions; }
    double* dist(int h, int s) { return probs.data() + (static_cast<size_t>(h) * num_states + s) * num_actions; }

    static Policy uniform(int S, int A, int H);
    void validate() const;

    bool operator==(const Policy& other) const = default;
};

/// Convex combination of policies, executed by sampling one component per
/// episode.
struct MixturePolicy {
    std::vector<double> weights;
    std::vector<Policy> components;

    MixturePolicy() = default;
    explicit MixturePolicy(Policy single) : weights{1.0}, components{std::move(single)} {}

    void validate() const;
};

/// Q[h][s][a] for h in [0,H) and V[h][s] for h in [0,H]; V[H][.] == 0.
struct ValueTables {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    std::vector<double> q;  // [h][s][a]
    std::vector<double> v;  // [h][s], h <= H

    double& qat(int h, int s, int a) { return q[(static_cast<size_t>(h) * num_states + s) * num_actions + a]; }
    double qat(int h, int s, int a) const { return q[(static_cast<size_t>(h) * num_states + s) * num_actions + a]; }
    double& vat(int h, int s) { return v[static_cast<size_t>(h) * num_states + s]; }
    double vat(int h, int s) const { return v[static_cast<size_t>(h) * num_states + s]; }
};

/// State-action-stage distribution rho(s,a,h) induced by a policy.
struct OccupancyMeasure {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    std::vector<double> mass;  // [h][s][a]

    OccupancyMeasure() = default;
    OccupancyMeasure(int S, int A, int H)
        : num_states(S), num_actions(A), horizon(H), mass(static_cast<size_t>(H) * S * A, 0.0) {}

    double& at(int h, int s, int a) { return mass[(static_cast<size_t>(h) * num_states + s) * num_actions + a]; }
    double at(int h, int s, int a) const { return mass[(static_cast<size_t>(h) * num_states + s) * num_actions + a]; }
};

/// Per-(s,a,h) Bellman error of a model pair against the true pair.
struct BellmanErrors {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    std::vector<double> err;  // [h][s][a]

    double at(int h, int s, int a) const { return err[(static_cast<size_t>(h) * num_states + s) * num_actions + a]; }
};

/// Selects which scalar objective of a cMDP an operation refers to.
struct ObjectiveSelector {
    enum class Kind { Reward, Resource };
    Kind kind = Kind::Reward;
    int resource = -1;

    static ObjectiveSelector reward() { return {Kind::Reward, -1}; }
    static ObjectiveSelector resource_index(int i) { return {Kind::Resource, i}; }
};

/// Full tabular constrained MDP.
struct Cmdp {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    int num_resources = 0;
    int initial_state = 0;
    TransitionModel transitions;
    StageTable rewards;
    ResourceTable consumption;
    std::vector<double> budgets;  // xi, one per resource

    void validate() const;
    StageTable objective(const ObjectiveSelector& sel) const;
};

// --- operations -----------------------------------------------------------

// Backward recursion Q(s,a,h) = m(s,a) + sum_s' p(s'|s,a) V(s',h+1),
// V(s,h) = E_{a~pi_h(s)} Q(s,a,h), V(.,H) = 0.
ValueTables evaluate_policy(const TransitionModel& p, const StageTable& m, const Policy& policy, int horizon);

// Bell(s,a,h) = Q_m^{pi,p}(s,a,h) - (m*(s,a) + sum_s' p*(s'|s,a) V_m^{pi,p}(s',h+1))
BellmanErrors bellman_error_table(const TransitionModel& model_p, const StageTable& model_m,
                                  const TransitionModel& true_p, const StageTable& true_m,
                                  const Policy& policy, int horizon);

OccupancyMeasure occupancy_from_policy(const TransitionModel& p, const Policy& policy, int initial_state, int horizon);

// pi_h(a|s) = rho(s,a,h) / sum_a rho(s,a,h); uniform where the state carries
// no mass at stage h.
Policy policy_from_occupancy(const OccupancyMeasure& rho);

double expected_total(const OccupancyMeasure& rho, const StageTable& m);

// Occupancy-weighted sum of a per-(s,a,h) error cube; used by the
// simulation-lemma identity checks.
double weighted_total(const OccupancyMeasure& rho, const BellmanErrors& bell);

// Exact expected totals of a mixture policy under a given kernel.
double mixture_expected_total(const TransitionModel& p, const MixturePolicy& mix, const StageTable& m,
                              int initial_state, int horizon);

// Occupancy of a mixture: convex combination of component occupancies.
OccupancyMeasure mixture_occupancy(const TransitionModel& p, const MixturePolicy& mix, int initial_state, int horizon);

// Invariant checks (throw std::invalid_argument with a description).
void check_occupancy_invariants(const OccupancyMeasure& rho, const TransitionModel& p, int initial_state,
                                double stage_tol = 1e-10, double flow_tol = 1e-10);

}  // namespace cmdpkit
