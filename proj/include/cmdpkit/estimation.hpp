#pragma once

#include <iosfwd>
#include <span>

#include "cmdpkit/core.hpp"

// Online sufficient statistics, the plug-in empirical model, and the clipped
// exploration bonus producing the optimism-enhanced planning model.

namespace cmdpkit {

/// Mutable accumulator of per-(s,a) visit statistics. Owned by a single run
/// loop; snapshots derived from it are immutable.
struct Counts {
    int num_states = 0;
    int num_actions = 0;
    int num_resources = 0;
    long long episodes_seen = 0;
    std::vector<long long> visits;             // [s][a]
    std::vector<long long> transition_counts;  // [s][a][s']
    std::vector<double> reward_sum;            // [s][a]
    std::vector<double> consumption_sum;       // [s][a][i]

    Counts() = default;
    Counts(int S, int A, int d);

    long long visit(int s, int a) const { return visits[static_cast<size_t>(s) * num_actions + a]; }
    long long transition(int s, int a, int s2) const {
        return transition_counts[(static_cast<size_t>(s) * num_actions + a) * num_states + s2];
    }

    // One observed environment step. Out-of-range reward/consumption signals
    // a corrupted environment and throws.
    void record_step(int s, int a, double reward, std::span<const double> consumption, int next_state);

    void save(std::ostream& out) const;
    static Counts load(std::istream& in);
};

struct EmpiricalModel {
    TransitionModel p_hat;
    StageTable r_hat;
    ResourceTable c_hat;
};

struct BonusConfig {
    double delta = 0.1;
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    int num_resources = 0;

    void validate() const;
};

/// Optimism-enhanced planning model: rewards raised and consumptions lowered
/// by the bonus, transitions left at the empirical estimate. Neither r_plus
/// nor c_minus is clipped back into [0,1]. The bonus itself is retained so
/// planners that need the underlying boxes [r_hat +- b], [c_hat +- b] can
/// recover them.
struct BonusEnhancedModel {
    TransitionModel p;
    StageTable r_plus;
    ResourceTable c_minus;
    StageTable bonus;

    StageTable r_hat() const;
    ResourceTable c_hat() const;
};

/// Plug-in estimates; unvisited pairs get zero reward/consumption and a
/// uniform transition row so the kernel stays stochastic.
EmpiricalModel empirical_model(const Counts& counts);

/// b(s,a) = min{ 2H, H * sqrt(2 ln(8 S A H (d+1) k^2 / delta) / max{1, N(s,a)}) }
StageTable compute_bonus(const Counts& counts, long long episode_index, const BonusConfig& cfg);

BonusEnhancedModel bonus_enhanced_model(const EmpiricalModel& emp, const StageTable& bonus);

/// Truth wrapped as a zero-bonus planning model (used for benchmarks).
BonusEnhancedModel exact_model(const Cmdp& cmdp);

}  // namespace cmdpkit
