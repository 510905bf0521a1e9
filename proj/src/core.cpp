#include "cmdpkit/core.hpp"

#include <cmath>
#include <cstddef>

namespace cmdpkit {

namespace {

constexpr double kRowSumTol = 1e-12;

void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

}  // namespace

MapParseError::MapParseError(const std::string& what, int row_, int col_)
    : std::runtime_error(what + " (row " + std::to_string(row_) + ", col " + std::to_string(col_) + ")"),
      row(row_),
      col(col_) {}

void TransitionModel::validate() const {
    require(num_states > 0 && num_actions > 0, "transition model: empty dimensions");
    require(probs.size() == static_cast<size_t>(num_states) * num_actions * num_states,
            "transition model: storage size mismatch");
    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            double sum = 0.0;
            const double* r = row(s, a);
            for (int s2 = 0; s2 < num_states; ++s2) {
                require(r[s2] >= 0.0, "transition model: negative probability");
                sum += r[s2];
            }
            require(std::abs(sum - 1.0) <= kRowSumTol, "transition model: row does not sum to 1");
        }
    }
}

StageTable ResourceTable::slice(int resource) const {
    require(resource >= 0 && resource < num_resources, "resource index out of range");
    StageTable out(num_states, num_actions);
    for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a) out.at(s, a) = at(s, a, resource);
    return out;
}

Policy Policy::uniform(int S, int A, int H) {
    Policy pi(S, A, H, 1.0 / A);
    return pi;
}

void Policy::validate() const {
    require(num_states > 0 && num_actions > 0 && horizon > 0, "policy: empty dimensions");
    require(probs.size() == static_cast<size_t>(horizon) * num_states * num_actions, "policy: storage size mismatch");
    for (int h = 0; h < horizon; ++h) {
        for (int s = 0; s < num_states; ++s) {
            double sum = 0.0;
            const double* d = dist(h, s);
            for (int a = 0; a < num_actions; ++a) {
                require(d[a] >= 0.0, "policy: negative probability");
                sum += d[a];
            }
            require(std::abs(sum - 1.0) <= kRowSumTol, "policy: distribution does not sum to 1");
        }
    }
}

void MixturePolicy::validate() const {
    require(!components.empty() && weights.size() == components.size(), "mixture: component/weight mismatch");
    double sum = 0.0;
    for (double w : weights) {
        require(w >= 0.0, "mixture: negative weight");
        sum += w;
    }
    require(std::abs(sum - 1.0) <= kRowSumTol, "mixture: weights do not sum to 1");
    for (const Policy& pi : components) pi.validate();
}

void Cmdp::validate() const {
    transitions.validate();
    require(num_states == transitions.num_states && num_actions == transitions.num_actions,
            "cmdp: transition dimensions mismatch");
    require(horizon > 0, "cmdp: horizon must be positive");
    require(num_resources >= 0, "cmdp: negative resource count");
    require(initial_state >= 0 && initial_state < num_states, "cmdp: initial state out of range");
    require(rewards.num_states == num_states && rewards.num_actions == num_actions, "cmdp: reward shape mismatch");
    require(consumption.num_states == num_states && consumption.num_actions == num_actions &&
                consumption.num_resources == num_resources,
            "cmdp: consumption shape mismatch");
    require(static_cast<int>(budgets.size()) == num_resources, "cmdp: budget count mismatch");
    for (double r : rewards.values) require(r >= 0.0 && r <= 1.0, "cmdp: reward outside [0,1]");
    for (double c : consumption.values) require(c >= 0.0 && c <= 1.0, "cmdp: consumption outside [0,1]");
    for (double b : budgets) require(b >= 0.0, "cmdp: negative budget");
}

StageTable Cmdp::objective(const ObjectiveSelector& sel) const {
    if (sel.kind == ObjectiveSelector::Kind::Reward) return rewards;
    return consumption.slice(sel.resource);
}

namespace {

void check_compatible(const TransitionModel& p, const StageTable& m, const Policy& policy, int horizon) {
    require(horizon > 0, "horizon must be positive");
    require(p.num_states == m.num_states && p.num_actions == m.num_actions,
            "objective table incompatible with transition model");
    require(policy.num_states == p.num_states && policy.num_actions == p.num_actions,
            "policy incompatible with transition model");
    require(policy.horizon >= horizon, "policy shorter than requested horizon");
}

}  // namespace

ValueTables evaluate_policy(const TransitionModel& p, const StageTable& m, const Policy& policy, int horizon) {
    check_compatible(p, m, policy, horizon);
    const int S = p.num_states, A = p.num_actions, H = horizon;
    ValueTables vt;
    vt.num_states = S;
    vt.num_actions = A;
    vt.horizon = H;
    vt.q.assign(static_cast<size_t>(H) * S * A, 0.0);
    vt.v.assign(static_cast<size_t>(H + 1) * S, 0.0);
    for (int h = H - 1; h >= 0; --h) {
        const double* vnext = vt.v.data() + static_cast<size_t>(h + 1) * S;
        for (int s = 0; s < S; ++s) {
            double vs = 0.0;
            const double* pd = policy.dist(h, s);
            for (int a = 0; a < A; ++a) {
                const double* row = p.row(s, a);
                double q = m.at(s, a);
                for (int s2 = 0; s2 < S; ++s2) q += row[s2] * vnext[s2];
                vt.qat(h, s, a) = q;
                vs += pd[a] * q;
            }
            vt.vat(h, s) = vs;
        }
    }
    return vt;
}

BellmanErrors bellman_error_table(const TransitionModel& model_p, const StageTable& model_m,
                                  const TransitionModel& true_p, const StageTable& true_m,
                                  const Policy& policy, int horizon) {
    check_compatible(model_p, model_m, policy, horizon);
    require(true_p.num_states == model_p.num_states && true_p.num_actions == model_p.num_actions &&
                true_m.num_states == model_m.num_states && true_m.num_actions == model_m.num_actions,
            "model and true tables have mismatched dimensions");
    const int S = model_p.num_states, A = model_p.num_actions, H = horizon;
    ValueTables vt = evaluate_policy(model_p, model_m, policy, horizon);
    BellmanErrors bell;
    bell.num_states = S;
    bell.num_actions = A;
    bell.horizon = H;
    bell.err.assign(static_cast<size_t>(H) * S * A, 0.0);
    for (int h = 0; h < H; ++h) {
        const double* vnext = vt.v.data() + static_cast<size_t>(h + 1) * S;
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const double* row = true_p.row(s, a);
                double backup = true_m.at(s, a);
                for (int s2 = 0; s2 < S; ++s2) backup += row[s2] * vnext[s2];
                bell.err[(static_cast<size_t>(h) * S + s) * A + a] = vt.qat(h, s, a) - backup;
            }
        }
    }
    return bell;
}

OccupancyMeasure occupancy_from_policy(const TransitionModel& p, const Policy& policy, int initial_state, int horizon) {
    require(policy.num_states == p.num_states && policy.num_actions == p.num_actions,
            "policy incompatible with transition model");
    require(policy.horizon >= horizon && horizon > 0, "policy shorter than requested horizon");
    require(initial_state >= 0 && initial_state < p.num_states, "initial state out of range");
    const int S = p.num_states, A = p.num_actions, H = horizon;
    OccupancyMeasure rho(S, A, H);
    std::vector<double> state_mass(S, 0.0), next_mass(S, 0.0);
    state_mass[initial_state] = 1.0;
    for (int h = 0; h < H; ++h) {
        next_mass.assign(S, 0.0);
        for (int s = 0; s < S; ++s) {
            if (state_mass[s] == 0.0) continue;
            const double* pd = policy.dist(h, s);
            for (int a = 0; a < A; ++a) {
                double w = state_mass[s] * pd[a];
                if (w == 0.0) continue;
                rho.at(h, s, a) = w;
                const double* row = p.row(s, a);
                for (int s2 = 0; s2 < S; ++s2) next_mass[s2] += w * row[s2];
            }
        }
        state_mass.swap(next_mass);
    }
    return rho;
}

Policy policy_from_occupancy(const OccupancyMeasure& rho) {
    const int S = rho.num_states, A = rho.num_actions, H = rho.horizon;
    require(S > 0 && A > 0 && H > 0, "occupancy: empty dimensions");
    constexpr double kNegTol = -1e-10;
    Policy pi(S, A, H);
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            double total = 0.0;
            for (int a = 0; a < A; ++a) {
                double v = rho.at(h, s, a);
                if (v < kNegTol) throw std::invalid_argument("occupancy: negative entry");
                total += std::max(v, 0.0);
            }
            double* d = pi.dist(h, s);
            if (total > 0.0) {
                for (int a = 0; a < A; ++a) d[a] = std::max(rho.at(h, s, a), 0.0) / total;
            } else {
                for (int a = 0; a < A; ++a) d[a] = 1.0 / A;  // unreachable state
            }
        }
    }
    return pi;
}

double expected_total(const OccupancyMeasure& rho, const StageTable& m) {
    require(rho.num_states == m.num_states && rho.num_actions == m.num_actions,
            "objective table incompatible with occupancy");
    double total = 0.0;
    const int S = rho.num_states, A = rho.num_actions;
    for (int h = 0; h < rho.horizon; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) total += rho.at(h, s, a) * m.at(s, a);
    return total;
}

double weighted_total(const OccupancyMeasure& rho, const BellmanErrors& bell) {
    require(rho.num_states == bell.num_states && rho.num_actions == bell.num_actions && rho.horizon == bell.horizon,
            "error cube incompatible with occupancy");
    double total = 0.0;
    for (size_t i = 0; i < rho.mass.size(); ++i) total += rho.mass[i] * bell.err[i];
    return total;
}

double mixture_expected_total(const TransitionModel& p, const MixturePolicy& mix, const StageTable& m,
                              int initial_state, int horizon) {
    double total = 0.0;
    for (size_t j = 0; j < mix.components.size(); ++j) {
        if (mix.weights[j] == 0.0) continue;
        OccupancyMeasure rho = occupancy_from_policy(p, mix.components[j], initial_state, horizon);
        total += mix.weights[j] * expected_total(rho, m);
    }
    return total;
}

OccupancyMeasure mixture_occupancy(const TransitionModel& p, const MixturePolicy& mix, int initial_state, int horizon) {
    OccupancyMeasure acc(p.num_states, p.num_actions, horizon);
    for (size_t j = 0; j < mix.components.size(); ++j) {
        if (mix.weights[j] == 0.0) continue;
        OccupancyMeasure rho = occupancy_from_policy(p, mix.components[j], initial_state, horizon);
        for (size_t i = 0; i < acc.mass.size(); ++i) acc.mass[i] += mix.weights[j] * rho.mass[i];
    }
    return acc;
}

void check_occupancy_invariants(const OccupancyMeasure& rho, const TransitionModel& p, int initial_state,
                                double stage_tol, double flow_tol) {
    const int S = rho.num_states, A = rho.num_actions, H = rho.horizon;
    require(p.num_states == S && p.num_actions == A, "occupancy incompatible with transition model");
    for (double v : rho.mass) require(v >= -1e-12 && v <= 1.0 + 1e-12, "occupancy: entry outside [0,1]");
    for (int h = 0; h < H; ++h) {
        double sum = 0.0;
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) sum += rho.at(h, s, a);
        require(std::abs(sum - 1.0) <= stage_tol, "occupancy: stage mass not 1");
    }
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            if (s != initial_state) require(rho.at(0, s, a) <= stage_tol, "occupancy: stage-1 mass off the initial state");
        }
    }
    std::vector<double> inflow(S, 0.0);
    for (int h = 0; h + 1 < H; ++h) {
        inflow.assign(S, 0.0);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                double w = rho.at(h, s, a);
                if (w == 0.0) continue;
                const double* row = p.row(s, a);
                for (int s2 = 0; s2 < S; ++s2) inflow[s2] += w * row[s2];
            }
        }
        for (int s2 = 0; s2 < S; ++s2) {
            double out = 0.0;
            for (int a = 0; a < A; ++a) out += rho.at(h + 1, s2, a);
            require(std::abs(out - inflow[s2]) <= flow_tol, "occupancy: flow conservation violated");
        }
    }
}

}  // namespace cmdpkit
