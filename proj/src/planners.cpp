#include "cmdpkit/planners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cmdpkit {

namespace {

constexpr double kDualTol = 1e-9;

StageTable combine_reward(const StageTable& r, const ResourceTable& c, std::span<const double> lambda,
                          std::span<const double> offsets) {
    StageTable out = r;
    const int S = r.num_states, A = r.num_actions, d = c.num_resources;
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            double v = out.at(s, a);
            for (int i = 0; i < d; ++i) v += lambda[i] * (c.at(s, a, i) - (offsets.empty() ? 0.0 : offsets[i]));
            out.at(s, a) = v;
        }
    }
    return out;
}

}  // namespace

void LagrConfig::validate() const {
    if (!(eta > 0.0)) throw std::invalid_argument("lagrangian config: eta must be positive");
    if (iterations < 1) throw std::invalid_argument("lagrangian config: iterations must be >= 1");
}

void ConvexSpec::validate() const {
    if (!f || !g) throw std::invalid_argument("convex spec: missing objective handles");
    if (!(lipschitz > 0.0)) throw std::invalid_argument("convex spec: Lipschitz constant must be positive");
}

void KnapsackConfig::validate() const {
    if (budgets.empty()) throw std::invalid_argument("knapsack config: no budgets");
    for (double b : budgets)
        if (b < 0.0) throw std::invalid_argument("knapsack config: negative budget");
    if (total_episodes < 1) throw std::invalid_argument("knapsack config: total episodes must be >= 1");
    if (epsilon && !(*epsilon >= 0.0 && *epsilon <= 1.0))
        throw std::invalid_argument("knapsack config: explicit epsilon outside [0,1]");
    if (!(bound_constant > 0.0)) throw std::invalid_argument("knapsack config: bound constant must be positive");
}

ViResult value_iteration(const TransitionModel& p, const StageTable& r, int horizon) {
    if (p.num_states != r.num_states || p.num_actions != r.num_actions)
        throw std::invalid_argument("value iteration: reward table incompatible with kernel");
    if (horizon <= 0) throw std::invalid_argument("value iteration: horizon must be positive");
    const int S = p.num_states, A = p.num_actions, H = horizon;
    ViResult res;
    res.values.num_states = S;
    res.values.num_actions = A;
    res.values.horizon = H;
    res.values.q.assign(static_cast<size_t>(H) * S * A, 0.0);
    res.values.v.assign(static_cast<size_t>(H + 1) * S, 0.0);
    res.policy = Policy(S, A, H);
    for (int h = H - 1; h >= 0; --h) {
        const double* vnext = res.values.v.data() + static_cast<size_t>(h + 1) * S;
        for (int s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                const double* row = p.row(s, a);
                double q = r.at(s, a);
                for (int s2 = 0; s2 < S; ++s2) q += row[s2] * vnext[s2];
                res.values.qat(h, s, a) = q;
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            res.values.vat(h, s) = best;
            res.policy.at(h, s, best_a) = 1.0;
        }
    }
    return res;
}

LpProblem build_occupancy_lp(const TransitionModel& p, const StageTable& r, const ResourceTable& c,
                             std::span<const double> budgets, int initial_state, int horizon) {
    const int S = p.num_states, A = p.num_actions, H = horizon;
    const int d = static_cast<int>(budgets.size());
    if (c.num_resources != d) throw std::invalid_argument("occupancy lp: budget count mismatch");
    if (initial_state < 0 || initial_state >= S) throw std::invalid_argument("occupancy lp: initial state out of range");
    const int n = S * A * H;
    auto var = [&](int h, int s, int a) { return (h * S + s) * A + a; };

    LpProblem lp;
    lp.num_vars = n;
    lp.objective.assign(n, 0.0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) lp.objective[var(h, s, a)] = r.at(s, a);

    // Stage-one normalization; later stages inherit unit mass through the
    // flow rows. Explicit normalization rows at h >= 2 would be exactly
    // inconsistent whenever kernel rows sum to 1 only up to roundoff, which
    // would poison the exact-rational cross-checks.
    {
        LpRow row;
        row.coeffs.assign(n, 0.0);
        row.rhs = 1.0;
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) row.coeffs[var(0, s, a)] = 1.0;
        lp.eq_rows.push_back(std::move(row));
    }
    for (int h = 0; h + 1 < H; ++h) {
        for (int s2 = 0; s2 < S; ++s2) {
            LpRow row;
            row.coeffs.assign(n, 0.0);
            row.rhs = 0.0;
            for (int a = 0; a < A; ++a) row.coeffs[var(h + 1, s2, a)] = 1.0;
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) row.coeffs[var(h, s, a)] -= p.at(s, a, s2);
            lp.eq_rows.push_back(std::move(row));
        }
    }
    for (int i = 0; i < d; ++i) {
        LpRow row;
        row.coeffs.assign(n, 0.0);
        row.rhs = budgets[i];
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) row.coeffs[var(h, s, a)] = c.at(s, a, i);
        lp.le_rows.push_back(std::move(row));
    }
    lp.lower.assign(n, 0.0);
    lp.upper.assign(n, 1.0);
    for (int s = 0; s < S; ++s) {
        if (s == initial_state) continue;
        for (int a = 0; a < A; ++a) lp.upper[var(0, s, a)] = 0.0;
    }
    return lp;
}

namespace {

struct Column {
    Policy policy;
    OccupancyMeasure occupancy;
    double reward = 0.0;
    std::vector<double> consumption;
};

Column make_column(const BonusEnhancedModel& model, Policy policy, int s0, int H) {
    Column col;
    col.occupancy = occupancy_from_policy(model.p, policy, s0, H);
    col.reward = expected_total(col.occupancy, model.r_plus);
    const int d = model.c_minus.num_resources;
    col.consumption.resize(d);
    for (int i = 0; i < d; ++i) col.consumption[i] = expected_total(col.occupancy, model.c_minus.slice(i));
    col.policy = std::move(policy);
    return col;
}

PlannerSolution solution_from_mixture(const BonusEnhancedModel& model, const std::vector<Column>& columns,
                                      std::span<const double> weights, int H) {
    const int S = model.p.num_states, A = model.p.num_actions;
    const int d = model.c_minus.num_resources;
    PlannerSolution sol;
    sol.occupancy = OccupancyMeasure(S, A, H);
    sol.predicted_consumption.assign(d, 0.0);
    for (size_t j = 0; j < columns.size(); ++j) {
        double w = weights[j];
        if (w <= 0.0) continue;
        for (size_t x = 0; x < sol.occupancy.mass.size(); ++x) sol.occupancy.mass[x] += w * columns[j].occupancy.mass[x];
        sol.predicted_reward += w * columns[j].reward;
        for (int i = 0; i < d; ++i) sol.predicted_consumption[i] += w * columns[j].consumption[i];
    }
    sol.policy = MixturePolicy(policy_from_occupancy(sol.occupancy));
    return sol;
}

}  // namespace

PlannerSolution basic_conplanner(const BonusEnhancedModel& model, std::span<const double> budgets,
                                 int initial_state, int horizon) {
    const int d = static_cast<int>(budgets.size());
    if (model.c_minus.num_resources != d) throw std::invalid_argument("planner: budget count mismatch");
    const int H = horizon;

    std::vector<Column> columns;
    columns.push_back(make_column(model, value_iteration(model.p, model.r_plus, H).policy, initial_state, H));

    if (d == 0) {
        std::vector<double> w{1.0};
        return solution_from_mixture(model, columns, w, H);
    }

    auto price = [&](const StageTable& base, std::span<const double> lambda) {
        StageTable r_lambda = combine_reward(base, model.c_minus, lambda, {});
        return value_iteration(model.p, r_lambda, H);
    };
    const StageTable zero_reward(model.p.num_states, model.p.num_actions, 0.0);
    auto has_policy = [&](const Policy& pi) {
        for (const Column& col : columns)
            if (col.policy == pi) return true;
        return false;
    };

    const int max_iters = 1000;

    // Phase 1: minimize the worst constraint violation over mixtures.
    double feas_slack = 0.0;
    {
        for (int iter = 0;; ++iter) {
            if (iter > max_iters) throw SolverStallError("planner: phase-1 column generation did not converge");
            const int J = static_cast<int>(columns.size());
            LpProblem master;
            master.num_vars = J + 1;  // weights then violation t
            master.objective.assign(J + 1, 0.0);
            master.objective[J] = -1.0;
            LpRow convexity;
            convexity.coeffs.assign(J + 1, 0.0);
            for (int j = 0; j < J; ++j) convexity.coeffs[j] = 1.0;
            convexity.rhs = 1.0;
            master.eq_rows.push_back(std::move(convexity));
            for (int i = 0; i < d; ++i) {
                LpRow row;
                row.coeffs.assign(J + 1, 0.0);
                for (int j = 0; j < J; ++j) row.coeffs[j] = columns[j].consumption[i];
                row.coeffs[J] = -1.0;
                row.rhs = budgets[i];
                master.le_rows.push_back(std::move(row));
            }
            LpSolution ms = solve_lp(master);
            if (ms.status != LpStatus::Optimal) throw SolverStallError("planner: phase-1 master not optimal");
            double violation = ms.values[J];
            if (violation <= kDualTol) {
                feas_slack = std::max(violation, 0.0);
                break;
            }
            double mu = ms.dual_values[0];
            std::vector<double> neg_lambda(d);
            for (int i = 0; i < d; ++i) neg_lambda[i] = -std::max(0.0, ms.dual_values[1 + i]);
            ViResult priced = price(zero_reward, neg_lambda);
            // priced value = max over policies of -sum_i lambda_i E[sum c_i]
            double min_weighted_cons = -priced.values.vat(0, initial_state);
            if (min_weighted_cons >= -mu - kDualTol || has_policy(priced.policy))
                throw PlannerInfeasibleError("planner: constraints infeasible under the model");
            columns.push_back(make_column(model, std::move(priced.policy), initial_state, H));
        }
    }

    // Phase 2: maximize reward over feasible mixtures. The right-hand side
    // keeps the residual slack of phase 1 so the master stays feasible.
    std::vector<double> weights;
    for (int iter = 0;; ++iter) {
        if (iter > max_iters) throw SolverStallError("planner: column generation did not converge");
        const int J = static_cast<int>(columns.size());
        LpProblem master;
        master.num_vars = J;
        master.objective.resize(J);
        for (int j = 0; j < J; ++j) master.objective[j] = columns[j].reward;
        LpRow convexity;
        convexity.coeffs.assign(J, 1.0);
        convexity.rhs = 1.0;
        master.eq_rows.push_back(std::move(convexity));
        for (int i = 0; i < d; ++i) {
            LpRow row;
            row.coeffs.resize(J);
            for (int j = 0; j < J; ++j) row.coeffs[j] = columns[j].consumption[i];
            row.rhs = budgets[i] + feas_slack + 1e-12;
            master.le_rows.push_back(std::move(row));
        }
        LpSolution ms = solve_lp(master);
        if (ms.status != LpStatus::Optimal) throw SolverStallError("planner: master not optimal");
        double mu = ms.dual_values[0];
        std::vector<double> lambda(d);
        for (int i = 0; i < d; ++i) lambda[i] = -std::max(0.0, ms.dual_values[1 + i]);
        ViResult priced = price(model.r_plus, lambda);
        double reduced = priced.values.vat(0, initial_state) - mu;
        double scale = 1.0 + std::abs(mu);
        if (reduced <= kDualTol * scale || has_policy(priced.policy)) {
            weights.assign(J, 0.0);
            for (int j = 0; j < J; ++j) weights[j] = std::max(0.0, ms.values[j]);
            break;
        }
        columns.push_back(make_column(model, std::move(priced.policy), initial_state, H));
    }
    return solution_from_mixture(model, columns, weights, H);
}

PlannerSolution lagr_conplanner(const BonusEnhancedModel& model, std::span<const double> budgets,
                                int initial_state, int horizon, const LagrConfig& cfg) {
    cfg.validate();
    const int d = static_cast<int>(budgets.size());
    if (model.c_minus.num_resources != d) throw std::invalid_argument("planner: budget count mismatch");
    const int H = horizon;

    if (d == 0) {
        return solution_from_policy(model, value_iteration(model.p, model.r_plus, H).policy, initial_state, H);
    }

    // The per-step offset xi/H makes the H-step pseudo-reward total match the
    // Lagrangian of E[sum c] <= xi; it does not change the greedy policy.
    std::vector<double> offsets(d);
    for (int i = 0; i < d; ++i) offsets[i] = budgets[i] / H;

    std::vector<double> lambda(d, 0.0);
    std::vector<Column> columns;
    columns.reserve(cfg.iterations);
    for (int t = 0; t < cfg.iterations; ++t) {
        StageTable r_lambda = combine_reward(model.r_plus, model.c_minus, lambda, offsets);
        ViResult vi = value_iteration(model.p, r_lambda, H);
        Column col = make_column(model, std::move(vi.policy), initial_state, H);
        for (int i = 0; i < d; ++i) {
            double grad = col.consumption[i] - budgets[i];
            lambda[i] = std::min(0.0, lambda[i] - cfg.eta * grad);
        }
        columns.push_back(std::move(col));
    }

    std::vector<double> weights(columns.size(), 1.0 / columns.size());
    PlannerSolution sol = solution_from_mixture(model, columns, weights, H);
    // keep the explicit uniform mixture rather than the collapsed policy
    MixturePolicy mix;
    mix.weights = weights;
    mix.components.reserve(columns.size());
    for (Column& col : columns) mix.components.push_back(std::move(col.policy));
    sol.policy = std::move(mix);
    return sol;
}

namespace {

// 1-D maximization of a concave function by golden-section search.
double golden_section_max(const std::function<double(double)>& f, double lo, double hi, double width_tol = 1e-10) {
    if (hi <= lo) return lo;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > width_tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

struct ConvexEval {
    double F = 0.0;
    double G = 0.0;
    double t_hat = 0.0;               // inner-selected total reward
    std::vector<double> u_star;       // inner-selected total consumption
    std::vector<double> grad_f;       // d/drho of F, per (s,a)
    std::vector<double> grad_g;       // d/drho of G, per (s,a)
};

class ConvexProblem {
public:
    ConvexProblem(const BonusEnhancedModel& model, const ConvexSpec& spec, const ConvexBudget& budget)
        : model_(model), spec_(spec), budget_(budget) {
        const int S = model.p.num_states, A = model.p.num_actions;
        d_ = model.c_minus.num_resources;
        r_hi_ = model.r_plus;
        r_lo_ = model.r_plus;
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) r_lo_.at(s, a) -= 2.0 * model.bonus.at(s, a);
        c_lo_.reserve(d_);
        c_hi_.reserve(d_);
        c_mid_.reserve(d_);
        for (int i = 0; i < d_; ++i) {
            StageTable lo = model.c_minus.slice(i);
            StageTable hi = lo, mid = lo;
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    hi.at(s, a) += 2.0 * model.bonus.at(s, a);
                    mid.at(s, a) += model.bonus.at(s, a);
                }
            c_lo_.push_back(std::move(lo));
            c_hi_.push_back(std::move(hi));
            c_mid_.push_back(std::move(mid));
        }
    }

    int resources() const { return d_; }

    ConvexEval evaluate(const OccupancyMeasure& rho, bool with_gradients) const {
        const int S = model_.p.num_states, A = model_.p.num_actions;
        ConvexEval ev;
        double lo = expected_total(rho, r_lo_), hi = expected_total(rho, r_hi_);
        ev.t_hat = golden_section_max(spec_.f, lo, hi);
        ev.F = spec_.f(ev.t_hat);

        std::vector<double> u_lo(d_), u_hi(d_);
        for (int i = 0; i < d_; ++i) {
            u_lo[i] = expected_total(rho, c_lo_[i]);
            u_hi[i] = expected_total(rho, c_hi_[i]);
        }
        ev.u_star = box_min(u_lo, u_hi);
        ev.G = spec_.g(ev.u_star);

        if (!with_gradients) return ev;
        ev.grad_f.assign(static_cast<size_t>(S) * A, 0.0);
        ev.grad_g.assign(static_cast<size_t>(S) * A, 0.0);
        const double edge = 1e-9 * (1.0 + std::abs(hi - lo));
        const double fh = 1e-6;
        if (ev.t_hat >= hi - edge) {
            double fp = (spec_.f(hi + fh) - spec_.f(hi - fh)) / (2.0 * fh);
            for (size_t x = 0; x < ev.grad_f.size(); ++x) ev.grad_f[x] = fp * r_hi_.values[x];
        } else if (ev.t_hat <= lo + edge) {
            double fp = (spec_.f(lo + fh) - spec_.f(lo - fh)) / (2.0 * fh);
            for (size_t x = 0; x < ev.grad_f.size(); ++x) ev.grad_f[x] = fp * r_lo_.values[x];
        }
        // interior maximizer: F locally flat, gradient stays zero

        std::vector<double> gp(d_);
        std::vector<double> probe = ev.u_star;
        for (int i = 0; i < d_; ++i) {
            double h = 1e-6;
            probe[i] = ev.u_star[i] + h;
            double up = spec_.g(probe);
            probe[i] = ev.u_star[i] - h;
            double dn = spec_.g(probe);
            probe[i] = ev.u_star[i];
            gp[i] = (up - dn) / (2.0 * h);
        }
        for (int i = 0; i < d_; ++i) {
            double width = u_hi[i] - u_lo[i];
            double alpha = 0.0;
            if (width > 1e-12) alpha = 2.0 * (ev.u_star[i] - u_lo[i]) / width - 1.0;  // in [-1,1]
            const StageTable& base = c_mid_[i];
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    size_t x = static_cast<size_t>(s) * A + a;
                    ev.grad_g[x] += gp[i] * (base.at(s, a) + alpha * model_.bonus.at(s, a));
                }
        }
        return ev;
    }

private:
    // Projected-gradient minimization of g over the box [u_lo, u_hi].
    std::vector<double> box_min(const std::vector<double>& u_lo, const std::vector<double>& u_hi) const {
        std::vector<double> u(d_);
        double diam = 0.0;
        for (int i = 0; i < d_; ++i) {
            u[i] = 0.5 * (u_lo[i] + u_hi[i]);
            diam = std::max(diam, u_hi[i] - u_lo[i]);
        }
        if (d_ == 0 || diam == 0.0) return u;
        std::vector<double> grad(d_), probe(u), best(u);
        double best_val = spec_.g(u);
        const double lip = std::max(spec_.lipschitz, 1e-6);
        for (int it = 0; it < budget_.box_min_iterations; ++it) {
            for (int i = 0; i < d_; ++i) {
                double h = std::max(1e-9, 1e-7 * diam);
                probe[i] = u[i] + h;
                double up = spec_.g(probe);
                probe[i] = u[i] - h;
                double dn = spec_.g(probe);
                probe[i] = u[i];
                grad[i] = (up - dn) / (2.0 * h);
            }
            double step = diam / (lip * std::sqrt(static_cast<double>(it) + 1.0));
            for (int i = 0; i < d_; ++i) {
                u[i] = std::clamp(u[i] - step * grad[i], u_lo[i], u_hi[i]);
                probe[i] = u[i];
            }
            double val = spec_.g(u);
            if (val < best_val) {
                best_val = val;
                best = u;
            }
        }
        return best;
    }

    const BonusEnhancedModel& model_;
    const ConvexSpec& spec_;
    const ConvexBudget& budget_;
    int d_ = 0;
    StageTable r_lo_, r_hi_;
    std::vector<StageTable> c_lo_, c_hi_, c_mid_;
};

}  // namespace

PlannerSolution convex_conplanner(const BonusEnhancedModel& model, const ConvexSpec& spec, int initial_state,
                                  int horizon, const ConvexBudget& budget) {
    spec.validate();
    const int S = model.p.num_states, A = model.p.num_actions, H = horizon;
    ConvexProblem prob(model, spec, budget);
    const int d = prob.resources();

    auto fw_maximize = [&](double lambda) {
        // Frank-Wolfe on F - lambda G with value iteration as linear oracle.
        OccupancyMeasure rho = occupancy_from_policy(model.p, value_iteration(model.p, model.r_plus, H).policy,
                                                     initial_state, H);
        for (int it = 0; it < budget.frank_wolfe_iterations; ++it) {
            ConvexEval ev = prob.evaluate(rho, true);
            StageTable dir(S, A);
            for (size_t x = 0; x < dir.values.size(); ++x)
                dir.values[x] = ev.grad_f[x] - lambda * (d > 0 ? ev.grad_g[x] : 0.0);
            Policy vertex_pi = value_iteration(model.p, dir, H).policy;
            OccupancyMeasure vertex = occupancy_from_policy(model.p, vertex_pi, initial_state, H);
            double gamma = 2.0 / (it + 2.0);
            bool same = true;
            for (size_t x = 0; x < rho.mass.size(); ++x) {
                double next = (1.0 - gamma) * rho.mass[x] + gamma * vertex.mass[x];
                if (std::abs(next - rho.mass[x]) > 1e-15) same = false;
                rho.mass[x] = next;
            }
            if (same) break;
        }
        return rho;
    };

    struct Candidate {
        OccupancyMeasure rho;
        ConvexEval ev;
        bool valid = false;
    };
    Candidate best;
    auto consider = [&](const OccupancyMeasure& rho) {
        ConvexEval ev = prob.evaluate(rho, false);
        if (d == 0 || ev.G <= budget.feasibility_tol) {
            if (!best.valid || ev.F > best.ev.F) {
                best.rho = rho;
                best.ev = ev;
                best.valid = true;
            }
        }
        return ev;
    };

    OccupancyMeasure rho0 = fw_maximize(0.0);
    ConvexEval ev0 = consider(rho0);

    if (d > 0 && ev0.G > budget.feasibility_tol) {
        // Feasibility probe: minimize G alone.
        auto fw_min_g = [&]() {
            OccupancyMeasure rho = rho0;
            for (int it = 0; it < budget.frank_wolfe_iterations; ++it) {
                ConvexEval ev = prob.evaluate(rho, true);
                StageTable dir(S, A);
                for (size_t x = 0; x < dir.values.size(); ++x) dir.values[x] = -ev.grad_g[x];
                OccupancyMeasure vertex = occupancy_from_policy(
                    model.p, value_iteration(model.p, dir, H).policy, initial_state, H);
                double gamma = 2.0 / (it + 2.0);
                for (size_t x = 0; x < rho.mass.size(); ++x)
                    rho.mass[x] = (1.0 - gamma) * rho.mass[x] + gamma * vertex.mass[x];
            }
            return rho;
        };
        OccupancyMeasure rho_feas = fw_min_g();
        ConvexEval ev_feas = consider(rho_feas);
        if (ev_feas.G > budget.feasibility_tol)
            throw PlannerInfeasibleError("convex planner: no feasible occupancy found within budget");

        // Bracket the multiplier, then bisect.
        double lam_lo = 0.0, lam_hi = 1.0;
        OccupancyMeasure rho_plus = rho0;   // infeasible side
        OccupancyMeasure rho_minus = rho_feas;  // feasible side
        bool bracketed = false;
        for (int it = 0; it < budget.dual_doublings; ++it) {
            OccupancyMeasure rho = fw_maximize(lam_hi);
            ConvexEval ev = consider(rho);
            if (ev.G <= budget.feasibility_tol) {
                rho_minus = rho;
                bracketed = true;
                break;
            }
            rho_plus = rho;
            lam_lo = lam_hi;
            lam_hi *= 2.0;
        }
        if (bracketed) {
            for (int it = 0; it < budget.dual_bisections; ++it) {
                double lam = 0.5 * (lam_lo + lam_hi);
                OccupancyMeasure rho = fw_maximize(lam);
                ConvexEval ev = consider(rho);
                if (ev.G <= budget.feasibility_tol) {
                    lam_hi = lam;
                    rho_minus = rho;
                } else {
                    lam_lo = lam;
                    rho_plus = rho;
                }
            }
        }
        // Segment interpolation toward the constraint boundary.
        {
            double theta_lo = 0.0, theta_hi = 1.0;  // 0 -> rho_minus, 1 -> rho_plus
            OccupancyMeasure mix = rho_minus;
            for (int it = 0; it < 60; ++it) {
                double theta = 0.5 * (theta_lo + theta_hi);
                for (size_t x = 0; x < mix.mass.size(); ++x)
                    mix.mass[x] = (1.0 - theta) * rho_minus.mass[x] + theta * rho_plus.mass[x];
                ConvexEval ev = prob.evaluate(mix, false);
                if (ev.G <= budget.feasibility_tol)
                    theta_lo = theta;
                else
                    theta_hi = theta;
            }
            for (size_t x = 0; x < mix.mass.size(); ++x)
                mix.mass[x] = (1.0 - theta_lo) * rho_minus.mass[x] + theta_lo * rho_plus.mass[x];
            consider(mix);
        }
    }

    if (!best.valid) throw PlannerInfeasibleError("convex planner: no feasible occupancy found within budget");

    PlannerSolution sol;
    sol.occupancy = best.rho;
    sol.policy = MixturePolicy(policy_from_occupancy(best.rho));
    sol.predicted_reward = best.ev.t_hat;
    sol.predicted_consumption = best.ev.u_star;
    return sol;
}

double agg_reg_bound(long long k, int S, int A, int H, int d, double delta, double c_const) {
    if (k < 1) throw std::invalid_argument("agg_reg_bound: k must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("agg_reg_bound: delta outside (0,1)");
    const double kk = static_cast<double>(k);
    const double sahd = static_cast<double>(S) * A * H * (d + 1);
    double term1 = (c_const / std::sqrt(kk)) * std::pow(static_cast<double>(H), 2.5) * S * std::sqrt(static_cast<double>(A)) *
                   std::sqrt(std::log(kk) * std::log(sahd * kk / delta));
    double term2 = (c_const / kk) * std::pow(static_cast<double>(S), 1.5) * A * std::pow(static_cast<double>(H), 3) *
                   std::sqrt(std::log(2.0 * sahd * kk / delta));
    return kk * (term1 + term2);
}

double epsilon_for_knapsack(double aggreg, std::span<const double> budgets) {
    if (aggreg < 0.0) throw std::invalid_argument("epsilon_for_knapsack: negative aggregate regret");
    if (budgets.empty()) throw std::invalid_argument("epsilon_for_knapsack: no budgets");
    double min_b = *std::min_element(budgets.begin(), budgets.end());
    if (!(min_b > 0.0)) throw ConfigError("epsilon_for_knapsack: budgets must be positive");
    double eps = aggreg / min_b;
    if (eps >= 1.0) throw ConfigError("epsilon_for_knapsack: min budget does not exceed the aggregate regret bound");
    return eps;
}

double resolve_knapsack_epsilon(const KnapsackConfig& cfg, double delta, int S, int A, int H, int d) {
    cfg.validate();
    if (cfg.epsilon) return *cfg.epsilon;
    double aggreg = agg_reg_bound(cfg.total_episodes, S, A, H, d, delta, cfg.bound_constant);
    return epsilon_for_knapsack(aggreg, cfg.budgets);
}

PlannerSolution knapsack_conplanner(const BonusEnhancedModel& model, const KnapsackConfig& cfg, double epsilon,
                                    int null_action, int initial_state, int horizon) {
    cfg.validate();
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("knapsack planner: epsilon outside [0,1]");
    if (null_action < 0 || null_action >= model.p.num_actions)
        throw std::invalid_argument("knapsack planner: null action out of range");
    std::vector<double> xi(cfg.budgets.size());
    for (size_t i = 0; i < xi.size(); ++i) xi[i] = (1.0 - epsilon) * cfg.budgets[i] / static_cast<double>(cfg.total_episodes);
    try {
        return basic_conplanner(model, xi, initial_state, horizon);
    } catch (const PlannerInfeasibleError&) {
        PlannerSolution sol = solution_from_policy(
            model, constant_policy(model.p.num_states, model.p.num_actions, horizon, null_action), initial_state,
            horizon);
        sol.null_fallback = true;
        return sol;
    }
}

Policy constant_policy(int S, int A, int H, int action) {
    if (action < 0 || action >= A) throw std::invalid_argument("constant policy: action out of range");
    Policy pi(S, A, H);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) pi.at(h, s, action) = 1.0;
    return pi;
}

PlannerSolution solution_from_policy(const BonusEnhancedModel& model, Policy policy, int initial_state, int horizon) {
    PlannerSolution sol;
    sol.occupancy = occupancy_from_policy(model.p, policy, initial_state, horizon);
    sol.predicted_reward = expected_total(sol.occupancy, model.r_plus);
    const int d = model.c_minus.num_resources;
    sol.predicted_consumption.resize(d);
    for (int i = 0; i < d; ++i) sol.predicted_consumption[i] = expected_total(sol.occupancy, model.c_minus.slice(i));
    sol.policy = MixturePolicy(std::move(policy));
    return sol;
}

}  // namespace cmdpkit
