#include "cmdpkit/oracles.hpp"

#include <cmath>
#include <cstddef>

namespace cmdpkit::oracle {

namespace {

void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

}  // namespace

RationalLp RationalLp::from_double(const LpProblem& p) {
    p.validate();
    RationalLp q;
    q.num_vars = p.num_vars;
    q.objective.reserve(p.num_vars);
    for (double v : p.objective) q.objective.emplace_back(v);
    for (const LpRow& r : p.eq_rows) {
        std::vector<Rational> row;
        row.reserve(r.coeffs.size());
        for (double v : r.coeffs) row.emplace_back(v);
        q.eq_rows.push_back(std::move(row));
        q.eq_rhs.emplace_back(r.rhs);
    }
    for (const LpRow& r : p.le_rows) {
        std::vector<Rational> row;
        row.reserve(r.coeffs.size());
        for (double v : r.coeffs) row.emplace_back(v);
        q.le_rows.push_back(std::move(row));
        q.le_rhs.emplace_back(r.rhs);
    }
    q.lower.assign(p.num_vars, Rational(0));
    q.upper.assign(p.num_vars, Rational(0));
    q.has_upper.assign(p.num_vars, false);
    for (int j = 0; j < p.num_vars; ++j) {
        if (!p.lower.empty()) q.lower[j] = Rational(p.lower[j]);
        if (!p.upper.empty() && std::isfinite(p.upper[j])) {
            q.upper[j] = Rational(p.upper[j]);
            q.has_upper[j] = true;
        }
    }
    return q;
}

namespace {

// Full-artificial-basis rational simplex. Kept structurally separate from the
// floating-point solver on purpose: the two act as cross-checks.
class RationalSimplex {
public:
    explicit RationalSimplex(const RationalLp& p) : p_(p) {}

    RationalLpSolution solve() {
        build();
        if (!phase1()) return {LpStatus::Infeasible, {}, 0};
        if (!phase2()) return {LpStatus::Unbounded, {}, 0};
        return extract();
    }

private:
    const RationalLp& p_;
    int n_active_ = 0;
    int m_ = 0;
    int total_cols_ = 0;
    std::vector<int> col_of_;
    std::vector<std::vector<Rational>> rows_;  // m x (total_cols + 1)
    std::vector<Rational> cost_;               // total_cols + 1
    std::vector<int> basis_;
    int art_begin_ = 0;

    void build() {
        const int n = p_.num_vars;
        col_of_.assign(n, -1);
        for (int j = 0; j < n; ++j) {
            if (!p_.has_upper[j] || p_.upper[j] > p_.lower[j]) col_of_[j] = n_active_++;
        }
        struct Raw {
            std::vector<Rational> a;
            Rational b;
            bool is_eq;
        };
        std::vector<Raw> raw;
        auto add = [&](const std::vector<Rational>& coeffs, const Rational& rhs, bool is_eq) {
            Raw r;
            r.a.assign(n_active_, Rational(0));
            r.b = rhs;
            for (int j = 0; j < n; ++j) {
                r.b -= coeffs[j] * p_.lower[j];
                if (col_of_[j] >= 0) r.a[col_of_[j]] = coeffs[j];
            }
            r.is_eq = is_eq;
            raw.push_back(std::move(r));
        };
        for (size_t i = 0; i < p_.eq_rows.size(); ++i) add(p_.eq_rows[i], p_.eq_rhs[i], true);
        for (size_t i = 0; i < p_.le_rows.size(); ++i) add(p_.le_rows[i], p_.le_rhs[i], false);
        for (int j = 0; j < n; ++j) {
            if (col_of_[j] >= 0 && p_.has_upper[j]) {
                Raw r;
                r.a.assign(n_active_, Rational(0));
                r.a[col_of_[j]] = 1;
                r.b = p_.upper[j] - p_.lower[j];
                r.is_eq = false;
                raw.push_back(std::move(r));
            }
        }
        m_ = static_cast<int>(raw.size());
        int num_slack = 0;
        for (const Raw& r : raw)
            if (!r.is_eq) ++num_slack;
        art_begin_ = n_active_ + num_slack;
        total_cols_ = art_begin_ + m_;
        rows_.assign(m_, std::vector<Rational>(total_cols_ + 1, Rational(0)));
        basis_.assign(m_, -1);
        int slack_idx = n_active_;
        for (int i = 0; i < m_; ++i) {
            Raw& r = raw[i];
            bool neg = r.b < 0;
            for (int j = 0; j < n_active_; ++j) rows_[i][j] = neg ? -r.a[j] : r.a[j];
            rows_[i][total_cols_] = neg ? -r.b : r.b;
            if (!r.is_eq) {
                rows_[i][slack_idx] = neg ? Rational(-1) : Rational(1);
                ++slack_idx;
            }
            rows_[i][art_begin_ + i] = 1;
            basis_[i] = art_begin_ + i;
        }
    }

    void pivot(int pr, int pc) {
        Rational pv = rows_[pr][pc];
        for (Rational& v : rows_[pr]) v /= pv;
        for (int i = 0; i < m_; ++i) {
            if (i == pr) continue;
            Rational f = rows_[i][pc];
            if (f == 0) continue;
            for (int j = 0; j <= total_cols_; ++j) rows_[i][j] -= f * rows_[pr][j];
        }
        Rational f = cost_[pc];
        if (f != 0) {
            for (int j = 0; j <= total_cols_; ++j) cost_[j] -= f * rows_[pr][j];
        }
        basis_[pr] = pc;
    }

    // Bland's rule, exact arithmetic, minimization.
    bool run(const std::vector<bool>& allowed, bool* unbounded) {
        while (true) {
            int enter = -1;
            for (int j = 0; j < total_cols_; ++j) {
                if (allowed[j] && cost_[j] < 0) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return true;
            int leave = -1;
            Rational best;
            for (int i = 0; i < m_; ++i) {
                if (rows_[i][enter] <= 0) continue;
                Rational ratio = rows_[i][total_cols_] / rows_[i][enter];
                if (leave < 0 || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave < 0) {
                if (unbounded) *unbounded = true;
                return false;
            }
            pivot(leave, enter);
        }
    }

    bool phase1() {
        cost_.assign(total_cols_ + 1, Rational(0));
        for (int j = art_begin_; j < total_cols_; ++j) cost_[j] = 1;
        for (int i = 0; i < m_; ++i) {
            for (int j = 0; j <= total_cols_; ++j) cost_[j] -= rows_[i][j];
        }
        std::vector<bool> allowed(total_cols_, true);
        run(allowed, nullptr);
        if (-cost_[total_cols_] != 0) return false;
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] < art_begin_) continue;
            int pc = -1;
            for (int j = 0; j < art_begin_; ++j) {
                if (rows_[i][j] != 0) {
                    pc = j;
                    break;
                }
            }
            if (pc >= 0) pivot(i, pc);
        }
        return true;
    }

    bool phase2() {
        cost_.assign(total_cols_ + 1, Rational(0));
        for (int v = 0; v < p_.num_vars; ++v) {
            if (col_of_[v] >= 0) cost_[col_of_[v]] = -p_.objective[v];
        }
        std::vector<Rational> base_cost(cost_);
        for (int i = 0; i < m_; ++i) {
            Rational cb = base_cost[basis_[i]];
            if (cb != 0) {
                for (int j = 0; j <= total_cols_; ++j) cost_[j] -= cb * rows_[i][j];
            }
        }
        std::vector<bool> allowed(total_cols_, true);
        for (int j = art_begin_; j < total_cols_; ++j) allowed[j] = false;
        bool unbounded = false;
        run(allowed, &unbounded);
        return !unbounded;
    }

    RationalLpSolution extract() {
        RationalLpSolution sol;
        sol.status = LpStatus::Optimal;
        sol.values.assign(p_.num_vars, Rational(0));
        std::vector<Rational> y(n_active_, Rational(0));
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] < n_active_) y[basis_[i]] = rows_[i][total_cols_];
        }
        for (int v = 0; v < p_.num_vars; ++v) {
            sol.values[v] = p_.lower[v] + (col_of_[v] >= 0 ? y[col_of_[v]] : Rational(0));
        }
        sol.objective_value = 0;
        for (int v = 0; v < p_.num_vars; ++v) sol.objective_value += p_.objective[v] * sol.values[v];
        return sol;
    }
};

}  // namespace

RationalLpSolution solve_lp_exact(const RationalLp& problem) {
    require(problem.num_vars <= 60, "rational lp oracle: more than 60 variables");
    require(problem.eq_rows.size() + problem.le_rows.size() <= 60, "rational lp oracle: more than 60 rows");
    require(static_cast<int>(problem.objective.size()) == problem.num_vars, "rational lp oracle: objective size mismatch");
    for (int j = 0; j < problem.num_vars; ++j) require(problem.lower[j] >= 0, "rational lp oracle: negative lower bound");
    RationalSimplex solver(problem);
    return solver.solve();
}

std::vector<EnumeratedPolicy> enumerate_policies(const Cmdp& cmdp, int horizon) {
    const int S = cmdp.num_states, A = cmdp.num_actions, H = horizon;
    const double count = std::pow(static_cast<double>(A), static_cast<double>(S) * H);
    require(count <= 1e6, "enumerate_policies: A^(S*H) exceeds 1e6");
    const int slots = S * H;
    std::vector<int> choice(slots, 0);
    std::vector<EnumeratedPolicy> out;
    out.reserve(static_cast<size_t>(count));
    std::vector<StageTable> objectives;
    objectives.push_back(cmdp.rewards);
    for (int i = 0; i < cmdp.num_resources; ++i) objectives.push_back(cmdp.consumption.slice(i));
    while (true) {
        Policy pi(S, A, H);
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s) pi.at(h, s, choice[h * S + s]) = 1.0;
        EnumeratedPolicy ep;
        ep.policy = pi;
        for (size_t oi = 0; oi < objectives.size(); ++oi) {
            ValueTables vt = evaluate_policy(cmdp.transitions, objectives[oi], pi, H);
            double val = vt.vat(0, cmdp.initial_state);
            if (oi == 0)
                ep.reward_total = val;
            else
                ep.consumption_totals.push_back(val);
        }
        out.push_back(std::move(ep));
        int k = 0;
        while (k < slots && ++choice[k] == A) choice[k++] = 0;
        if (k == slots) break;
    }
    return out;
}

double exact_trajectory_expectation(const Cmdp& cmdp, const Policy& policy, const StageTable& objective) {
    const int S = cmdp.num_states, A = cmdp.num_actions, H = cmdp.horizon;
    const double combos = std::pow(static_cast<double>(A) * S, static_cast<double>(H));
    require(combos <= 1e6, "exact_trajectory_expectation: (A*S)^H exceeds 1e6");
    require(policy.horizon >= H, "exact_trajectory_expectation: policy shorter than horizon");
    double total = 0.0;
    // depth-first over (action, next-state) sequences
    struct Frame {
        int state;
        double weight;
        double running;
    };
    std::vector<std::vector<Frame>> levels(H + 1);
    levels[0].push_back({cmdp.initial_state, 1.0, 0.0});
    for (int h = 0; h < H; ++h) {
        for (const Frame& f : levels[h]) {
            for (int a = 0; a < A; ++a) {
                double pa = policy.at(h, f.state, a);
                if (pa == 0.0) continue;
                double step = objective.at(f.state, a);
                for (int s2 = 0; s2 < S; ++s2) {
                    double pt = cmdp.transitions.at(f.state, a, s2);
                    if (pt == 0.0) continue;
                    double w = f.weight * pa * pt;
                    if (h + 1 == H)
                        total += w * (f.running + step);
                    else
                        levels[h + 1].push_back({s2, w, f.running + step});
                }
            }
        }
        levels[h].clear();
        levels[h].shrink_to_fit();
    }
    return total;
}

}  // namespace cmdpkit::oracle
