#include "cmdpkit/lp.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

#include "cmdpkit/core.hpp"

namespace cmdpkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-11;
constexpr double kFeasTol = 1e-8;

struct Tableau {
    int rows = 0;
    int cols = 0;  // total columns excluding rhs
    std::vector<double> t;  // (rows) x (cols+1), last column rhs
    std::vector<double> cost;  // cols+1, last entry = -objective value (min convention)
    std::vector<int> basis;

    double& at(int i, int j) { return t[static_cast<size_t>(i) * (cols + 1) + j]; }
    double at(int i, int j) const { return t[static_cast<size_t>(i) * (cols + 1) + j]; }
    double& rhs(int i) { return t[static_cast<size_t>(i) * (cols + 1) + cols]; }
    double rhs(int i) const { return t[static_cast<size_t>(i) * (cols + 1) + cols]; }

    void pivot(int pr, int pc) {
        const int w = cols + 1;
        double* prow = t.data() + static_cast<size_t>(pr) * w;
        const double pv = prow[pc];
        for (int j = 0; j < w; ++j) prow[j] /= pv;
        prow[pc] = 1.0;
        for (int i = 0; i < rows; ++i) {
            if (i == pr) continue;
            double* r = t.data() + static_cast<size_t>(i) * w;
            double f = r[pc];
            if (f == 0.0) continue;
            for (int j = 0; j < w; ++j) r[j] -= f * prow[j];
            r[pc] = 0.0;
        }
        double f = cost[pc];
        if (f != 0.0) {
            for (int j = 0; j < w; ++j) cost[j] -= f * prow[j];
            cost[pc] = 0.0;
        }
        basis[pr] = pc;
    }
};

// Bland's rule on a minimization tableau: entering = lowest-index column with
// reduced cost < -tol among allowed columns; leaving = min ratio, ties by
// lowest basis variable index. Returns false when optimal.
enum class StepResult { Optimal, Pivoted, Unbounded };

StepResult bland_step(Tableau& tb, const std::vector<bool>& allowed) {
    int enter = -1;
    for (int j = 0; j < tb.cols; ++j) {
        if (!allowed[j]) continue;
        if (tb.cost[j] < -kReducedCostTol) {
            enter = j;
            break;
        }
    }
    if (enter < 0) return StepResult::Optimal;
    int leave = -1;
    double best_ratio = kInf;
    for (int i = 0; i < tb.rows; ++i) {
        double a = tb.at(i, enter);
        if (a <= kPivotTol) continue;
        double ratio = tb.rhs(i) / a;
        if (ratio < best_ratio - 1e-15 || (std::abs(ratio - best_ratio) <= 1e-15 && (leave < 0 || tb.basis[i] < tb.basis[leave]))) {
            best_ratio = ratio;
            leave = i;
        }
    }
    if (leave < 0) return StepResult::Unbounded;
    tb.pivot(leave, enter);
    return StepResult::Pivoted;
}

}  // namespace

void LpProblem::validate() const {
    if (num_vars <= 0) throw std::invalid_argument("lp: no variables");
    if (static_cast<int>(objective.size()) != num_vars) throw std::invalid_argument("lp: objective size mismatch");
    auto check_rows = [&](const std::vector<LpRow>& rs) {
        for (const LpRow& r : rs)
            if (static_cast<int>(r.coeffs.size()) != num_vars) throw std::invalid_argument("lp: row size mismatch");
    };
    check_rows(eq_rows);
    check_rows(le_rows);
    if (!lower.empty() && static_cast<int>(lower.size()) != num_vars) throw std::invalid_argument("lp: lower bound size mismatch");
    if (!upper.empty() && static_cast<int>(upper.size()) != num_vars) throw std::invalid_argument("lp: upper bound size mismatch");
    for (size_t j = 0; j < lower.size(); ++j) {
        if (lower[j] < 0.0) throw std::invalid_argument("lp: negative lower bound");
        if (!upper.empty() && upper[j] < lower[j]) throw std::invalid_argument("lp: upper bound below lower bound");
    }
}

LpSolution solve_lp(const LpProblem& problem) {
    problem.validate();
    const int n = problem.num_vars;
    std::vector<double> lo(n, 0.0), hi(n, kInf);
    if (!problem.lower.empty()) lo = problem.lower;
    if (!problem.upper.empty()) hi = problem.upper;

    // Shift x = lo + y and drop fixed variables.
    std::vector<int> col_of(n, -1);
    int n_active = 0;
    bool any_upper_row = false;
    for (int j = 0; j < n; ++j) {
        if (hi[j] - lo[j] > 0.0) {
            col_of[j] = n_active++;
            if (std::isfinite(hi[j])) any_upper_row = true;
        }
    }

    struct Row {
        std::vector<double> a;
        double b;
        bool is_eq;
    };
    std::vector<Row> rows;
    auto add_row = [&](const LpRow& src, bool is_eq) {
        Row r;
        r.a.assign(n_active, 0.0);
        r.b = src.rhs;
        r.is_eq = is_eq;
        for (int j = 0; j < n; ++j) {
            r.b -= src.coeffs[j] * lo[j];
            if (col_of[j] >= 0) r.a[col_of[j]] = src.coeffs[j];
        }
        rows.push_back(std::move(r));
    };
    for (const LpRow& r : problem.eq_rows) add_row(r, true);
    for (const LpRow& r : problem.le_rows) add_row(r, false);
    const int num_main_rows = static_cast<int>(rows.size());
    for (int j = 0; j < n; ++j) {
        if (col_of[j] >= 0 && std::isfinite(hi[j])) {
            Row r;
            r.a.assign(n_active, 0.0);
            r.a[col_of[j]] = 1.0;
            r.b = hi[j] - lo[j];
            r.is_eq = false;
            rows.push_back(std::move(r));
        }
    }

    const int m = static_cast<int>(rows.size());
    if (m == 0) {
        // bounds only; finite uppers would have produced rows, so active
        // variables are unbounded above
        for (int j = 0; j < n; ++j)
            if (col_of[j] >= 0 && problem.objective[j] > kReducedCostTol)
                return {LpStatus::Unbounded, {}, 0.0, {}};
        LpSolution sol;
        sol.status = LpStatus::Optimal;
        sol.values = lo;
        sol.objective_value = 0.0;
        for (int j = 0; j < n; ++j) sol.objective_value += problem.objective[j] * sol.values[j];
        sol.dual_values.clear();
        return sol;
    }

    // Normalize rhs >= 0; attach slack (kept <= rows), surplus + artificial
    // (negated <= rows), artificial (eq rows).
    std::vector<double> sign(m, 1.0);
    int num_slack = 0, num_art = 0;
    for (int i = 0; i < m; ++i) {
        if (rows[i].b < 0.0) {
            sign[i] = -1.0;
            rows[i].b = -rows[i].b;
            for (double& v : rows[i].a) v = -v;
        }
        if (!rows[i].is_eq) ++num_slack;
        if (rows[i].is_eq || sign[i] < 0.0) ++num_art;
    }

    Tableau tb;
    tb.rows = m;
    tb.cols = n_active + num_slack + num_art;
    tb.t.assign(static_cast<size_t>(m) * (tb.cols + 1), 0.0);
    tb.cost.assign(tb.cols + 1, 0.0);
    tb.basis.assign(m, -1);

    std::vector<int> unit_col(m, -1);   // slack or artificial giving B^-1 e_i
    std::vector<bool> is_artificial(tb.cols, false);
    int next_slack = n_active, next_art = n_active + num_slack;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n_active; ++j) tb.at(i, j) = rows[i].a[j];
        tb.rhs(i) = rows[i].b;
        if (!rows[i].is_eq) {
            // slack sign: +1 for kept <=, -1 for negated rows (surplus)
            tb.at(i, next_slack) = (sign[i] > 0.0) ? 1.0 : -1.0;
            if (sign[i] > 0.0) {
                tb.basis[i] = next_slack;
                unit_col[i] = next_slack;
            }
            ++next_slack;
        }
        if (rows[i].is_eq || sign[i] < 0.0) {
            tb.at(i, next_art) = 1.0;
            tb.basis[i] = next_art;
            unit_col[i] = next_art;
            is_artificial[next_art] = true;
            ++next_art;
        }
    }

    const long long budget = 5000 + 200LL * (m + tb.cols);
    long long iters = 0;
    std::vector<bool> allowed(tb.cols, true);

    // Phase 1: minimize sum of artificials.
    if (num_art > 0) {
        for (int j = 0; j < tb.cols; ++j) tb.cost[j] = is_artificial[j] ? 1.0 : 0.0;
        tb.cost[tb.cols] = 0.0;
        for (int i = 0; i < m; ++i) {
            if (is_artificial[tb.basis[i]]) {
                for (int j = 0; j <= tb.cols; ++j) tb.cost[j] -= tb.at(i, j);
            }
        }
        while (true) {
            if (++iters > budget) throw SolverStallError("simplex: phase-1 iteration budget exceeded");
            StepResult r = bland_step(tb, allowed);
            if (r == StepResult::Optimal) break;
            if (r == StepResult::Unbounded) throw SolverStallError("simplex: phase 1 numerically stalled");
        }
        double infeas = -tb.cost[tb.cols];
        if (infeas > 1e-7) return {LpStatus::Infeasible, {}, 0.0, {}};
        // Pivot remaining artificials out of the basis or drop them silently
        // (redundant rows stay with a zero artificial basic variable).
        for (int i = 0; i < m; ++i) {
            if (!is_artificial[tb.basis[i]]) continue;
            int pc = -1;
            for (int j = 0; j < tb.cols; ++j) {
                if (is_artificial[j]) continue;
                if (std::abs(tb.at(i, j)) > kPivotTol) {
                    pc = j;
                    break;
                }
            }
            if (pc >= 0) tb.pivot(i, pc);
        }
    }

    // Phase 2: minimize -objective over the original columns.
    for (int j = 0; j < tb.cols; ++j) {
        tb.cost[j] = 0.0;
        if (j < n_active) {
            for (int v = 0; v < n; ++v)
                if (col_of[v] == j) tb.cost[j] = -problem.objective[v];
        }
        if (is_artificial[j]) allowed[j] = false;
    }
    tb.cost[tb.cols] = 0.0;
    std::vector<double> cost_copy(tb.cost);
    for (int i = 0; i < m; ++i) {
        double cb = cost_copy[tb.basis[i]];
        if (cb != 0.0) {
            for (int j = 0; j <= tb.cols; ++j) tb.cost[j] -= cb * tb.at(i, j);
        }
    }
    while (true) {
        if (++iters > budget) throw SolverStallError("simplex: phase-2 iteration budget exceeded");
        StepResult r = bland_step(tb, allowed);
        if (r == StepResult::Optimal) break;
        if (r == StepResult::Unbounded) return {LpStatus::Unbounded, {}, 0.0, {}};
    }

    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.values.assign(n, 0.0);
    std::vector<double> y(n_active, 0.0);
    for (int i = 0; i < m; ++i) {
        if (tb.basis[i] < n_active) y[tb.basis[i]] = tb.rhs(i);
    }
    for (int j = 0; j < n; ++j) sol.values[j] = lo[j] + (col_of[j] >= 0 ? y[col_of[j]] : 0.0);
    sol.objective_value = 0.0;
    for (int j = 0; j < n; ++j) sol.objective_value += problem.objective[j] * sol.values[j];

    // Verify the returned point against the stated tolerances.
    auto violation = [&](const LpRow& r) {
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += r.coeffs[j] * sol.values[j];
        return dot - r.rhs;
    };
    for (const LpRow& r : problem.eq_rows)
        if (std::abs(violation(r)) > kFeasTol) throw SolverStallError("simplex: equality residual above tolerance");
    for (const LpRow& r : problem.le_rows)
        if (violation(r) > kFeasTol) throw SolverStallError("simplex: inequality residual above tolerance");
    for (int j = 0; j < n; ++j) {
        if (sol.values[j] < lo[j] - 1e-10 || sol.values[j] > hi[j] + 1e-10)
            throw SolverStallError("simplex: bound residual above tolerance");
        if (sol.values[j] < lo[j]) sol.values[j] = lo[j];
        if (std::isfinite(hi[j]) && sol.values[j] > hi[j]) sol.values[j] = hi[j];
    }

    if (!any_upper_row) {
        // Row duals for the master programs: y_i = c_B . B^-1 e_i, with the
        // unit column of each row tracked through pivoting.
        sol.dual_values.assign(num_main_rows, 0.0);
        std::vector<double> cmax(tb.cols, 0.0);
        for (int v = 0; v < n; ++v)
            if (col_of[v] >= 0) cmax[col_of[v]] = problem.objective[v];
        for (int i = 0; i < num_main_rows; ++i) {
            if (unit_col[i] < 0) continue;
            double acc = 0.0;
            for (int k = 0; k < m; ++k) {
                double cb = cmax[tb.basis[k]];
                if (cb != 0.0) acc += cb * tb.at(k, unit_col[i]);
            }
            sol.dual_values[i] = sign[i] * acc;
        }
    }
    return sol;
}

}  // namespace cmdpkit
