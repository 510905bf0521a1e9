#pragma once

#include <vector>

// Bundled dense two-phase primal simplex with Bland's anti-cycling rule.
// Intended for the small linear programs that arise in this library (dense
// occupancy encodings of tiny instances and the master programs of the
// column-generation planners).

namespace cmdpkit {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpRow {
    std::vector<double> coeffs;
    double rhs = 0.0;
};

/// maximize objective . x  subject to
///   eq_rows:  row . x == rhs
///   le_rows:  row . x <= rhs
///   lower[j] <= x[j] <= upper[j], lower[j] >= 0 (upper may be +inf)
struct LpProblem {
    int num_vars = 0;
    std::vector<double> objective;
    std::vector<LpRow> eq_rows;
    std::vector<LpRow> le_rows;
    std::vector<double> lower;  // empty means all zeros
    std::vector<double> upper;  // empty means all +inf

    void validate() const;
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> values;
    double objective_value = 0.0;
    // Row duals (eq rows first, then le rows). Filled only when the problem
    // has no finite upper bounds; used by the column-generation masters.
    std::vector<double> dual_values;
};

/// Two-phase primal simplex, Bland pivoting. Optimal solutions satisfy all
/// constraints within 1e-8 and bounds within 1e-10. Numerical stall (no
/// progress past the iteration budget) throws SolverStallError.
LpSolution solve_lp(const LpProblem& problem);

}  // namespace cmdpkit
