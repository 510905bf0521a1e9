#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include "cmdpkit/core.hpp"
#include "cmdpkit/lp.hpp"

// Independent brute-force and exact-arithmetic references. These back the
// derived constants in the test suites and must stay independent of the
// implementations they check. Size guards make misuse loud.

namespace cmdpkit::oracle {

using Rational = boost::multiprecision::cpp_rational;

/// LpProblem with exact rational coefficients.
struct RationalLp {
    int num_vars = 0;
    std::vector<Rational> objective;
    std::vector<std::vector<Rational>> eq_rows;
    std::vector<Rational> eq_rhs;
    std::vector<std::vector<Rational>> le_rows;
    std::vector<Rational> le_rhs;
    std::vector<Rational> lower;
    std::vector<Rational> upper;  // may hold no entry cap; use has_upper
    std::vector<bool> has_upper;

    static RationalLp from_double(const LpProblem& p);
};

struct RationalLpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<Rational> values;
    Rational objective_value = 0;
};

/// Exact tableau simplex with Bland's rule; guards: <= 60 variables, <= 60 rows.
RationalLpSolution solve_lp_exact(const RationalLp& problem);

struct EnumeratedPolicy {
    Policy policy;
    double reward_total = 0.0;
    std::vector<double> consumption_totals;
};

/// All deterministic time-dependent policies with exact evaluated totals.
/// Guard: A^(S*H) <= 1e6.
std::vector<EnumeratedPolicy> enumerate_policies(const Cmdp& cmdp, int horizon);

/// Sums the objective over all length-H (action, next-state) sequences.
/// Guard: (A*S)^H <= 1e6.
double exact_trajectory_expectation(const Cmdp& cmdp, const Policy& policy, const StageTable& objective);

}  // namespace cmdpkit::oracle
