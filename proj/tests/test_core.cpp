#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cmdpkit/core.hpp"
#include "cmdpkit/envs.hpp"
#include "cmdpkit/oracles.hpp"

using namespace cmdpkit;

namespace {

Cmdp self_loop_single(int actions, std::vector<double> rewards) {
    Cmdp env;
    env.num_states = 1;
    env.num_actions = actions;
    env.horizon = 2;
    env.num_resources = 0;
    env.initial_state = 0;
    env.transitions = TransitionModel(1, actions);
    for (int a = 0; a < actions; ++a) env.transitions.at(0, a, 0) = 1.0;
    env.rewards = StageTable(1, actions);
    for (int a = 0; a < actions; ++a) env.rewards.at(0, a) = rewards[a];
    env.consumption = ResourceTable(1, actions, 0);
    return env;
}

Policy random_policy(int S, int A, int H, RngStream& rng) {
    Policy pi(S, A, H);
    for (int h = 0; h < H; ++h) {
        for (int s = 0; s < S; ++s) {
            double total = 0.0;
            for (int a = 0; a < A; ++a) {
                double w = rng.next_unit() + 1e-3;
                pi.at(h, s, a) = w;
                total += w;
            }
            for (int a = 0; a < A; ++a) pi.at(h, s, a) /= total;
        }
    }
    return pi;
}

}  // namespace

TEST_CASE("evaluate_policy: deterministic self-loop sums the objective") {
    Cmdp env = self_loop_single(1, {1.0});
    Policy pi = Policy::uniform(1, 1, 2);
    ValueTables vt = evaluate_policy(env.transitions, env.rewards, pi, 2);
    CHECK(vt.vat(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(vt.vat(2, 0) == 0.0);
}

TEST_CASE("evaluate_policy: zero objective gives identically zero tables") {
    Cmdp env = build_random_cmdp(11, 3, 2, 4, 0, 3);
    StageTable zero(3, 2, 0.0);
    Policy pi = Policy::uniform(3, 2, 4);
    ValueTables vt = evaluate_policy(env.transitions, zero, pi, 4);
    for (double q : vt.q) CHECK(q == 0.0);
    for (double v : vt.v) CHECK(v == 0.0);
}

TEST_CASE("evaluate_policy matches exhaustive trajectory enumeration") {
    RngStream rng(42);
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        Cmdp env = build_random_cmdp(seed, 2, 2, 3, 0, 2);
        Policy pi = random_policy(2, 2, 3, rng);
        ValueTables vt = evaluate_policy(env.transitions, env.rewards, pi, 3);
        double oracle = oracle::exact_trajectory_expectation(env, pi, env.rewards);
        CHECK(vt.vat(0, env.initial_state) == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("evaluate_policy rejects mismatched tables") {
    Cmdp env = self_loop_single(1, {1.0});
    StageTable wrong(2, 1, 0.0);
    Policy pi = Policy::uniform(1, 1, 2);
    CHECK_THROWS_AS(evaluate_policy(env.transitions, wrong, pi, 2), std::invalid_argument);
}

TEST_CASE("bellman errors vanish when the model is the truth") {
    Cmdp env = build_random_cmdp(5, 3, 2, 3, 1, 3);
    Policy pi = Policy::uniform(3, 2, 3);
    BellmanErrors bell = bellman_error_table(env.transitions, env.rewards, env.transitions, env.rewards, pi, 3);
    for (double e : bell.err) CHECK(std::abs(e) <= 1e-14);
}

TEST_CASE("bellman errors reduce to a constant shift of the objective") {
    Cmdp env = build_random_cmdp(6, 3, 2, 4, 0, 2);
    const double kappa = 0.37;
    StageTable shifted = env.rewards;
    for (double& v : shifted.values) v += kappa;
    Policy pi = Policy::uniform(3, 2, 4);
    BellmanErrors bell = bellman_error_table(env.transitions, shifted, env.transitions, env.rewards, pi, 4);
    for (double e : bell.err) CHECK(e == doctest::Approx(kappa).epsilon(1e-12));
}

TEST_CASE("simulation identity: value gap equals occupancy-weighted bellman errors") {
    RngStream rng(7);
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        Cmdp truth = build_random_cmdp(seed, 4, 2, 5, 1, 3);
        Cmdp model = build_random_cmdp(seed + 1000, 4, 2, 5, 1, 3);
        Policy pi = random_policy(4, 2, 5, rng);
        ValueTables vm = evaluate_policy(model.transitions, model.rewards, pi, 5);
        ValueTables vt = evaluate_policy(truth.transitions, truth.rewards, pi, 5);
        BellmanErrors bell = bellman_error_table(model.transitions, model.rewards, truth.transitions, truth.rewards, pi, 5);
        OccupancyMeasure rho = occupancy_from_policy(truth.transitions, pi, truth.initial_state, 5);
        double lhs = vm.vat(0, truth.initial_state) - vt.vat(0, truth.initial_state);
        double rhs = weighted_total(rho, bell);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
    }
}

TEST_CASE("occupancy: single-state cMDP reproduces the policy's action marginals") {
    Cmdp env = self_loop_single(2, {0.2, 0.8});
    RngStream rng(3);
    Policy pi = random_policy(1, 2, 2, rng);
    OccupancyMeasure rho = occupancy_from_policy(env.transitions, pi, 0, 2);
    for (int h = 0; h < 2; ++h)
        for (int a = 0; a < 2; ++a) CHECK(rho.at(h, 0, a) == doctest::Approx(pi.at(h, 0, a)).epsilon(1e-15));
}

TEST_CASE("occupancy: deterministic chain is a 0/1 indicator of the trajectory") {
    Cmdp env;
    env.num_states = 2;
    env.num_actions = 1;
    env.horizon = 3;
    env.num_resources = 0;
    env.initial_state = 0;
    env.transitions = TransitionModel(2, 1);
    env.transitions.at(0, 0, 1) = 1.0;
    env.transitions.at(1, 0, 1) = 1.0;
    env.rewards = StageTable(2, 1);
    Policy pi = Policy::uniform(2, 1, 3);
    OccupancyMeasure rho = occupancy_from_policy(env.transitions, pi, 0, 3);
    CHECK(rho.at(0, 0, 0) == 1.0);
    CHECK(rho.at(1, 1, 0) == 1.0);
    CHECK(rho.at(2, 1, 0) == 1.0);
    CHECK(rho.at(1, 0, 0) == 0.0);
}

TEST_CASE("occupancy invariants and DP cross-check on random instances") {
    RngStream rng(99);
    for (uint64_t seed = 1; seed <= 15; ++seed) {
        Cmdp env = build_random_cmdp(seed, 4, 3, 4, 1, 2);
        Policy pi = random_policy(4, 3, 4, rng);
        OccupancyMeasure rho = occupancy_from_policy(env.transitions, pi, env.initial_state, 4);
        check_occupancy_invariants(rho, env.transitions, env.initial_state);
        double via_occ = expected_total(rho, env.rewards);
        ValueTables vt = evaluate_policy(env.transitions, env.rewards, pi, 4);
        CHECK(via_occ == doctest::Approx(vt.vat(0, env.initial_state)).epsilon(1e-12));
    }
}

TEST_CASE("policy_from_occupancy inverts occupancy on reachable states, uniform elsewhere") {
    RngStream rng(123);
    Cmdp env = build_random_cmdp(17, 3, 2, 3, 0, 1);  // sparse rows leave states unreached
    Policy pi = random_policy(3, 2, 3, rng);
    OccupancyMeasure rho = occupancy_from_policy(env.transitions, pi, env.initial_state, 3);
    Policy back = policy_from_occupancy(rho);
    for (int h = 0; h < 3; ++h) {
        for (int s = 0; s < 3; ++s) {
            double mass = 0.0;
            for (int a = 0; a < 2; ++a) mass += rho.at(h, s, a);
            for (int a = 0; a < 2; ++a) {
                if (mass > 0.0)
                    CHECK(back.at(h, s, a) == doctest::Approx(pi.at(h, s, a)).epsilon(1e-12));
                else
                    CHECK(back.at(h, s, a) == doctest::Approx(0.5).epsilon(1e-15));
            }
        }
    }
    SUBCASE("negative entries are rejected") {
        rho.at(0, env.initial_state, 0) = -1e-3;
        CHECK_THROWS_AS(policy_from_occupancy(rho), std::invalid_argument);
    }
}

TEST_CASE("expected_total: constants and roundtrip") {
    Cmdp env = build_random_cmdp(77, 3, 2, 5, 0, 3);
    Policy pi = Policy::uniform(3, 2, 5);
    OccupancyMeasure rho = occupancy_from_policy(env.transitions, pi, env.initial_state, 5);
    StageTable zero(3, 2, 0.0), one(3, 2, 1.0);
    CHECK(expected_total(rho, zero) == 0.0);
    CHECK(expected_total(rho, one) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("values stay in [0,H] for objectives in [0,1]") {
    RngStream rng(2024);
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        Cmdp env = build_random_cmdp(seed, 4, 2, 6, 0, 4);
        Policy pi = random_policy(4, 2, 6, rng);
        ValueTables vt = evaluate_policy(env.transitions, env.rewards, pi, 6);
        for (double q : vt.q) {
            CHECK(q >= -1e-12);
            CHECK(q <= 6.0 + 1e-12);
        }
        for (double v : vt.v) {
            CHECK(v >= -1e-12);
            CHECK(v <= 6.0 + 1e-12);
        }
    }
}

TEST_CASE("cmdp validation rejects malformed inputs") {
    Cmdp env = self_loop_single(1, {1.0});
    CHECK_NOTHROW(env.validate());
    SUBCASE("bad row sum") {
        env.transitions.at(0, 0, 0) = 0.5;
        CHECK_THROWS_AS(env.validate(), std::invalid_argument);
    }
    SUBCASE("reward out of range") {
        env.rewards.at(0, 0) = 1.5;
        CHECK_THROWS_AS(env.validate(), std::invalid_argument);
    }
    SUBCASE("initial state out of range") {
        env.initial_state = 3;
        CHECK_THROWS_AS(env.validate(), std::invalid_argument);
    }
}

TEST_CASE("objective selector picks reward or a resource slice") {
    Cmdp env = build_random_cmdp(8, 2, 2, 3, 2, 2);
    StageTable r = env.objective(ObjectiveSelector::reward());
    CHECK(r.at(0, 0) == env.rewards.at(0, 0));
    StageTable c1 = env.objective(ObjectiveSelector::resource_index(1));
    CHECK(c1.at(1, 1) == env.consumption.at(1, 1, 1));
    CHECK_THROWS_AS(env.objective(ObjectiveSelector::resource_index(5)), std::invalid_argument);
}
