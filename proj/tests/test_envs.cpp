#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cmdpkit/envs.hpp"
#include "cmdpkit/planners.hpp"

using namespace cmdpkit;

namespace {

GridMap map_from(const std::string& text) {
    std::istringstream in(text);
    return GridMap::parse(in);
}

}  // namespace

TEST_CASE("map parsing: comments, rectangularity, border, markers") {
    GridMap ok = map_from("; corridor\n#####\n#S.G#\n#####\n");
    CHECK_NOTHROW(ok.validate_common());
    CHECK(ok.height() == 3);

    CHECK_THROWS_AS(map_from("###\n#S@#\n###\n"), MapParseError);

    GridMap ragged = map_from("#####\n#S.G\n#####\n");
    CHECK_THROWS_AS(ragged.validate_common(), MapParseError);

    GridMap open = map_from("#####\n#S.G#\n##.##\n");
    CHECK_THROWS_AS(open.validate_common(), MapParseError);

    GridMap no_start = map_from("#####\n#..G#\n#####\n");
    CHECK_THROWS_AS(no_start.validate_common(), MapParseError);

    try {
        map_from("#####\n#S?G#\n#####\n");
        FAIL("expected a parse error");
    } catch (const MapParseError& e) {
        CHECK(e.row == 2);
        CHECK(e.col == 3);
    }
}

TEST_CASE("mars corridor: deterministic optimum earns 1 + (H-2)/H") {
    GridMap map = map_from("#####\n#S.G#\n#####\n");
    EnvConfig cfg;
    cfg.slip = 0.0;
    cfg.horizon = 30;
    Cmdp env = build_mars_rover(map, cfg);
    ViResult vi = value_iteration(env.transitions, env.rewards, env.horizon);
    CHECK(vi.values.vat(0, env.initial_state) == doctest::Approx(1.0 + 28.0 / 30.0).epsilon(1e-12));
}

TEST_CASE("mars: maps without rocks have identically zero consumption") {
    GridMap map = map_from("#####\n#S.G#\n#####\n");
    EnvConfig cfg;
    Cmdp env = build_mars_rover(map, cfg);
    for (double c : env.consumption.values) CHECK(c == 0.0);
}

TEST_CASE("mars: full slip makes all move actions identical") {
    GridMap map = map_from("######\n#S..G#\n#.R..#\n######\n");
    EnvConfig cfg;
    cfg.slip = 1.0;
    Cmdp env = build_mars_rover(map, cfg);
    for (int s = 0; s < env.num_states; ++s)
        for (int s2 = 0; s2 < env.num_states; ++s2)
            for (int a = 1; a < 4; ++a)
                CHECK(env.transitions.at(s, a, s2) == doctest::Approx(env.transitions.at(s, 0, s2)).epsilon(1e-15));
}

TEST_CASE("mars: slip mixes the intended move with the uniform move kernel") {
    GridMap map = map_from("######\n#S..G#\n#.R..#\n######\n");
    EnvConfig zero_cfg;
    zero_cfg.slip = 0.0;
    EnvConfig mixed_cfg;
    mixed_cfg.slip = 0.3;
    Cmdp pure = build_mars_rover(map, zero_cfg);
    Cmdp mixed = build_mars_rover(map, mixed_cfg);
    for (int s = 0; s < pure.num_states; ++s) {
        for (int a = 0; a < 4; ++a) {
            for (int s2 = 0; s2 < pure.num_states; ++s2) {
                double expect = 0.7 * pure.transitions.at(s, a, s2);
                for (int a2 = 0; a2 < 4; ++a2) expect += 0.3 / 4.0 * pure.transitions.at(s, a2, s2);
                CHECK(mixed.transitions.at(s, a, s2) == doctest::Approx(expect).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("mars: goal and rock cells absorb under every action") {
    GridMap map = map_from("######\n#S..G#\n#.R..#\n######\n");
    EnvConfig cfg;
    Cmdp env = build_mars_rover(map, cfg);
    std::vector<std::string> labels = mars_state_labels(map, cfg);
    for (int s = 0; s < env.num_states; ++s) {
        if (labels[s][0] != 'G' && labels[s][0] != 'R') continue;
        for (int a = 0; a < env.num_actions; ++a) CHECK(env.transitions.at(s, a, s) == doctest::Approx(1.0));
    }
}

TEST_CASE("mars: crashing pays 1 on the entering pair and 1/H afterwards") {
    GridMap map = map_from("#####\n#S.G#\n#.R.#\n#...#\n#####\n");
    EnvConfig cfg;
    cfg.slip = 0.0;
    cfg.horizon = 10;
    Cmdp env = build_mars_rover(map, cfg);
    std::vector<std::string> labels = mars_state_labels(map, cfg);
    int above_rock = -1, rock = -1;
    for (int s = 0; s < env.num_states; ++s) {
        if (labels[s] == ".(1,2)") above_rock = s;
        if (labels[s][0] == 'R') rock = s;
    }
    REQUIRE(above_rock >= 0);
    REQUIRE(rock >= 0);
    CHECK(env.consumption.at(above_rock, 1, 0) == 1.0);  // moving down into the rock
    CHECK(env.consumption.at(rock, 0, 0) == doctest::Approx(0.1));
    CHECK(env.rewards.at(rock, 0) == 0.0);
}

TEST_CASE("mars: null action leads to the zero sink") {
    GridMap map = map_from("#####\n#S.G#\n#####\n");
    EnvConfig cfg;
    cfg.include_null_action = true;
    Cmdp env = build_mars_rover(map, cfg);
    CHECK(env.num_actions == 5);
    int sink = env.num_states - 1;
    for (int s = 0; s < env.num_states; ++s) {
        CHECK(env.transitions.at(s, 4, sink) == doctest::Approx(1.0));
        CHECK(env.rewards.at(s, 4) == 0.0);
        CHECK(env.consumption.at(s, 4, 0) == 0.0);
    }
    for (int a = 0; a < 5; ++a) CHECK(env.transitions.at(sink, a, sink) == doctest::Approx(1.0));
}

TEST_CASE("box: corner detection on the 4x4 bordered room") {
    GridMap map = map_from("####\n#SB#\n#.G#\n####\n");
    EnvConfig cfg;
    cfg.horizon = 8;
    Cmdp env = build_box(map, cfg);
    // all four interior cells touch two border walls, so every box position
    // is a corner: consumption is 1/H wherever the agent is not yet absorbed
    for (int s = 0; s < env.num_states; ++s)
        for (int a = 0; a < 4; ++a) CHECK(env.consumption.at(s, a, 0) == doctest::Approx(1.0 / 8.0));
}

TEST_CASE("box: stay-still policy with a cornered box consumes 1 per episode") {
    GridMap map = map_from("#####\n#B..#\n#S..#\n#..G#\n#####\n");
    EnvConfig cfg;
    cfg.slip = 0.0;
    cfg.horizon = 12;
    Cmdp env = build_box(map, cfg);
    // pressing into the left wall keeps agent and box in place
    Policy stay = constant_policy(env.num_states, env.num_actions, env.horizon, 2);
    ValueTables cons = evaluate_policy(env.transitions, env.consumption.slice(0), stay, env.horizon);
    CHECK(cons.vat(0, env.initial_state) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("box: open-room path around the box consumes nothing") {
    GridMap map = map_from("######\n#S...#\n#.B..#\n#....#\n#...G#\n######\n");
    EnvConfig cfg;
    cfg.slip = 0.0;
    cfg.horizon = 10;
    Cmdp env = build_box(map, cfg);
    ViResult vi = value_iteration(env.transitions, env.rewards, env.horizon);
    ValueTables cons = evaluate_policy(env.transitions, env.consumption.slice(0), vi.policy, env.horizon);
    CHECK(vi.values.vat(0, env.initial_state) > 1.0);  // reaches the goal
    CHECK(cons.vat(0, env.initial_state) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("random cmdp: determinism, density, feasibility") {
    Cmdp a = build_random_cmdp(99, 4, 3, 5, 2, 2);
    Cmdp b = build_random_cmdp(99, 4, 3, 5, 2, 2);
    CHECK(a.transitions.probs == b.transitions.probs);
    CHECK(a.rewards.values == b.rewards.values);
    CHECK(a.budgets == b.budgets);

    Cmdp dense = build_random_cmdp(100, 4, 2, 3, 0, 4);
    for (double p : dense.transitions.probs) CHECK(p > 0.0);

    for (uint64_t seed = 1; seed <= 10; ++seed) {
        Cmdp env = build_random_cmdp(seed, 3, 2, 4, 2, 2);
        Policy uniform = Policy::uniform(3, 2, 4);
        OccupancyMeasure rho = occupancy_from_policy(env.transitions, uniform, env.initial_state, 4);
        for (int i = 0; i < 2; ++i) CHECK(expected_total(rho, env.consumption.slice(i)) <= env.budgets[i] + 1e-12);
    }
}

TEST_CASE("sample_step: deterministic rows, exact rewards, empirical frequency") {
    Cmdp chain;
    chain.num_states = 2;
    chain.num_actions = 1;
    chain.horizon = 2;
    chain.num_resources = 0;
    chain.initial_state = 0;
    chain.transitions = TransitionModel(2, 1);
    chain.transitions.at(0, 0, 1) = 1.0;
    chain.transitions.at(1, 0, 1) = 1.0;
    chain.rewards = StageTable(2, 1);
    chain.rewards.at(0, 0) = 0.625;
    chain.consumption = ResourceTable(2, 1, 0);
    RngStream rng(4);
    for (int t = 0; t < 100; ++t) {
        SampledStep step = sample_step(chain, 0, 0, rng);
        CHECK(step.next_state == 1);
        CHECK(step.reward == 0.625);
    }

    Cmdp biased = chain;
    biased.transitions.at(0, 0, 0) = 0.75;
    biased.transitions.at(0, 0, 1) = 0.25;
    RngStream rng2(12345);
    int hits = 0;
    const int n = 100000;
    for (int t = 0; t < n; ++t)
        if (sample_step(biased, 0, 0, rng2).next_state == 0) ++hits;
    CHECK(std::abs(hits / static_cast<double>(n) - 0.75) <= 0.01);
}

TEST_CASE("null-action augmentation preserves the base model") {
    Cmdp base = build_random_cmdp(55, 3, 2, 4, 1, 2);
    Cmdp aug = with_null_action(base);
    CHECK(aug.num_states == 4);
    CHECK(aug.num_actions == 3);
    for (int s = 0; s < 3; ++s)
        for (int a = 0; a < 2; ++a) {
            CHECK(aug.rewards.at(s, a) == base.rewards.at(s, a));
            for (int s2 = 0; s2 < 3; ++s2) CHECK(aug.transitions.at(s, a, s2) == base.transitions.at(s, a, s2));
        }
    for (int s = 0; s < 4; ++s) {
        CHECK(aug.transitions.at(s, 2, 3) == doctest::Approx(1.0));
        CHECK(aug.rewards.at(s, 2) == 0.0);
        CHECK(aug.consumption.at(s, 2, 0) == 0.0);
    }
}
