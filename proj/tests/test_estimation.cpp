#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cmdpkit/envs.hpp"
#include "cmdpkit/estimation.hpp"

using namespace cmdpkit;

TEST_CASE("record_step accumulates counts and sums") {
    Counts counts(3, 2, 1);
    std::vector<double> cons{0.25};
    counts.record_step(0, 1, 0.5, cons, 2);
    CHECK(counts.visit(0, 1) == 1);
    CHECK(counts.transition(0, 1, 2) == 1);
    counts.record_step(0, 1, 0.5, cons, 2);
    CHECK(counts.reward_sum[1] == doctest::Approx(1.0));
    CHECK(counts.consumption_sum[1] == doctest::Approx(0.5));
}

TEST_CASE("a full episode adds exactly H visits") {
    Cmdp env = build_random_cmdp(21, 4, 2, 6, 1, 3);
    Counts counts(4, 2, 1);
    RngStream rng(77);
    int s = env.initial_state;
    for (int h = 0; h < env.horizon; ++h) {
        int a = rng.next_below(2);
        SampledStep step = sample_step(env, s, a, rng);
        counts.record_step(s, a, step.reward, step.consumption, step.next_state);
        s = step.next_state;
    }
    long long total = 0;
    for (long long n : counts.visits) total += n;
    CHECK(total == env.horizon);
}

TEST_CASE("out-of-range observations are rejected") {
    Counts counts(2, 2, 1);
    std::vector<double> ok{0.5}, bad{1.5};
    CHECK_THROWS_AS(counts.record_step(0, 0, 2.0, ok, 1), std::invalid_argument);
    CHECK_THROWS_AS(counts.record_step(0, 0, 0.5, bad, 1), std::invalid_argument);
    CHECK_THROWS_AS(counts.record_step(0, 5, 0.5, ok, 1), std::invalid_argument);
}

TEST_CASE("empirical model: unvisited pairs get uniform rows and zero objectives") {
    Counts counts(4, 2, 1);
    EmpiricalModel m = empirical_model(counts);
    for (int s2 = 0; s2 < 4; ++s2) CHECK(m.p_hat.at(1, 0, s2) == doctest::Approx(0.25));
    CHECK(m.r_hat.at(1, 0) == 0.0);
    CHECK(m.c_hat.at(1, 0, 0) == 0.0);
    m.p_hat.validate();
}

TEST_CASE("empirical model: visit ratios") {
    Counts counts(2, 1, 0);
    std::vector<double> none;
    counts.record_step(0, 0, 1.0, none, 1);
    counts.record_step(0, 0, 1.0, none, 1);
    counts.record_step(0, 0, 1.0, none, 1);
    counts.record_step(0, 0, 0.0, none, 0);
    EmpiricalModel m = empirical_model(counts);
    CHECK(m.p_hat.at(0, 0, 1) == doctest::Approx(0.75));
    CHECK(m.p_hat.at(0, 0, 0) == doctest::Approx(0.25));
    CHECK(m.r_hat.at(0, 0) == doctest::Approx(0.75));
}

TEST_CASE("empirical transitions concentrate after many steps") {
    // 2-state cMDP, 10000 uniform steps with a fixed seed; the observed
    // max-norm error stays well under the recorded 0.05 envelope.
    Cmdp env = build_random_cmdp(31, 2, 2, 5, 0, 2);
    Counts counts(2, 2, 0);
    RngStream rng(123);
    int s = env.initial_state;
    std::vector<double> none;
    for (int t = 0; t < 10000; ++t) {
        int a = rng.next_below(2);
        SampledStep step = sample_step(env, s, a, rng);
        counts.record_step(s, a, step.reward, step.consumption, step.next_state);
        s = step.next_state;
    }
    EmpiricalModel m = empirical_model(counts);
    double err = 0.0;
    for (int ss = 0; ss < 2; ++ss)
        for (int a = 0; a < 2; ++a)
            for (int s2 = 0; s2 < 2; ++s2) err = std::max(err, std::abs(m.p_hat.at(ss, a, s2) - env.transitions.at(ss, a, s2)));
    CHECK(err <= 0.05);
}

TEST_CASE("bonus formula: clipping branch and direct evaluation") {
    BonusConfig cfg{0.1, 1, 1, 1, 0};
    Counts fresh(1, 1, 0);
    StageTable b = compute_bonus(fresh, 1, cfg);
    // sqrt(2 ln 80) = 2.9604... > 2H = 2, so the clip is active
    CHECK(b.at(0, 0) == doctest::Approx(2.0));

    Counts many(1, 1, 0);
    many.visits[0] = 1000000;
    StageTable b2 = compute_bonus(many, 1, cfg);
    CHECK(b2.at(0, 0) == doctest::Approx(std::sqrt(2.0 * std::log(80.0) / 1e6)).epsilon(1e-12));
    CHECK(b2.at(0, 0) == doctest::Approx(2.9604143746015965e-3).epsilon(1e-9));
}

TEST_CASE("bonus is in [0, 2H] and non-increasing in the visit count") {
    BonusConfig cfg{0.05, 3, 2, 4, 2};
    Counts counts(3, 2, 2);
    double prev = std::numeric_limits<double>::infinity();
    for (long long n : {0LL, 1LL, 2LL, 5LL, 50LL, 5000LL, 1000000LL}) {
        counts.visits[0] = n;
        StageTable b = compute_bonus(counts, 3, cfg);
        CHECK(b.at(0, 0) >= 0.0);
        CHECK(b.at(0, 0) <= 8.0 + 1e-12);
        CHECK(b.at(0, 0) <= prev + 1e-12);
        prev = b.at(0, 0);
    }
}

TEST_CASE("bonus-enhanced model shifts rewards up and consumptions down") {
    Counts counts(2, 2, 1);
    std::vector<double> cons{0.0};
    counts.record_step(0, 0, 0.0, cons, 1);
    EmpiricalModel emp = empirical_model(counts);

    SUBCASE("zero bonus reproduces the empirical model") {
        StageTable zero(2, 2, 0.0);
        BonusEnhancedModel m = bonus_enhanced_model(emp, zero);
        CHECK(m.r_plus.values == emp.r_hat.values);
        CHECK(m.c_minus.values == emp.c_hat.values);
    }
    SUBCASE("max bonus saturates rewards at 2H and sends consumption negative") {
        StageTable big(2, 2, 8.0);
        BonusEnhancedModel m = bonus_enhanced_model(emp, big);
        CHECK(m.r_plus.at(1, 1) == doctest::Approx(8.0));
        CHECK(m.c_minus.at(0, 0, 0) == doctest::Approx(-8.0));
        CHECK(m.r_hat().values == emp.r_hat.values);
        ResourceTable back = m.c_hat();
        for (size_t i = 0; i < back.values.size(); ++i) CHECK(back.values[i] == doctest::Approx(emp.c_hat.values[i]));
    }
}

TEST_CASE("counts snapshot round-trips through the text format") {
    Cmdp env = build_random_cmdp(17, 3, 2, 4, 2, 2);
    Counts counts(3, 2, 2);
    RngStream rng(9);
    int s = env.initial_state;
    for (int t = 0; t < 200; ++t) {
        int a = rng.next_below(2);
        SampledStep step = sample_step(env, s, a, rng);
        counts.record_step(s, a, step.reward, step.consumption, step.next_state);
        s = step.next_state;
    }
    counts.episodes_seen = 50;
    std::stringstream buf;
    counts.save(buf);
    Counts back = Counts::load(buf);
    CHECK(back.visits == counts.visits);
    CHECK(back.transition_counts == counts.transition_counts);
    CHECK(back.reward_sum == counts.reward_sum);
    CHECK(back.consumption_sum == counts.consumption_sum);
    CHECK(back.episodes_seen == 50);
}
