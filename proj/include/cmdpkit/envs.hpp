#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "cmdpkit/core.hpp"

// Benchmark grid-world builders (Mars rover and Box), a seeded random-cMDP
// generator, and the trajectory sampler.

namespace cmdpkit {

/// Deterministic uniform stream; one draw per sampled quantity, consumed in a
/// documented fixed order so runs replay bit-for-bit.
struct RngStream {
    explicit RngStream(uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    // splitmix64
    uint64_t next_u64() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    int next_below(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

    uint64_t state;
};

/// Rectangular character map. Alphabet: '#' wall, '.' empty, 'S' start,
/// 'G' goal, 'R' rock (Mars rover), 'B' box start (Box). Comment lines start
/// with ';'.
struct GridMap {
    std::vector<std::string> rows;

    int height() const { return static_cast<int>(rows.size()); }
    int width() const { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }
    char at(int r, int c) const { return rows[r][c]; }

    static GridMap parse(std::istream& in);
    static GridMap load_file(const std::string& path);

    // rectangular, fully bordered by '#', exactly one 'S' and one 'G'
    void validate_common() const;
};

struct EnvConfig {
    double slip = 0.1;
    int horizon = 30;
    bool include_null_action = false;

    void validate() const;
};

struct SampledStep {
    double reward = 0.0;
    std::vector<double> consumption;
    int next_state = 0;
};

/// Mars rover: cells are states, four move actions with slip, goal and rock
/// cells absorb. Reward 1 on the (s,a) whose intended move enters the goal,
/// 1/H per absorbed goal step; consumption (d = 1) mirrors this for rocks.
Cmdp build_mars_rover(const GridMap& map, const EnvConfig& cfg);

/// Box push-world: states are (agent cell, box cell) pairs, the agent pushes
/// the box by walking into it, the goal absorbs the agent, and consumption is
/// 1/H per step at which the box sits on a corner cell (>= 2 orthogonally
/// adjacent walls).
Cmdp build_box(const GridMap& map, const EnvConfig& cfg);

/// Seeded dense/sparse random instance; budgets leave the uniform policy
/// feasible by construction.
Cmdp build_random_cmdp(uint64_t seed, int S, int A, int H, int d, int sparsity);

/// Adds an absorbing zero-reward zero-consumption sink plus a null action at
/// every state; the null action is the last action index.
Cmdp with_null_action(const Cmdp& base);

/// One environment step: next state by inverse CDF over the stored row using
/// a single uniform draw; reward and consumption are the stored means.
SampledStep sample_step(const Cmdp& cmdp, int s, int a, RngStream& rng);

// Human-readable state labels for the Mars rover state indexing (exposed for
// tests and tooling).
std::vector<std::string> mars_state_labels(const GridMap& map, const EnvConfig& cfg);

}  // namespace cmdpkit
