#include "cmdpkit/envs.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <sstream>

namespace cmdpkit {

namespace {

constexpr std::array<int, 4> kDr = {-1, 1, 0, 0};  // up, down, left, right
constexpr std::array<int, 4> kDc = {0, 0, -1, 1};

}  // namespace

GridMap GridMap::parse(std::istream& in) {
    GridMap map;
    std::string line;
    int file_row = 0;
    while (std::getline(in, line)) {
        ++file_row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == ';') continue;
        for (size_t c = 0; c < line.size(); ++c) {
            char ch = line[c];
            if (ch != '#' && ch != '.' && ch != 'S' && ch != 'G' && ch != 'R' && ch != 'B')
                throw MapParseError(std::string("unknown map character '") + ch + "'", file_row, static_cast<int>(c) + 1);
        }
        map.rows.push_back(line);
    }
    if (map.rows.empty()) throw MapParseError("empty map", 0, 0);
    return map;
}

GridMap GridMap::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open map file: " + path);
    return parse(in);
}

void GridMap::validate_common() const {
    const int h = height(), w = width();
    if (h < 3 || w < 3) throw MapParseError("map too small", 1, 1);
    for (int r = 0; r < h; ++r) {
        if (static_cast<int>(rows[r].size()) != w)
            throw MapParseError("map is not rectangular", r + 1, static_cast<int>(rows[r].size()) + 1);
    }
    for (int c = 0; c < w; ++c) {
        if (at(0, c) != '#') throw MapParseError("map border must be walls", 1, c + 1);
        if (at(h - 1, c) != '#') throw MapParseError("map border must be walls", h, c + 1);
    }
    for (int r = 0; r < h; ++r) {
        if (at(r, 0) != '#') throw MapParseError("map border must be walls", r + 1, 1);
        if (at(r, w - 1) != '#') throw MapParseError("map border must be walls", r + 1, w);
    }
    int starts = 0, goals = 0;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            if (at(r, c) == 'S') ++starts;
            if (at(r, c) == 'G') ++goals;
        }
    if (starts != 1) throw MapParseError("map must contain exactly one 'S'", 1, 1);
    if (goals != 1) throw MapParseError("map must contain exactly one 'G'", 1, 1);
}

void EnvConfig::validate() const {
    if (!(slip >= 0.0 && slip <= 1.0)) throw std::invalid_argument("env config: slip outside [0,1]");
    if (horizon < 1) throw std::invalid_argument("env config: horizon must be >= 1");
}

namespace {

struct CellIndex {
    std::vector<int> cell_of;  // (r*w + c) -> state index or -1 for walls
    std::vector<std::pair<int, int>> pos_of;
};

CellIndex index_cells(const GridMap& map) {
    CellIndex idx;
    const int h = map.height(), w = map.width();
    idx.cell_of.assign(static_cast<size_t>(h) * w, -1);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (map.at(r, c) == '#') continue;
            idx.cell_of[static_cast<size_t>(r) * w + c] = static_cast<int>(idx.pos_of.size());
            idx.pos_of.emplace_back(r, c);
        }
    }
    return idx;
}

// realized-move target: walls bounce back
int move_target(const GridMap& map, const CellIndex& idx, int r, int c, int dir) {
    int nr = r + kDr[dir], nc = c + kDc[dir];
    if (map.at(nr, nc) == '#') return idx.cell_of[static_cast<size_t>(r) * map.width() + c];
    return idx.cell_of[static_cast<size_t>(nr) * map.width() + nc];
}

}  // namespace

Cmdp build_mars_rover(const GridMap& map, const EnvConfig& cfg) {
    map.validate_common();
    cfg.validate();
    for (int r = 0; r < map.height(); ++r)
        for (int c = 0; c < map.width(); ++c)
            if (map.at(r, c) == 'B') throw MapParseError("'B' is not a Mars rover cell", r + 1, c + 1);

    CellIndex idx = index_cells(map);
    const int num_cells = static_cast<int>(idx.pos_of.size());
    const bool with_null = cfg.include_null_action;
    const int S = num_cells + (with_null ? 1 : 0);
    const int A = 4 + (with_null ? 1 : 0);
    const int sink = num_cells;
    const int H = cfg.horizon;

    Cmdp env;
    env.num_states = S;
    env.num_actions = A;
    env.horizon = H;
    env.num_resources = 1;
    env.transitions = TransitionModel(S, A);
    env.rewards = StageTable(S, A);
    env.consumption = ResourceTable(S, A, 1);
    env.budgets = {0.0};

    auto is_goal = [&](int cell) { return map.at(idx.pos_of[cell].first, idx.pos_of[cell].second) == 'G'; };
    auto is_rock = [&](int cell) { return map.at(idx.pos_of[cell].first, idx.pos_of[cell].second) == 'R'; };

    for (int cell = 0; cell < num_cells; ++cell) {
        auto [r, c] = idx.pos_of[cell];
        bool absorbing = is_goal(cell) || is_rock(cell);
        for (int a = 0; a < 4; ++a) {
            if (absorbing) {
                env.transitions.at(cell, a, cell) = 1.0;
                env.rewards.at(cell, a) = is_goal(cell) ? 1.0 / H : 0.0;
                env.consumption.at(cell, a, 0) = is_rock(cell) ? 1.0 / H : 0.0;
                continue;
            }
            // realized kernel: (1-slip) on the intended move plus slip/4 on each move
            for (int a2 = 0; a2 < 4; ++a2) {
                int target = move_target(map, idx, r, c, a2);
                double w = (a2 == a ? 1.0 - cfg.slip : 0.0) + cfg.slip / 4.0;
                env.transitions.at(cell, a, target) += w;
            }
            int intended = move_target(map, idx, r, c, a);
            env.rewards.at(cell, a) = is_goal(intended) ? 1.0 : 0.0;
            env.consumption.at(cell, a, 0) = is_rock(intended) ? 1.0 : 0.0;
        }
        if (with_null) env.transitions.at(cell, 4, sink) = 1.0;

        if (map.at(r, c) == 'S') env.initial_state = cell;
    }
    if (with_null) {
        for (int a = 0; a < A; ++a) env.transitions.at(sink, a, sink) = 1.0;
    }
    env.validate();
    return env;
}

std::vector<std::string> mars_state_labels(const GridMap& map, const EnvConfig& cfg) {
    CellIndex idx = index_cells(map);
    std::vector<std::string> labels;
    for (auto [r, c] : idx.pos_of) {
        std::ostringstream os;
        os << map.at(r, c) << "(" << r << "," << c << ")";
        labels.push_back(os.str());
    }
    if (cfg.include_null_action) labels.push_back("sink");
    return labels;
}

Cmdp build_box(const GridMap& map, const EnvConfig& cfg) {
    map.validate_common();
    cfg.validate();
    int boxes = 0;
    for (int r = 0; r < map.height(); ++r)
        for (int c = 0; c < map.width(); ++c) {
            if (map.at(r, c) == 'R') throw MapParseError("'R' is not a Box cell", r + 1, c + 1);
            if (map.at(r, c) == 'B') ++boxes;
        }
    if (boxes != 1) throw MapParseError("Box map must contain exactly one 'B'", 1, 1);

    CellIndex idx = index_cells(map);
    const int num_cells = static_cast<int>(idx.pos_of.size());
    const int w = map.width();
    const int H = cfg.horizon;

    auto corner = [&](int cell) {
        auto [r, c] = idx.pos_of[cell];
        int walls = 0;
        for (int dir = 0; dir < 4; ++dir)
            if (map.at(r + kDr[dir], c + kDc[dir]) == '#') ++walls;
        return walls >= 2;
    };
    auto cell_char = [&](int cell) { return map.at(idx.pos_of[cell].first, idx.pos_of[cell].second); };

    // states: (agent, box) pairs with agent != box, densely re-indexed
    const bool with_null = cfg.include_null_action;
    std::vector<int> state_of(static_cast<size_t>(num_cells) * num_cells, -1);
    int pair_states = 0;
    for (int agent = 0; agent < num_cells; ++agent)
        for (int box = 0; box < num_cells; ++box)
            if (agent != box) state_of[static_cast<size_t>(agent) * num_cells + box] = pair_states++;
    const int sink = pair_states;
    const int S = pair_states + (with_null ? 1 : 0);
    const int A = 4 + (with_null ? 1 : 0);

    Cmdp env;
    env.num_states = S;
    env.num_actions = A;
    env.horizon = H;
    env.num_resources = 1;
    env.transitions = TransitionModel(S, A);
    env.rewards = StageTable(S, A);
    env.consumption = ResourceTable(S, A, 1);
    env.budgets = {0.0};

    int agent_start = -1, box_start = -1, goal_cell = -1;
    for (int cell = 0; cell < num_cells; ++cell) {
        char ch = cell_char(cell);
        if (ch == 'S') agent_start = cell;
        if (ch == 'B') box_start = cell;
        if (ch == 'G') goal_cell = cell;
    }
    env.initial_state = state_of[static_cast<size_t>(agent_start) * num_cells + box_start];

    // realized dynamics for one (agent, box, direction): push if the next
    // cell holds the box and the cell behind it is free
    auto step_pair = [&](int agent, int box, int dir) -> std::pair<int, int> {
        auto [r, c] = idx.pos_of[agent];
        int nr = r + kDr[dir], nc = c + kDc[dir];
        if (map.at(nr, nc) == '#') return {agent, box};
        int next = idx.cell_of[static_cast<size_t>(nr) * w + nc];
        if (next != box) return {next, box};
        int br = nr + kDr[dir], bc = nc + kDc[dir];
        if (map.at(br, bc) == '#') return {agent, box};
        int box_next = idx.cell_of[static_cast<size_t>(br) * w + bc];
        return {next, box_next};
    };

    for (int agent = 0; agent < num_cells; ++agent) {
        for (int box = 0; box < num_cells; ++box) {
            if (agent == box) continue;
            int s = state_of[static_cast<size_t>(agent) * num_cells + box];
            bool absorbed = (agent == goal_cell);
            double cons = corner(box) ? 1.0 / H : 0.0;
            for (int a = 0; a < 4; ++a) {
                env.consumption.at(s, a, 0) = cons;
                if (absorbed) {
                    env.transitions.at(s, a, s) = 1.0;
                    env.rewards.at(s, a) = 1.0 / H;
                    continue;
                }
                for (int a2 = 0; a2 < 4; ++a2) {
                    auto [na, nb] = step_pair(agent, box, a2);
                    double wgt = (a2 == a ? 1.0 - cfg.slip : 0.0) + cfg.slip / 4.0;
                    env.transitions.at(s, a, state_of[static_cast<size_t>(na) * num_cells + nb]) += wgt;
                }
                auto [ia, ib] = step_pair(agent, box, a);
                (void)ib;
                env.rewards.at(s, a) = (ia == goal_cell) ? 1.0 : 0.0;
            }
            if (with_null) {
                env.transitions.at(s, 4, sink) = 1.0;
                env.consumption.at(s, 4, 0) = 0.0;
            }
        }
    }
    if (with_null) {
        for (int a = 0; a < A; ++a) env.transitions.at(sink, a, sink) = 1.0;
    }
    env.validate();
    return env;
}

Cmdp build_random_cmdp(uint64_t seed, int S, int A, int H, int d, int sparsity) {
    if (S < 1 || A < 1 || H < 1 || d < 0) throw std::invalid_argument("random cmdp: sizes must be >= 1");
    if (sparsity < 1 || sparsity > S) throw std::invalid_argument("random cmdp: support size outside [1,S]");
    RngStream rng(seed);
    Cmdp env;
    env.num_states = S;
    env.num_actions = A;
    env.horizon = H;
    env.num_resources = d;
    env.initial_state = 0;
    env.transitions = TransitionModel(S, A);
    env.rewards = StageTable(S, A);
    env.consumption = ResourceTable(S, A, d);

    std::vector<int> support(S);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            for (int i = 0; i < S; ++i) support[i] = i;
            // partial Fisher-Yates picks the row support
            for (int i = 0; i < sparsity; ++i) {
                int j = i + rng.next_below(S - i);
                std::swap(support[i], support[j]);
            }
            double total = 0.0;
            std::vector<double> weight(sparsity);
            for (int i = 0; i < sparsity; ++i) {
                weight[i] = rng.next_unit() + 1e-3;
                total += weight[i];
            }
            for (int i = 0; i < sparsity; ++i) env.transitions.at(s, a, support[i]) = weight[i] / total;
            env.rewards.at(s, a) = rng.next_unit();
            for (int i = 0; i < d; ++i) env.consumption.at(s, a, i) = rng.next_unit();
        }
    }

    // Budgets above the uniform-policy consumption keep the instance feasible.
    env.budgets.assign(d, 0.0);
    if (d > 0) {
        Policy uniform = Policy::uniform(S, A, H);
        OccupancyMeasure rho = occupancy_from_policy(env.transitions, uniform, env.initial_state, H);
        for (int i = 0; i < d; ++i) {
            double base = expected_total(rho, env.consumption.slice(i));
            env.budgets[i] = base * (1.0 + rng.next_unit());
        }
    }
    env.validate();
    return env;
}

Cmdp with_null_action(const Cmdp& base) {
    base.validate();
    const int S = base.num_states + 1, A = base.num_actions + 1, d = base.num_resources;
    const int sink = base.num_states, null_a = base.num_actions;
    Cmdp env;
    env.num_states = S;
    env.num_actions = A;
    env.horizon = base.horizon;
    env.num_resources = d;
    env.initial_state = base.initial_state;
    env.budgets = base.budgets;
    env.transitions = TransitionModel(S, A);
    env.rewards = StageTable(S, A);
    env.consumption = ResourceTable(S, A, d);
    for (int s = 0; s < base.num_states; ++s) {
        for (int a = 0; a < base.num_actions; ++a) {
            for (int s2 = 0; s2 < base.num_states; ++s2) env.transitions.at(s, a, s2) = base.transitions.at(s, a, s2);
            env.rewards.at(s, a) = base.rewards.at(s, a);
            for (int i = 0; i < d; ++i) env.consumption.at(s, a, i) = base.consumption.at(s, a, i);
        }
        env.transitions.at(s, null_a, sink) = 1.0;
    }
    for (int a = 0; a < A; ++a) env.transitions.at(sink, a, sink) = 1.0;
    env.validate();
    return env;
}

SampledStep sample_step(const Cmdp& cmdp, int s, int a, RngStream& rng) {
    if (s < 0 || s >= cmdp.num_states || a < 0 || a >= cmdp.num_actions)
        throw std::invalid_argument("sample_step: index out of range");
    SampledStep step;
    step.reward = cmdp.rewards.at(s, a);
    step.consumption.resize(cmdp.num_resources);
    for (int i = 0; i < cmdp.num_resources; ++i) step.consumption[i] = cmdp.consumption.at(s, a, i);
    double u = rng.next_unit();
    const double* row = cmdp.transitions.row(s, a);
    double acc = 0.0;
    int next = cmdp.num_states - 1;
    for (int s2 = 0; s2 < cmdp.num_states; ++s2) {
        acc += row[s2];
        if (u < acc) {
            next = s2;
            break;
        }
    }
    step.next_state = next;
    return step;
}

}  // namespace cmdpkit
