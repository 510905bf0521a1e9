#include "cmdpkit/estimation.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace cmdpkit {

Counts::Counts(int S, int A, int d)
    : num_states(S),
      num_actions(A),
      num_resources(d),
      visits(static_cast<size_t>(S) * A, 0),
      transition_counts(static_cast<size_t>(S) * A * S, 0),
      reward_sum(static_cast<size_t>(S) * A, 0.0),
      consumption_sum(static_cast<size_t>(S) * A * d, 0.0) {
    if (S <= 0 || A <= 0 || d < 0) throw std::invalid_argument("counts: bad dimensions");
}

void Counts::record_step(int s, int a, double reward, std::span<const double> consumption, int next_state) {
    if (s < 0 || s >= num_states || a < 0 || a >= num_actions || next_state < 0 || next_state >= num_states)
        throw std::invalid_argument("counts: index out of range");
    if (static_cast<int>(consumption.size()) != num_resources)
        throw std::invalid_argument("counts: consumption dimension mismatch");
    if (!(reward >= 0.0 && reward <= 1.0)) throw std::invalid_argument("counts: reward outside [0,1]");
    for (double c : consumption)
        if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("counts: consumption outside [0,1]");
    size_t sa = static_cast<size_t>(s) * num_actions + a;
    visits[sa] += 1;
    transition_counts[sa * num_states + next_state] += 1;
    reward_sum[sa] += reward;
    for (int i = 0; i < num_resources; ++i) consumption_sum[sa * num_resources + i] += consumption[i];
}

// Snapshot format: header line "counts S A d episodes", then one record per
// (s,a): "s a N reward_sum c_sum_0..c_sum_{d-1} n_0..n_{S-1}".
void Counts::save(std::ostream& out) const {
    out << "counts " << num_states << ' ' << num_actions << ' ' << num_resources << ' ' << episodes_seen << '\n';
    out.precision(17);
    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            size_t sa = static_cast<size_t>(s) * num_actions + a;
            out << s << ' ' << a << ' ' << visits[sa] << ' ' << reward_sum[sa];
            for (int i = 0; i < num_resources; ++i) out << ' ' << consumption_sum[sa * num_resources + i];
            for (int s2 = 0; s2 < num_states; ++s2) out << ' ' << transition_counts[sa * num_states + s2];
            out << '\n';
        }
    }
}

Counts Counts::load(std::istream& in) {
    std::string tag;
    int S, A, d;
    long long episodes;
    if (!(in >> tag >> S >> A >> d >> episodes) || tag != "counts")
        throw std::invalid_argument("counts: malformed snapshot header");
    Counts c(S, A, d);
    c.episodes_seen = episodes;
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            int rs, ra;
            if (!(in >> rs >> ra) || rs != s || ra != a) throw std::invalid_argument("counts: malformed snapshot record");
            size_t sa = static_cast<size_t>(s) * A + a;
            if (!(in >> c.visits[sa] >> c.reward_sum[sa])) throw std::invalid_argument("counts: malformed snapshot record");
            for (int i = 0; i < d; ++i)
                if (!(in >> c.consumption_sum[sa * d + i])) throw std::invalid_argument("counts: malformed snapshot record");
            long long total = 0;
            for (int s2 = 0; s2 < S; ++s2) {
                if (!(in >> c.transition_counts[sa * S + s2])) throw std::invalid_argument("counts: malformed snapshot record");
                total += c.transition_counts[sa * S + s2];
            }
            if (total != c.visits[sa]) throw std::invalid_argument("counts: snapshot transition totals inconsistent");
        }
    }
    return c;
}

void BonusConfig::validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("bonus config: delta outside (0,1)");
    if (num_states <= 0 || num_actions <= 0 || horizon <= 0 || num_resources < 0)
        throw std::invalid_argument("bonus config: bad dimensions");
}

StageTable BonusEnhancedModel::r_hat() const {
    StageTable out = r_plus;
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] -= bonus.values[i];
    return out;
}

ResourceTable BonusEnhancedModel::c_hat() const {
    ResourceTable out = c_minus;
    const int d = out.num_resources;
    for (int s = 0; s < out.num_states; ++s)
        for (int a = 0; a < out.num_actions; ++a)
            for (int i = 0; i < d; ++i) out.at(s, a, i) += bonus.at(s, a);
    return out;
}

EmpiricalModel empirical_model(const Counts& counts) {
    const int S = counts.num_states, A = counts.num_actions, d = counts.num_resources;
    EmpiricalModel m;
    m.p_hat = TransitionModel(S, A);
    m.r_hat = StageTable(S, A);
    m.c_hat = ResourceTable(S, A, d);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            size_t sa = static_cast<size_t>(s) * A + a;
            long long n = counts.visits[sa];
            if (n == 0) {
                double u = 1.0 / S;
                for (int s2 = 0; s2 < S; ++s2) m.p_hat.at(s, a, s2) = u;
                continue;
            }
            double inv = 1.0 / static_cast<double>(n);
            for (int s2 = 0; s2 < S; ++s2)
                m.p_hat.at(s, a, s2) = static_cast<double>(counts.transition_counts[sa * S + s2]) * inv;
            m.r_hat.at(s, a) = counts.reward_sum[sa] * inv;
            for (int i = 0; i < d; ++i) m.c_hat.at(s, a, i) = counts.consumption_sum[sa * d + i] * inv;
        }
    }
    return m;
}

StageTable compute_bonus(const Counts& counts, long long episode_index, const BonusConfig& cfg) {
    cfg.validate();
    if (episode_index < 1) throw std::invalid_argument("compute_bonus: episode index must be >= 1");
    const int S = cfg.num_states, A = cfg.num_actions, H = cfg.horizon, d = cfg.num_resources;
    const double k = static_cast<double>(episode_index);
    const double log_arg = 8.0 * S * A * H * (d + 1) * k * k / cfg.delta;
    const double two_log = 2.0 * std::log(log_arg);
    StageTable b(S, A);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            double n = static_cast<double>(std::max<long long>(1, counts.visit(s, a)));
            b.at(s, a) = std::min(2.0 * H, H * std::sqrt(two_log / n));
        }
    }
    return b;
}

BonusEnhancedModel bonus_enhanced_model(const EmpiricalModel& emp, const StageTable& bonus) {
    if (bonus.num_states != emp.r_hat.num_states || bonus.num_actions != emp.r_hat.num_actions)
        throw std::invalid_argument("bonus table incompatible with empirical model");
    BonusEnhancedModel out;
    out.p = emp.p_hat;
    out.r_plus = emp.r_hat;
    out.c_minus = emp.c_hat;
    out.bonus = bonus;
    const int S = bonus.num_states, A = bonus.num_actions, d = emp.c_hat.num_resources;
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            double b = bonus.at(s, a);
            out.r_plus.at(s, a) += b;
            for (int i = 0; i < d; ++i) out.c_minus.at(s, a, i) -= b;
        }
    }
    return out;
}

BonusEnhancedModel exact_model(const Cmdp& cmdp) {
    BonusEnhancedModel out;
    out.p = cmdp.transitions;
    out.r_plus = cmdp.rewards;
    out.c_minus = cmdp.consumption;
    out.bonus = StageTable(cmdp.num_states, cmdp.num_actions, 0.0);
    return out;
}

}  // namespace cmdpkit
