#pragma once

#include "osposg/core/game.hpp"
#include "osposg/play/session.hpp"

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>

namespace osposg {

struct episode_stats {
    numvec payoffs;
    prec_t mean = 0;
    prec_t std_error = 0;
    prec_t min = 0;
    prec_t max = 0;
};

namespace detail {

inline prec_t next_unit(std::mt19937_64& rng) {
    return prec_t(rng() >> 11) * 0x1.0p-53;
}

/// Index sampled from unnormalized weights by a deterministic CDF walk.
inline int sample_index(std::mt19937_64& rng, const numvec& w) {
    prec_t total = 0;
    for (prec_t x : w)
        total += x;
    prec_t u = next_unit(rng) * total;
    prec_t acc = 0;
    int last = 0;
    for (std::size_t i = 0; i < w.size(); i++) {
        if (w[i] <= 0) continue;
        last = int(i);
        acc += w[i];
        if (u < acc) return last;
    }
    return last;
}

} // namespace detail

/**
 * Rolls out episodes of the game between two policies and reports the
 * discounted utility truncated at the horizon. Each episode draws from its own
 * deterministic random stream, so results depend only on the seed. Optionally
 * writes one line per step: episode stage state a1 a2 obs next reward.
 */
inline episode_stats simulate(const game& g, player1_policy& p1, player2_policy& p2,
                              int horizon, int episodes, std::uint64_t seed,
                              std::ostream* trajectories = nullptr) {
    episode_stats stats;
    stats.payoffs.reserve(episodes);
    for (int e = 0; e < episodes; e++) {
        std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * std::uint64_t(e + 1));
        p1.reset();
        p2.reset();
        const belief& b0 = g.initial_belief();
        int s = g.block_states(b0.block)[detail::sample_index(rng, b0.probs)];
        prec_t payoff = 0;
        prec_t disc = 1;
        for (int t = 0; t < horizon; t++) {
            stage_strategy1 pi1 = p1.strategy();
            stage_strategy2 pi2 = p2.strategy();
            int a1 = detail::sample_index(rng, pi1.probs);
            int a2 = detail::sample_index(rng, pi2.cond[g.local_index(s)]);
            auto span = g.transitions(s, a1, a2);
            numvec w(span.size());
            for (std::size_t i = 0; i < span.size(); i++)
                w[i] = span[i].prob;
            const auto& out = span[detail::sample_index(rng, w)];
            prec_t r = g.reward(s, a1, a2);
            payoff += disc * r;
            disc *= g.gamma();
            if (trajectories)
                (*trajectories) << e << " " << t << " " << g.state_name(s) << " "
                                << g.action1_name(a1) << " " << g.action2_name(a2)
                                << " " << g.obs_name(out.obs) << " "
                                << g.state_name(out.next) << " " << r << "\n";
            p1.observe(a1, out.obs);
            p2.observe(a1, out.obs);
            s = out.next;
        }
        stats.payoffs.push_back(payoff);
    }

    prec_t sum = 0;
    stats.min = stats.payoffs.front();
    stats.max = stats.payoffs.front();
    for (prec_t x : stats.payoffs) {
        sum += x;
        stats.min = std::min(stats.min, x);
        stats.max = std::max(stats.max, x);
    }
    stats.mean = sum / episodes;
    prec_t ss = 0;
    for (prec_t x : stats.payoffs)
        ss += (x - stats.mean) * (x - stats.mean);
    stats.std_error = episodes > 1 ? std::sqrt(ss / (episodes - 1) / episodes) : 0;
    return stats;
}

} // namespace osposg
