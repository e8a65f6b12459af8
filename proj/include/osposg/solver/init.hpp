#pragma once

#include "osposg/bounds/bounds.hpp"
#include "osposg/core/game.hpp"
#include "osposg/lp/lp.hpp"

#include <chrono>
#include <cmath>

namespace osposg {

/// Outcome of a value-iteration based bound initialization.
struct init_result {
    int sweeps = 0;
    prec_t residual = 0;
    numvec residual_trace; // residual after every sweep
    bool time_limited = false;
};

/// Value of a zero-sum matrix game (row player maximizes), by LP.
inline prec_t matrix_game_value(const std::vector<numvec>& m) {
    const int n1 = int(m.size());
    const int n2 = int(m[0].size());
    lp::model lpm;
    int v = lpm.add_variable(-lp::infinity, lp::infinity);
    indvec x(n1);
    for (int i = 0; i < n1; i++)
        x[i] = lpm.add_variable(0, lp::infinity);
    lpm.set_objective(lp::sense::maximize, {{v, 1.0}});
    for (int j = 0; j < n2; j++) {
        std::vector<lp::term> terms{{v, 1.0}};
        for (int i = 0; i < n1; i++)
            if (m[i][j] != 0) terms.push_back({x[i], -m[i][j]});
        lpm.add_constraint(std::move(terms), lp::rel::le, 0.0);
    }
    {
        std::vector<lp::term> terms;
        for (int i = 0; i < n1; i++)
            terms.push_back({x[i], 1.0});
        lpm.add_constraint(std::move(terms), lp::rel::eq, 1.0);
    }
    auto sol = lp::solve(lpm);
    if (sol.stat != lp::status::optimal)
        throw lp_failure_error("matrix game LP did not solve");
    return sol.objective;
}

/**
 * Initializes the lower bound with the value of player 1 playing uniformly
 * forever. The informed opponent then faces a Markov decision problem; value
 * iteration from the utility floor converges from below, so every iterate is a
 * valid bound. Stops when the sweep residual drops below beta or the time
 * limit runs out.
 */
inline init_result lb_init(const game& g, lower_bound& lb, prec_t beta = 0.025,
                           double time_limit_s = 1200.0) {
    const auto t0 = std::chrono::steady_clock::now();
    const int S = g.n_states();
    const prec_t unif = 1.0 / g.n_actions1();
    numvec val(S, g.bounds().lower), next(S);
    init_result res;
    for (;;) {
        prec_t resid = 0;
        for (int s = 0; s < S; s++) {
            prec_t best = lp::infinity;
            for (int a2 = 0; a2 < g.n_actions2(); a2++) {
                prec_t acc = 0;
                for (int a1 = 0; a1 < g.n_actions1(); a1++) {
                    prec_t v = g.reward(s, a1, a2);
                    for (const auto& e : g.transitions(s, a1, a2))
                        v += g.gamma() * e.prob * val[e.next];
                    acc += unif * v;
                }
                best = std::min(best, acc);
            }
            next[s] = best;
            resid = std::max(resid, std::abs(next[s] - val[s]));
        }
        val.swap(next);
        res.sweeps++;
        res.residual = resid;
        res.residual_trace.push_back(resid);
        if (resid < beta) break;
        if (std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count() > time_limit_s) {
            res.time_limited = true;
            break;
        }
    }
    for (int b = 0; b < g.n_blocks(); b++) {
        alpha_vector a;
        a.block = b;
        for (int s : g.block_states(b))
            a.values.push_back(val[s]);
        lb.set_initial(std::move(a));
    }
    return res;
}

/**
 * Initializes the upper bound with the value of the perfect-information
 * variant, by iterating the matrix-game fixpoint from the utility ceiling.
 * Every iterate dominates the optimal value, so each state yields a valid
 * point at its unit belief.
 */
inline init_result ub_init(const game& g, upper_bound& ub, prec_t beta = 0.025,
                           double time_limit_s = 1200.0) {
    const auto t0 = std::chrono::steady_clock::now();
    const int S = g.n_states();
    numvec val(S, g.bounds().upper), next(S);
    std::vector<numvec> m(g.n_actions1(), numvec(g.n_actions2()));
    init_result res;
    for (;;) {
        prec_t resid = 0;
        for (int s = 0; s < S; s++) {
            for (int a1 = 0; a1 < g.n_actions1(); a1++)
                for (int a2 = 0; a2 < g.n_actions2(); a2++) {
                    prec_t v = g.reward(s, a1, a2);
                    for (const auto& e : g.transitions(s, a1, a2))
                        v += g.gamma() * e.prob * val[e.next];
                    m[a1][a2] = v;
                }
            next[s] = matrix_game_value(m);
            resid = std::max(resid, std::abs(next[s] - val[s]));
        }
        val.swap(next);
        res.sweeps++;
        res.residual = resid;
        res.residual_trace.push_back(resid);
        if (resid < beta) break;
        if (std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count() > time_limit_s) {
            res.time_limited = true;
            break;
        }
    }
    for (int b = 0; b < g.n_blocks(); b++) {
        const auto& states = g.block_states(b);
        for (std::size_t i = 0; i < states.size(); i++) {
            belief e;
            e.block = b;
            e.probs.assign(states.size(), 0.0);
            e.probs[i] = 1.0;
            ub.insert(e, val[states[i]]);
        }
    }
    ub.set_prune_baseline();
    return res;
}

} // namespace osposg
