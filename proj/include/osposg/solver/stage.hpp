#pragma once

#include "osposg/bounds/bounds.hpp"
#include "osposg/core/errors.hpp"
#include "osposg/core/game.hpp"
#include "osposg/core/types.hpp"
#include "osposg/lp/lp.hpp"

#include <map>
#include <utility>
#include <vector>

namespace osposg {

/// Key of a player-1 action-observation branch.
using branch_key = std::pair<int, int>; // (a1, o)

/**
 * Composition of a stage strategy with continuation value functions: the value,
 * state by state, of playing pi1 once and continuing with the promised linear
 * function of the reached branch, against a best-responding informed opponent.
 */
inline alpha_vector valcomp(const game& g, const stage_strategy1& pi1,
                            const std::map<branch_key, alpha_vector>& continuations,
                            int block) {
    alpha_vector out;
    out.block = block;
    const auto& states = g.block_states(block);
    out.values.resize(states.size());
    for (std::size_t i = 0; i < states.size(); i++) {
        int s = states[i];
        prec_t best = lp::infinity;
        for (int a2 = 0; a2 < g.n_actions2(); a2++) {
            prec_t acc = 0;
            for (int a1 = 0; a1 < g.n_actions1(); a1++) {
                prec_t p1 = pi1.probs[a1];
                if (p1 <= 0) continue;
                prec_t v = g.reward(s, a1, a2);
                for (const auto& e : g.transitions(s, a1, a2)) {
                    if (e.prob <= 0) continue;
                    auto it = continuations.find({a1, e.obs});
                    if (it == continuations.end()) {
                        if (p1 > tol::strategy_support)
                            throw missing_subgame_alpha_error(
                                "no continuation vector for (" + g.action1_name(a1) +
                                "," + g.obs_name(e.obs) + ")");
                        v = 0;
                        break;
                    }
                    v += g.gamma() * e.prob *
                         it->second.values[g.local_index(e.next)];
                }
                acc += p1 * v;
            }
            best = std::min(best, acc);
        }
        out.values[i] = best;
    }
    return out;
}

namespace detail {

struct branch {
    int a1, obs, succ;
};

/// Reachable (a1, o) branches of a block with their successor blocks,
/// ordered by (a1, o).
inline std::vector<branch> block_branches(const game& g, int block) {
    std::vector<branch> out;
    for (int a1 = 0; a1 < g.n_actions1(); a1++)
        for (int o = 0; o < g.n_observations(); o++) {
            int succ = g.successor_block(block, a1, o);
            if (succ >= 0) out.push_back({a1, o, succ});
        }
    return out;
}

inline numvec normalized_or_uniform(numvec w, prec_t floor_sum) {
    prec_t sum = 0;
    for (auto& x : w) {
        // weights below the reachability tolerance are solver noise; snapping
        // them to exact zero keeps downstream beliefs sparse
        if (x < tol::reach) x = 0;
        sum += x;
    }
    if (sum <= floor_sum) return numvec(w.size(), 1.0 / w.size());
    for (auto& x : w)
        x /= sum;
    return w;
}

} // namespace detail

struct stage_lb_result {
    prec_t value;
    stage_strategy1 pi1;
    stage_strategy2 pi2;
    /// Convex weights over the successor block's vector set, per branch with
    /// pi1(a1) above the support tolerance.
    std::map<branch_key, numvec> alpha_selection;
    /// Continuation vector promised for each reachable branch.
    std::map<branch_key, alpha_vector> continuations;
    /// Certificate: valcomp of (pi1, continuations); everywhere a valid lower bound.
    alpha_vector composed_alpha;
};

namespace detail {

/// Builds the lower-bound stage LP. Maximizes b*V subject to V(s) being a best
/// response bound for every opponent action, with continuations restricted to
/// convex combinations of the stored vector sets; gadget_floor optionally adds
/// per-state floors V(s) >= floor(s) on top.
inline lp::model build_stage_lb(const game& g, const lower_bound& lb, const belief& b,
                                const std::vector<branch>& branches,
                                std::vector<indvec>& lambda_ids, indvec& pi1_ids,
                                indvec& v_ids, int& br_rows_begin,
                                const alpha_vector* gadget_floor) {
    lp::model m;
    const auto& states = g.block_states(b.block);
    const int n = int(states.size());

    pi1_ids.resize(g.n_actions1());
    for (int a1 = 0; a1 < g.n_actions1(); a1++)
        pi1_ids[a1] = m.add_variable(0, lp::infinity);
    v_ids.resize(n);
    for (int i = 0; i < n; i++)
        v_ids[i] = m.add_variable(-lp::infinity, lp::infinity);
    lambda_ids.assign(branches.size(), {});
    for (std::size_t j = 0; j < branches.size(); j++) {
        const auto& set = lb.block_set(branches[j].succ);
        if (set.empty())
            throw empty_bound_error("lower bound empty for successor block " +
                                    g.block_name(branches[j].succ));
        for (std::size_t i = 0; i < set.size(); i++)
            lambda_ids[j].push_back(m.add_variable(0, lp::infinity));
    }

    std::vector<lp::term> obj;
    for (int i = 0; i < n; i++)
        if (b.probs[i] != 0) obj.push_back({v_ids[i], b.probs[i]});
    if (obj.empty()) obj.push_back({v_ids[0], 0.0});
    m.set_objective(lp::sense::maximize, std::move(obj));

    {
        std::vector<lp::term> terms;
        for (int a1 = 0; a1 < g.n_actions1(); a1++)
            terms.push_back({pi1_ids[a1], 1.0});
        m.add_constraint(std::move(terms), lp::rel::eq, 1.0);
    }
    for (std::size_t j = 0; j < branches.size(); j++) {
        std::vector<lp::term> terms;
        for (int id : lambda_ids[j])
            terms.push_back({id, 1.0});
        terms.push_back({pi1_ids[branches[j].a1], -1.0});
        m.add_constraint(std::move(terms), lp::rel::eq, 0.0);
    }

    // branch lookup by (a1, o)
    std::vector<int> branch_at(std::size_t(g.n_actions1()) * g.n_observations(), -1);
    for (std::size_t j = 0; j < branches.size(); j++)
        branch_at[branches[j].a1 * g.n_observations() + branches[j].obs] = int(j);

    br_rows_begin = m.n_rows();
    numvec scratch;
    for (int i = 0; i < n; i++) {
        int s = states[i];
        for (int a2 = 0; a2 < g.n_actions2(); a2++) {
            std::vector<lp::term> terms;
            terms.push_back({v_ids[i], 1.0});
            for (int a1 = 0; a1 < g.n_actions1(); a1++) {
                prec_t r = g.reward(s, a1, a2);
                if (r != 0) terms.push_back({pi1_ids[a1], -r});
                auto span = g.transitions(s, a1, a2);
                std::size_t idx = 0;
                while (idx < span.size()) {
                    int o = span[idx].obs; // entries are sorted by observation
                    int j = branch_at[a1 * g.n_observations() + o];
                    if (j < 0) {
                        while (idx < span.size() && span[idx].obs == o)
                            idx++;
                        continue;
                    }
                    const auto& set = lb.block_set(branches[j].succ);
                    scratch.assign(set.size(), 0.0);
                    for (; idx < span.size() && span[idx].obs == o; idx++) {
                        if (span[idx].prob <= 0) continue;
                        prec_t w = g.gamma() * span[idx].prob;
                        int next_local = g.local_index(span[idx].next);
                        for (std::size_t k = 0; k < set.size(); k++)
                            scratch[k] += w * set[k].values[next_local];
                    }
                    for (std::size_t k = 0; k < set.size(); k++)
                        if (scratch[k] != 0)
                            terms.push_back({lambda_ids[j][k], -scratch[k]});
                }
            }
            m.add_constraint(std::move(terms), lp::rel::le, 0.0);
        }
    }

    if (gadget_floor) {
        for (int i = 0; i < n; i++)
            m.add_constraint({{v_ids[i], 1.0}}, lp::rel::ge,
                             gadget_floor->values[i] - 1e-7);
    }
    return m;
}

inline std::map<branch_key, alpha_vector>
recover_continuations(const game& g, const lower_bound& lb,
                      const std::vector<branch>& branches,
                      const std::vector<indvec>& lambda_ids, const indvec& pi1_ids,
                      const lp::solution& sol,
                      std::map<branch_key, numvec>* selection_out) {
    std::map<branch_key, alpha_vector> cont;
    for (std::size_t j = 0; j < branches.size(); j++) {
        const auto& br = branches[j];
        const auto& set = lb.block_set(br.succ);
        prec_t p1 = sol.primal[pi1_ids[br.a1]];
        alpha_vector a;
        a.block = br.succ;
        if (p1 < tol::strategy_support) {
            a = lb.initial(br.succ);
        } else {
            numvec w(set.size());
            for (std::size_t k = 0; k < set.size(); k++)
                w[k] = sol.primal[lambda_ids[j][k]];
            w = normalized_or_uniform(std::move(w), 0.0);
            a.values.assign(g.block_size(br.succ), 0.0);
            for (std::size_t k = 0; k < set.size(); k++) {
                if (w[k] == 0) continue;
                for (std::size_t s = 0; s < a.values.size(); s++)
                    a.values[s] += w[k] * set[k].values[s];
            }
            if (selection_out) (*selection_out)[{br.a1, br.obs}] = std::move(w);
        }
        cont[{br.a1, br.obs}] = std::move(a);
    }
    return cont;
}

} // namespace detail

/**
 * Solves the lower-bound stage game at a belief: the best stage strategy and
 * continuation promises for player 1 against a best-responding informed
 * opponent, with continuations drawn from the stored vector sets. The opponent
 * equilibrium strategy is recovered from the duals of the best-response rows.
 */
inline stage_lb_result solve_stage_lb(const game& g, const lower_bound& lb,
                                      const belief& b) {
    auto branches = detail::block_branches(g, b.block);
    std::vector<indvec> lambda_ids;
    indvec pi1_ids, v_ids;
    int br_rows_begin = 0;
    auto m = detail::build_stage_lb(g, lb, b, branches, lambda_ids, pi1_ids, v_ids,
                                    br_rows_begin, nullptr);
    auto sol = lp::solve(m);
    if (sol.stat != lp::status::optimal)
        throw lp_failure_error("lower-bound stage LP did not solve");

    stage_lb_result res;
    res.value = sol.objective;
    res.pi1.probs.resize(g.n_actions1());
    for (int a1 = 0; a1 < g.n_actions1(); a1++)
        res.pi1.probs[a1] = sol.primal[pi1_ids[a1]];
    res.pi1.probs = detail::normalized_or_uniform(std::move(res.pi1.probs), 0.0);

    const int n = g.block_size(b.block);
    res.pi2.block = b.block;
    res.pi2.cond.resize(n);
    for (int i = 0; i < n; i++) {
        numvec w(g.n_actions2());
        for (int a2 = 0; a2 < g.n_actions2(); a2++)
            w[a2] = sol.dual[br_rows_begin + i * g.n_actions2() + a2];
        res.pi2.cond[i] = detail::normalized_or_uniform(std::move(w), tol::reach);
    }

    res.continuations = detail::recover_continuations(g, lb, branches, lambda_ids,
                                                      pi1_ids, sol, &res.alpha_selection);
    res.composed_alpha = valcomp(g, res.pi1, res.continuations, b.block);
    return res;
}

struct resolve_result {
    prec_t value;
    stage_strategy1 pi1;
    std::map<branch_key, alpha_vector> continuations;
    alpha_vector composed_alpha;
};

/**
 * Stage resolving against a gadget: like the lower-bound stage game, but the
 * composed value must dominate the gadget floor in every state of the block,
 * so earlier promises to the opponent are kept.
 *
 * Throws infeasible_gadget_error when no dominating composition exists.
 */
inline resolve_result resolve_gadget(const game& g, const lower_bound& lb,
                                     const belief& b, const alpha_vector& gadget) {
    auto branches = detail::block_branches(g, b.block);
    std::vector<indvec> lambda_ids;
    indvec pi1_ids, v_ids;
    int br_rows_begin = 0;
    auto m = detail::build_stage_lb(g, lb, b, branches, lambda_ids, pi1_ids, v_ids,
                                    br_rows_begin, &gadget);
    auto sol = lp::solve(m);
    if (sol.stat == lp::status::infeasible)
        throw infeasible_gadget_error("no strategy dominates the gadget in block " +
                                      g.block_name(b.block));
    if (sol.stat != lp::status::optimal)
        throw lp_failure_error("resolving LP did not solve");

    resolve_result res;
    res.value = sol.objective;
    res.pi1.probs.resize(g.n_actions1());
    for (int a1 = 0; a1 < g.n_actions1(); a1++)
        res.pi1.probs[a1] = sol.primal[pi1_ids[a1]];
    res.pi1.probs = detail::normalized_or_uniform(std::move(res.pi1.probs), 0.0);
    res.continuations = detail::recover_continuations(g, lb, branches, lambda_ids,
                                                      pi1_ids, sol, nullptr);
    res.composed_alpha = valcomp(g, res.pi1, res.continuations, b.block);
    return res;
}

struct stage_ub_result {
    prec_t value;
    stage_strategy1 pi1;
    stage_strategy2 pi2;
};

/**
 * Solves the upper-bound stage game at a belief: the informed opponent picks a
 * joint stage strategy minimizing the bound, with subgame values given by the
 * Lipschitz envelope of the stored points at the unnormalized updated beliefs.
 * Player 1's equilibrium strategy is recovered from the duals of the
 * best-response rows.
 */
inline stage_ub_result solve_stage_ub(const game& g, const upper_bound& ub,
                                      const belief& b) {
    auto branches = detail::block_branches(g, b.block);
    const auto& states = g.block_states(b.block);
    const int n = int(states.size());
    const int A2 = g.n_actions2();
    const prec_t delta = g.bounds().delta();

    lp::model m;
    int v_id = m.add_variable(-lp::infinity, lp::infinity);
    // joint opponent strategy, pi2(s and a2)
    std::vector<indvec> pi2_ids(n, indvec(A2));
    for (int i = 0; i < n; i++)
        for (int a2 = 0; a2 < A2; a2++)
            pi2_ids[i][a2] = m.add_variable(0, lp::infinity);
    indvec vhat_ids(branches.size());
    std::vector<indvec> lam_ids(branches.size());
    std::vector<indvec> pos_ids(branches.size()), neg_ids(branches.size());
    for (std::size_t j = 0; j < branches.size(); j++) {
        const auto& set = ub.block_set(branches[j].succ);
        if (set.empty())
            throw empty_bound_error("upper bound empty for successor block " +
                                    g.block_name(branches[j].succ));
        vhat_ids[j] = m.add_variable(-lp::infinity, lp::infinity);
        for (std::size_t k = 0; k < set.size(); k++)
            lam_ids[j].push_back(m.add_variable(0, lp::infinity));
        int ns = g.block_size(branches[j].succ);
        pos_ids[j].resize(ns);
        neg_ids[j].resize(ns);
        for (int s = 0; s < ns; s++) {
            pos_ids[j][s] = m.add_variable(0, lp::infinity);
            neg_ids[j][s] = m.add_variable(0, lp::infinity);
        }
    }

    m.set_objective(lp::sense::minimize, {{v_id, 1.0}});

    // belief marginal per state
    for (int i = 0; i < n; i++) {
        std::vector<lp::term> terms;
        for (int a2 = 0; a2 < A2; a2++)
            terms.push_back({pi2_ids[i][a2], 1.0});
        m.add_constraint(std::move(terms), lp::rel::eq, b.probs[i]);
    }

    // best-response rows per player-1 action (duals give pi1)
    int br_rows_begin = m.n_rows();
    for (int a1 = 0; a1 < g.n_actions1(); a1++) {
        std::vector<lp::term> terms;
        terms.push_back({v_id, 1.0});
        for (int i = 0; i < n; i++)
            for (int a2 = 0; a2 < A2; a2++) {
                prec_t r = g.reward(states[i], a1, a2);
                if (r != 0) terms.push_back({pi2_ids[i][a2], -r});
            }
        for (std::size_t j = 0; j < branches.size(); j++)
            if (branches[j].a1 == a1)
                terms.push_back({vhat_ids[j], -g.gamma()});
        m.add_constraint(std::move(terms), lp::rel::ge, 0.0);
    }

    for (std::size_t j = 0; j < branches.size(); j++) {
        const auto& br = branches[j];
        const auto& set = ub.block_set(br.succ);
        int ns = g.block_size(br.succ);

        // subgame value: envelope value plus Lipschitz slack
        std::vector<lp::term> vj;
        vj.push_back({vhat_ids[j], 1.0});
        for (std::size_t k = 0; k < set.size(); k++)
            if (set[k].y != 0) vj.push_back({lam_ids[j][k], -set[k].y});
        for (int s = 0; s < ns; s++) {
            vj.push_back({pos_ids[j][s], -delta});
            vj.push_back({neg_ids[j][s], -delta});
        }
        m.add_constraint(std::move(vj), lp::rel::eq, 0.0);

        // combined point matches the unnormalized updated belief up to (pos, neg)
        std::vector<std::vector<lp::term>> match(ns);
        std::vector<lp::term> mass;
        for (std::size_t k = 0; k < set.size(); k++) {
            for (int s = 0; s < ns; s++)
                if (set[k].probs[s] != 0)
                    match[s].push_back({lam_ids[j][k], set[k].probs[s]});
            mass.push_back({lam_ids[j][k], 1.0});
        }
        for (int i = 0; i < n; i++)
            for (int a2 = 0; a2 < A2; a2++) {
                prec_t total = 0;
                for (const auto& e : g.transitions(states[i], br.a1, a2)) {
                    if (e.obs != br.obs || e.prob <= 0) continue;
                    match[g.local_index(e.next)].push_back(
                        {pi2_ids[i][a2], -e.prob});
                    total += e.prob;
                }
                if (total != 0) mass.push_back({pi2_ids[i][a2], -total});
            }
        for (int s = 0; s < ns; s++) {
            match[s].push_back({pos_ids[j][s], -1.0});
            match[s].push_back({neg_ids[j][s], 1.0});
            m.add_constraint(std::move(match[s]), lp::rel::eq, 0.0);
        }
        m.add_constraint(std::move(mass), lp::rel::eq, 0.0);
    }

    auto sol = lp::solve(m);
    if (sol.stat != lp::status::optimal)
        throw lp_failure_error("upper-bound stage LP did not solve");

    stage_ub_result res;
    res.value = sol.objective;
    res.pi2.block = b.block;
    res.pi2.cond.resize(n);
    for (int i = 0; i < n; i++) {
        if (b.probs[i] > tol::strategy_support) {
            numvec w(A2);
            for (int a2 = 0; a2 < A2; a2++)
                w[a2] = sol.primal[pi2_ids[i][a2]];
            res.pi2.cond[i] = detail::normalized_or_uniform(std::move(w), tol::reach);
        } else {
            res.pi2.cond[i].assign(A2, 1.0 / A2);
        }
    }
    res.pi1.probs.resize(g.n_actions1());
    for (int a1 = 0; a1 < g.n_actions1(); a1++)
        res.pi1.probs[a1] = sol.dual[br_rows_begin + a1];
    res.pi1.probs = detail::normalized_or_uniform(std::move(res.pi1.probs), 0.0);
    return res;
}

/**
 * Value of the lower-bound stage game computed through the opponent's side:
 * the informed opponent minimizes against best-response rows per player-1
 * action, with subgame values bounded below by every stored vector at the
 * unnormalized updated belief. Used to cross-check solve_stage_lb.
 */
inline std::pair<prec_t, stage_strategy2>
solve_stage_lb_dual(const game& g, const lower_bound& lb, const belief& b) {
    auto branches = detail::block_branches(g, b.block);
    const auto& states = g.block_states(b.block);
    const int n = int(states.size());
    const int A2 = g.n_actions2();

    lp::model m;
    int v_id = m.add_variable(-lp::infinity, lp::infinity);
    std::vector<indvec> pi2_ids(n, indvec(A2));
    for (int i = 0; i < n; i++)
        for (int a2 = 0; a2 < A2; a2++)
            pi2_ids[i][a2] = m.add_variable(0, lp::infinity);
    indvec vhat_ids(branches.size());
    for (std::size_t j = 0; j < branches.size(); j++)
        vhat_ids[j] = m.add_variable(-lp::infinity, lp::infinity);

    m.set_objective(lp::sense::minimize, {{v_id, 1.0}});

    for (int i = 0; i < n; i++) {
        std::vector<lp::term> terms;
        for (int a2 = 0; a2 < A2; a2++)
            terms.push_back({pi2_ids[i][a2], 1.0});
        m.add_constraint(std::move(terms), lp::rel::eq, b.probs[i]);
    }
    for (int a1 = 0; a1 < g.n_actions1(); a1++) {
        std::vector<lp::term> terms;
        terms.push_back({v_id, 1.0});
        for (int i = 0; i < n; i++)
            for (int a2 = 0; a2 < A2; a2++) {
                prec_t r = g.reward(states[i], a1, a2);
                if (r != 0) terms.push_back({pi2_ids[i][a2], -r});
            }
        for (std::size_t j = 0; j < branches.size(); j++)
            if (branches[j].a1 == a1)
                terms.push_back({vhat_ids[j], -g.gamma()});
        m.add_constraint(std::move(terms), lp::rel::ge, 0.0);
    }
    for (std::size_t j = 0; j < branches.size(); j++) {
        const auto& br = branches[j];
        const auto& set = lb.block_set(br.succ);
        for (const auto& alpha : set) {
            std::vector<lp::term> terms;
            terms.push_back({vhat_ids[j], 1.0});
            for (int i = 0; i < n; i++)
                for (int a2 = 0; a2 < A2; a2++) {
                    prec_t c = 0;
                    for (const auto& e : g.transitions(states[i], br.a1, a2))
                        if (e.obs == br.obs && e.prob > 0)
                            c += e.prob * alpha.values[g.local_index(e.next)];
                    if (c != 0) terms.push_back({pi2_ids[i][a2], -c});
                }
            m.add_constraint(std::move(terms), lp::rel::ge, 0.0);
        }
    }

    auto sol = lp::solve(m);
    if (sol.stat != lp::status::optimal)
        throw lp_failure_error("opponent-side stage LP did not solve");
    stage_strategy2 pi2;
    pi2.block = b.block;
    pi2.cond.resize(n);
    for (int i = 0; i < n; i++) {
        numvec w(A2);
        for (int a2 = 0; a2 < A2; a2++)
            w[a2] = sol.primal[pi2_ids[i][a2]];
        pi2.cond[i] = detail::normalized_or_uniform(std::move(w), tol::reach);
    }
    return {sol.objective, std::move(pi2)};
}

} // namespace osposg
