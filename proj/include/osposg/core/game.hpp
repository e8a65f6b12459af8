#pragma once

#include "osposg/core/errors.hpp"
#include "osposg/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace osposg {

/// One possible outcome of a stage: observation, next state, probability.
struct transition_entry {
    int obs;
    int next;
    prec_t prob;
};

/**
 * Unvalidated description of a one-sided partially observable stochastic game.
 *
 * Player 1 acts under partial information (actions a1, observations o), player 2
 * observes everything. The state space is split into partition blocks such that
 * player 1 always knows the current block; transitions from a block under (a1, o)
 * must lead into a single successor block.
 */
struct game_description {
    std::vector<std::string> states;
    std::vector<std::string> actions1;
    std::vector<std::string> actions2;
    std::vector<std::string> observations;
    prec_t gamma = 0;

    /// Sparse initial belief as (state, probability) pairs.
    std::vector<std::pair<int, prec_t>> initial_belief;

    /// Partition block index of every state.
    indvec block_of_state;
    std::vector<std::string> block_names; // optional, defaults to "B<i>"

    struct successor_decl {
        int block, a1, obs, next_block;
    };
    /// Optional declared successor map; derived and cross-checked when present.
    std::vector<successor_decl> successors;

    struct transition_row {
        int s, a1, a2;
        std::vector<transition_entry> out;
    };
    std::vector<transition_row> transitions;

    struct reward_entry {
        int s, a1, a2;
        prec_t r;
    };
    /// Sparse rewards of player 1; absent entries are 0.
    std::vector<reward_entry> rewards;
};

/// Validated immutable game model with block-local indexing.
class game {
public:
    friend game validate_game(const game_description& desc);

    int n_states() const { return int(state_names_.size()); }
    int n_actions1() const { return int(action1_names_.size()); }
    int n_actions2() const { return int(action2_names_.size()); }
    int n_observations() const { return int(obs_names_.size()); }
    int n_blocks() const { return int(block_states_.size()); }

    prec_t gamma() const { return gamma_; }
    const belief& initial_belief() const { return initial_belief_; }
    const utility_bounds& bounds() const { return bounds_; }

    const std::string& state_name(int s) const { return state_names_[s]; }
    const std::string& action1_name(int a) const { return action1_names_[a]; }
    const std::string& action2_name(int a) const { return action2_names_[a]; }
    const std::string& obs_name(int o) const { return obs_names_[o]; }
    const std::string& block_name(int b) const { return block_names_[b]; }

    prec_t reward(int s, int a1, int a2) const { return rewards_[key(s, a1, a2)]; }

    std::span<const transition_entry> transitions(int s, int a1, int a2) const {
        int k = key(s, a1, a2);
        return {entries_.data() + offsets_[k], entries_.data() + offsets_[k + 1]};
    }

    int block_of(int s) const { return block_of_state_[s]; }
    int local_index(int s) const { return local_index_[s]; }
    const indvec& block_states(int b) const { return block_states_[b]; }
    int block_size(int b) const { return int(block_states_[b].size()); }

    /// Successor block under (a1, o), or -1 when the pair has zero probability
    /// from every state of the block.
    int successor_block(int b, int a1, int o) const {
        return block_successor_[(b * n_actions1() + a1) * n_observations() + o];
    }

private:
    game() = default;

    int key(int s, int a1, int a2) const {
        return (s * n_actions1() + a1) * n_actions2() + a2;
    }

    std::vector<std::string> state_names_, action1_names_, action2_names_, obs_names_,
        block_names_;
    prec_t gamma_ = 0;
    std::vector<transition_entry> entries_;
    indvec offsets_;
    numvec rewards_;
    indvec block_of_state_;
    std::vector<indvec> block_states_;
    indvec local_index_;
    indvec block_successor_;
    belief initial_belief_;
    utility_bounds bounds_{0, 0};
};

/**
 * Validates a description and builds the immutable model.
 *
 * Checks probability rows (nonnegative, sum 1 within tolerance; rows within
 * tolerance are renormalized), gamma in (0,1), the initial belief being supported
 * in a single block, and partition closure: all states reachable from a block
 * under (a1, o) must lie in one block.
 */
inline game validate_game(const game_description& desc) {
    const int S = int(desc.states.size());
    const int A1 = int(desc.actions1.size());
    const int A2 = int(desc.actions2.size());
    const int O = int(desc.observations.size());
    if (S == 0 || A1 == 0 || A2 == 0 || O == 0)
        throw validation_error("states, actions and observations must be nonempty");
    if (!(desc.gamma > 0 && desc.gamma < 1))
        throw gamma_out_of_range_error("gamma must lie strictly inside (0,1), got " +
                                       std::to_string(desc.gamma));
    if (int(desc.block_of_state.size()) != S)
        throw validation_error("block_of_state must assign a block to every state");

    game g;
    g.state_names_ = desc.states;
    g.action1_names_ = desc.actions1;
    g.action2_names_ = desc.actions2;
    g.obs_names_ = desc.observations;
    g.gamma_ = desc.gamma;

    // partition blocks
    int K = 0;
    for (int s = 0; s < S; s++) {
        int b = desc.block_of_state[s];
        if (b < 0) throw validation_error("negative block index for state " + desc.states[s]);
        K = std::max(K, b + 1);
    }
    g.block_of_state_ = desc.block_of_state;
    g.block_states_.assign(K, {});
    for (int s = 0; s < S; s++)
        g.block_states_[desc.block_of_state[s]].push_back(s);
    for (int b = 0; b < K; b++)
        if (g.block_states_[b].empty())
            throw validation_error("partition block " + std::to_string(b) + " is empty");
    g.local_index_.assign(S, -1);
    for (int b = 0; b < K; b++)
        for (std::size_t i = 0; i < g.block_states_[b].size(); i++)
            g.local_index_[g.block_states_[b][i]] = int(i);
    if (desc.block_names.empty()) {
        for (int b = 0; b < K; b++)
            g.block_names_.push_back("B" + std::to_string(b));
    } else {
        if (int(desc.block_names.size()) != K)
            throw validation_error("block_names size does not match the number of blocks");
        g.block_names_ = desc.block_names;
    }

    // transitions: assemble the dense offset table
    const int keys = S * A1 * A2;
    std::vector<std::vector<transition_entry>> rows(keys);
    std::vector<bool> seen(keys, false);
    for (const auto& row : desc.transitions) {
        if (row.s < 0 || row.s >= S || row.a1 < 0 || row.a1 >= A1 || row.a2 < 0 ||
            row.a2 >= A2)
            throw validation_error("transition row index out of range");
        int k = (row.s * A1 + row.a1) * A2 + row.a2;
        if (seen[k])
            throw validation_error("duplicate transition row for state " +
                                   desc.states[row.s]);
        seen[k] = true;
        std::set<std::pair<int, int>> outcomes;
        prec_t sum = 0;
        for (const auto& e : row.out) {
            if (e.obs < 0 || e.obs >= O || e.next < 0 || e.next >= S)
                throw validation_error("transition outcome index out of range");
            if (e.prob < 0)
                throw negative_probability_error(
                    "negative transition probability at state " + desc.states[row.s]);
            if (!outcomes.insert({e.obs, e.next}).second)
                throw validation_error("duplicate transition outcome for state " +
                                       desc.states[row.s]);
            sum += e.prob;
        }
        if (std::abs(sum - 1) > tol::validation)
            throw row_sum_mismatch_error(
                "transition row for (" + desc.states[row.s] + "," + desc.actions1[row.a1] +
                "," + desc.actions2[row.a2] + ") sums to " + std::to_string(sum));
        auto& out = rows[k];
        out = row.out;
        for (auto& e : out)
            e.prob /= sum;
        std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
            return std::tie(x.obs, x.next) < std::tie(y.obs, y.next);
        });
    }
    for (int k = 0; k < keys; k++)
        if (!seen[k]) {
            int a2 = k % A2, a1 = (k / A2) % A1, s = k / (A1 * A2);
            throw row_sum_mismatch_error("missing transition row for (" + desc.states[s] +
                                         "," + desc.actions1[a1] + "," + desc.actions2[a2] +
                                         ")");
        }
    g.offsets_.assign(keys + 1, 0);
    for (int k = 0; k < keys; k++)
        g.offsets_[k + 1] = g.offsets_[k] + int(rows[k].size());
    g.entries_.reserve(g.offsets_[keys]);
    for (int k = 0; k < keys; k++)
        g.entries_.insert(g.entries_.end(), rows[k].begin(), rows[k].end());

    // rewards: dense, absent entries are 0
    g.rewards_.assign(keys, 0.0);
    std::vector<bool> rseen(keys, false);
    for (const auto& e : desc.rewards) {
        if (e.s < 0 || e.s >= S || e.a1 < 0 || e.a1 >= A1 || e.a2 < 0 || e.a2 >= A2)
            throw validation_error("reward index out of range");
        int k = (e.s * A1 + e.a1) * A2 + e.a2;
        if (rseen[k]) throw validation_error("duplicate reward entry");
        rseen[k] = true;
        g.rewards_[k] = e.r;
    }

    // utility bounds over the dense reward table
    prec_t rmin = *std::min_element(g.rewards_.begin(), g.rewards_.end());
    prec_t rmax = *std::max_element(g.rewards_.begin(), g.rewards_.end());
    g.bounds_ = utility_bounds{rmin / (1 - desc.gamma), rmax / (1 - desc.gamma)};

    // partition closure: derive the successor map and check single-valuedness
    g.block_successor_.assign(K * A1 * O, -1);
    for (int b = 0; b < K; b++)
        for (int a1 = 0; a1 < A1; a1++)
            for (const int s : g.block_states_[b])
                for (int a2 = 0; a2 < A2; a2++)
                    for (const auto& e : g.transitions(s, a1, a2)) {
                        if (e.prob <= 0) continue;
                        int& succ = g.block_successor_[(b * A1 + a1) * O + e.obs];
                        int nb = g.block_of_state_[e.next];
                        if (succ == -1)
                            succ = nb;
                        else if (succ != nb)
                            throw partition_leak_error(
                                "block " + g.block_names_[b] + " under (" +
                                desc.actions1[a1] + "," + desc.observations[e.obs] +
                                ") reaches blocks " + g.block_names_[succ] + " and " +
                                g.block_names_[nb]);
                    }
    for (const auto& d : desc.successors) {
        if (d.block < 0 || d.block >= K || d.a1 < 0 || d.a1 >= A1 || d.obs < 0 ||
            d.obs >= O)
            throw validation_error("declared successor index out of range");
        int derived = g.block_successor_[(d.block * A1 + d.a1) * O + d.obs];
        if (derived != -1 && derived != d.next_block)
            throw partition_leak_error("declared successor of block " +
                                       g.block_names_[d.block] +
                                       " contradicts the transition structure");
    }

    // initial belief: nonnegative, normalized, single block
    if (desc.initial_belief.empty())
        throw validation_error("initial belief must be nonempty");
    prec_t bsum = 0;
    int b0 = -1;
    for (const auto& [s, p] : desc.initial_belief) {
        if (s < 0 || s >= S) throw validation_error("initial belief state out of range");
        if (p < 0)
            throw negative_probability_error("negative initial belief probability");
        if (p == 0) continue;
        bsum += p;
        if (b0 == -1)
            b0 = g.block_of_state_[s];
        else if (b0 != g.block_of_state_[s])
            throw validation_error("initial belief spans multiple partition blocks");
    }
    if (std::abs(bsum - 1) > tol::validation)
        throw row_sum_mismatch_error("initial belief sums to " + std::to_string(bsum));
    g.initial_belief_.block = b0;
    g.initial_belief_.probs.assign(g.block_states_[b0].size(), 0.0);
    for (const auto& [s, p] : desc.initial_belief)
        if (p > 0) g.initial_belief_.probs[g.local_index_[s]] += p / bsum;

    return g;
}

/// One entry of the joint stage distribution over (s, a1, a2, o, s').
struct stage_outcome {
    int s, a1, a2, obs, next;
    prec_t prob;
};

/**
 * Joint distribution over (s, a1, a2, o, s') induced by a belief and the stage
 * strategies of both players. Entries with zero probability are omitted.
 */
inline std::vector<stage_outcome> stage_distribution(const game& g, const belief& b,
                                                     const stage_strategy1& pi1,
                                                     const stage_strategy2& pi2) {
    std::vector<stage_outcome> dist;
    const auto& states = g.block_states(b.block);
    for (std::size_t i = 0; i < states.size(); i++) {
        if (b.probs[i] <= 0) continue;
        int s = states[i];
        for (int a1 = 0; a1 < g.n_actions1(); a1++) {
            if (pi1.probs[a1] <= 0) continue;
            for (int a2 = 0; a2 < g.n_actions2(); a2++) {
                prec_t w = b.probs[i] * pi1.probs[a1] * pi2.cond[i][a2];
                if (w <= 0) continue;
                for (const auto& e : g.transitions(s, a1, a2))
                    if (e.prob > 0)
                        dist.push_back({s, a1, a2, e.obs, e.next, w * e.prob});
            }
        }
    }
    return dist;
}

/// Probability that player 1 plays a1 and observes o in the current stage.
inline prec_t prob_action_obs(const game& g, const belief& b, const stage_strategy1& pi1,
                              const stage_strategy2& pi2, int a1, int o) {
    prec_t mass = 0;
    const auto& states = g.block_states(b.block);
    for (std::size_t i = 0; i < states.size(); i++) {
        if (b.probs[i] <= 0) continue;
        for (int a2 = 0; a2 < g.n_actions2(); a2++) {
            prec_t w = b.probs[i] * pi2.cond[i][a2];
            if (w <= 0) continue;
            for (const auto& e : g.transitions(states[i], a1, a2))
                if (e.obs == o) mass += w * e.prob;
        }
    }
    return pi1.probs[a1] * mass;
}

/**
 * Bayesian belief update: distribution of the next state conditioned on player 1
 * playing a1 and observing o, given the opponent stage strategy pi2. Player 1's
 * own mixing cancels out of the conditional.
 *
 * Throws zero_probability_observation_error when (a1, o) has probability 0.
 */
inline belief belief_update(const game& g, const belief& b, int a1,
                            const stage_strategy2& pi2, int o) {
    int succ = g.successor_block(b.block, a1, o);
    if (succ == -1)
        throw zero_probability_observation_error(
            "observation " + g.obs_name(o) + " after " + g.action1_name(a1) +
            " is unreachable from block " + g.block_name(b.block));
    belief out;
    out.block = succ;
    out.probs.assign(g.block_size(succ), 0.0);
    const auto& states = g.block_states(b.block);
    prec_t norm = 0;
    for (std::size_t i = 0; i < states.size(); i++) {
        if (b.probs[i] <= 0) continue;
        for (int a2 = 0; a2 < g.n_actions2(); a2++) {
            prec_t w = b.probs[i] * pi2.cond[i][a2];
            if (w <= 0) continue;
            for (const auto& e : g.transitions(states[i], a1, a2))
                if (e.obs == o && e.prob > 0) {
                    out.probs[g.local_index(e.next)] += w * e.prob;
                    norm += w * e.prob;
                }
        }
    }
    if (norm <= 0)
        throw zero_probability_observation_error(
            "belief update conditioned on zero-probability pair (" + g.action1_name(a1) +
            "," + g.obs_name(o) + ")");
    // posterior mass below the reachability tolerance is accumulated rounding
    // noise; snap it to exact zero so the belief support stays meaningful
    prec_t clean_norm = 0;
    for (auto& p : out.probs) {
        if (p < tol::reach * norm) p = 0;
        clean_norm += p;
    }
    for (auto& p : out.probs)
        p /= clean_norm;
    return out;
}

/// Uniform distribution over player 2's actions for every state of a block.
inline stage_strategy2 uniform_strategy2(const game& g, int block) {
    stage_strategy2 pi2;
    pi2.block = block;
    pi2.cond.assign(g.block_size(block),
                    numvec(g.n_actions2(), 1.0 / g.n_actions2()));
    return pi2;
}

/// Uniform distribution over player 1's actions.
inline stage_strategy1 uniform_strategy1(const game& g) {
    return {numvec(g.n_actions1(), 1.0 / g.n_actions1())};
}

} // namespace osposg
