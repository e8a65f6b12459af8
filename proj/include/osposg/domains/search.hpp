#pragma once

#include "osposg/core/game.hpp"

#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace osposg {

/**
 * Border search game on two checkpoint lines of the given width. An intruder
 * (player 2) starts off-board, must cross a node of line 1 and then a node of
 * line 2 (moving to the same or an adjacent index), and finally escapes past
 * line 2 for a defender loss of 100. The defender (player 1) shifts each of
 * its units one step left or right along its line, or holds. A unit standing
 * on the intruder's node after the simultaneous moves captures it. The
 * defender only observes the game ending (capture or escape), so the blocks
 * are the defender unit placements.
 */
inline game gen_search(int width, int line1_units, prec_t gamma) {
    if (width < 1) throw validation_error("search needs a positive width");
    if (line1_units < 1 || line1_units > 2)
        throw validation_error("search supports 1 or 2 units on line 1");
    const int W = width;
    const int n1 = line1_units;
    const int units = n1 + 1; // one unit guards line 2

    // Intruder positions: 0 = start, 1..W = line-1 nodes, W+1..2W = line-2 nodes.
    const int at_start = 0;
    auto at_line1 = [&](int pos) { return pos >= 1 && pos <= W; };
    auto at_line2 = [&](int pos) { return pos > W; };
    const int escaped = -1;

    auto clamp_node = [&](int j) { return j < 0 ? 0 : (j >= W ? W - 1 : j); };

    const int nA1 = [&] {
        int n = 1;
        for (int i = 0; i < units; i++)
            n *= 3;
        return n;
    }();
    auto unit_shifts = [&](int a1) {
        std::vector<int> sh(units);
        for (int i = 0; i < units; i++) {
            sh[i] = a1 % 3 - 1;
            a1 /= 3;
        }
        return sh;
    };
    const int nA2 = W + 1; // advance towards node k, or hold
    const int a2_hold = W;

    using placement = std::vector<int>; // line-1 nodes (sorted), then line-2 node
    using live_state = std::pair<placement, int>;

    auto step = [&](const live_state& st, const std::vector<int>& sh, int a2)
        -> std::pair<int, live_state> { // next intruder pos (or escaped), next state
        placement np = st.first;
        for (int i = 0; i < units; i++)
            np[i] = clamp_node(np[i] + sh[i]);
        std::sort(np.begin(), np.begin() + n1);
        int pos = st.second;
        int npos = pos;
        if (a2 != a2_hold) {
            if (pos == at_start) {
                npos = 1 + a2;
            } else if (at_line1(pos)) {
                int j = pos - 1;
                if (std::abs(a2 - j) <= 1) npos = W + 1 + a2;
            } else {
                return {escaped, {np, pos}};
            }
        }
        return {npos, {np, npos}};
    };
    auto captured = [&](const placement& p, int pos) {
        if (at_line1(pos)) {
            for (int i = 0; i < n1; i++)
                if (p[i] == pos - 1) return true;
        } else if (at_line2(pos)) {
            if (p[units - 1] == pos - W - 1) return true;
        }
        return false;
    };

    placement init_p(units);
    if (n1 == 1) {
        init_p[0] = W / 2;
    } else {
        init_p[0] = 0;
        init_p[1] = W - 1;
    }
    init_p[units - 1] = W / 2;
    live_state init{init_p, at_start};

    std::set<live_state> reached{init};
    std::queue<live_state> frontier;
    frontier.push(init);
    while (!frontier.empty()) {
        auto st = frontier.front();
        frontier.pop();
        for (int a1 = 0; a1 < nA1; a1++) {
            auto sh = unit_shifts(a1);
            for (int a2 = 0; a2 < nA2; a2++) {
                auto [npos, next] = step(st, sh, a2);
                if (npos == escaped || captured(next.first, npos)) continue;
                if (reached.insert(next).second) frontier.push(next);
            }
        }
    }

    game_description d;
    std::map<live_state, int> state_id;
    std::map<placement, int> block_id;
    auto pos_name = [&](int pos) {
        if (pos == at_start) return std::string("s");
        if (at_line1(pos)) return "a" + std::to_string(pos - 1);
        return "b" + std::to_string(pos - W - 1);
    };
    for (const auto& st : reached) {
        if (!block_id.count(st.first)) {
            int b = int(block_id.size());
            block_id[st.first] = b;
            std::string n = "d";
            for (int i = 0; i < units; i++)
                n += (i ? "." : "") + std::to_string(st.first[i]);
            d.block_names.push_back(n);
        }
    }
    for (const auto& st : reached) {
        state_id[st] = int(d.states.size());
        d.states.push_back(d.block_names[block_id[st.first]] + "-" + pos_name(st.second));
        d.block_of_state.push_back(block_id[st.first]);
    }
    const int done = int(d.states.size());
    d.states.push_back("done");
    d.block_of_state.push_back(int(block_id.size()));
    d.block_names.push_back("done");

    static const char* shift_name = "lhr";
    for (int a1 = 0; a1 < nA1; a1++) {
        auto sh = unit_shifts(a1);
        std::string n;
        for (int s : sh)
            n += shift_name[s + 1];
        d.actions1.push_back(n);
    }
    for (int k = 0; k < W; k++)
        d.actions2.push_back("go" + std::to_string(k));
    d.actions2.push_back("hold");
    d.observations = {"none", "end"};
    const int obs_none = 0, obs_end = 1;

    for (const auto& st : reached) {
        int s = state_id.at(st);
        for (int a1 = 0; a1 < nA1; a1++) {
            auto sh = unit_shifts(a1);
            for (int a2 = 0; a2 < nA2; a2++) {
                auto [npos, next] = step(st, sh, a2);
                game_description::transition_row row{s, a1, a2, {}};
                if (npos == escaped) {
                    row.out.push_back({obs_end, done, 1.0});
                    d.rewards.push_back({s, a1, a2, -100.0});
                } else if (captured(next.first, npos)) {
                    row.out.push_back({obs_end, done, 1.0});
                } else {
                    row.out.push_back({obs_none, state_id.at(next), 1.0});
                }
                d.transitions.push_back(std::move(row));
            }
        }
    }
    for (int a1 = 0; a1 < nA1; a1++)
        for (int a2 = 0; a2 < nA2; a2++)
            d.transitions.push_back({done, a1, a2, {{obs_none, done, 1.0}}});

    d.gamma = gamma;
    d.initial_belief = {{state_id.at(init), 1.0}};
    return validate_game(d);
}

} // namespace osposg
