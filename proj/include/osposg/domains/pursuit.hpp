#pragma once

#include "osposg/core/game.hpp"

#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace osposg {

/**
 * Pursuit-evasion on a grid: a team of pursuers (player 1, joint moves) chases
 * an evader (player 2) under simultaneous moves in the four directions; moves
 * into a wall stay in place. Capturing means sharing a cell after the moves
 * and pays 100 into an absorbing end. The pursuers observe nothing about the
 * evader except the capture itself, so the partition blocks are the pursuer
 * team positions. Only states reachable from the start (pursuers stacked in
 * the top-left, evader in the bottom-right) are generated.
 */
inline game gen_pursuit(int rows, int cols, int pursuers, prec_t gamma) {
    if (rows < 1 || cols < 1 || rows * cols < 2)
        throw validation_error("pursuit grid needs at least two cells");
    if (pursuers < 1 || pursuers > 4)
        throw validation_error("pursuit supports 1 to 4 pursuers");
    const int C = rows * cols;

    auto move = [&](int cell, int m) {
        static const int mdr[4] = {0, 0, -1, 1};
        static const int mdc[4] = {-1, 1, 0, 0};
        int r = cell / cols + mdr[m], c = cell % cols + mdc[m];
        if (r < 0 || r >= rows || c < 0 || c >= cols) return cell;
        return r * cols + c;
    };
    static const char* mname = "lrud";

    const int nA1 = [&] {
        int n = 1;
        for (int i = 0; i < pursuers; i++)
            n *= 4;
        return n;
    }();
    auto joint_moves = [&](int a1) {
        std::vector<int> m(pursuers);
        for (int i = 0; i < pursuers; i++) {
            m[i] = a1 % 4;
            a1 /= 4;
        }
        return m;
    };

    using team = std::vector<int>;
    using live_state = std::pair<team, int>; // sorted pursuer cells, evader cell

    live_state init{team(pursuers, 0), C - 1};
    std::set<live_state> reached{init};
    std::queue<live_state> frontier;
    frontier.push(init);
    while (!frontier.empty()) {
        auto [p, e] = frontier.front();
        frontier.pop();
        for (int a1 = 0; a1 < nA1; a1++) {
            auto mv = joint_moves(a1);
            team np(pursuers);
            for (int i = 0; i < pursuers; i++)
                np[i] = move(p[i], mv[i]);
            std::sort(np.begin(), np.end());
            for (int a2 = 0; a2 < 4; a2++) {
                int ne = move(e, a2);
                bool caught = std::find(np.begin(), np.end(), ne) != np.end();
                if (caught) continue;
                live_state next{np, ne};
                if (reached.insert(next).second) frontier.push(next);
            }
        }
    }

    game_description d;
    auto cell_name = [&](int cell) { return std::to_string(cell); };
    std::map<live_state, int> state_id;
    std::map<team, int> block_id;
    for (const auto& st : reached) {
        if (!block_id.count(st.first)) {
            int b = int(block_id.size());
            block_id[st.first] = b;
            std::string n = "p";
            for (std::size_t i = 0; i < st.first.size(); i++)
                n += (i ? "." : "") + cell_name(st.first[i]);
            d.block_names.push_back(n);
        }
    }
    for (const auto& st : reached) {
        state_id[st] = int(d.states.size());
        std::string n = d.block_names[block_id[st.first]] + "-e" + cell_name(st.second);
        d.states.push_back(n);
        d.block_of_state.push_back(block_id[st.first]);
    }
    const int done = int(d.states.size());
    d.states.push_back("done");
    d.block_of_state.push_back(int(block_id.size()));
    d.block_names.push_back("done");

    for (int a1 = 0; a1 < nA1; a1++) {
        auto mv = joint_moves(a1);
        std::string n;
        for (int m : mv)
            n += mname[m];
        d.actions1.push_back(n);
    }
    for (int m = 0; m < 4; m++)
        d.actions2.push_back(std::string(1, mname[m]));
    d.observations = {"none", "caught"};
    const int obs_none = 0, obs_caught = 1;

    for (const auto& st : reached) {
        int s = state_id.at(st);
        const auto& [p, e] = st;
        for (int a1 = 0; a1 < nA1; a1++) {
            auto mv = joint_moves(a1);
            team np(pursuers);
            for (int i = 0; i < pursuers; i++)
                np[i] = move(p[i], mv[i]);
            std::sort(np.begin(), np.end());
            for (int a2 = 0; a2 < 4; a2++) {
                int ne = move(e, a2);
                bool caught = std::find(np.begin(), np.end(), ne) != np.end();
                game_description::transition_row row{s, a1, a2, {}};
                if (caught) {
                    row.out.push_back({obs_caught, done, 1.0});
                    d.rewards.push_back({s, a1, a2, 100.0});
                } else {
                    row.out.push_back({obs_none, state_id.at({np, ne}), 1.0});
                }
                d.transitions.push_back(std::move(row));
            }
        }
    }
    for (int a1 = 0; a1 < nA1; a1++)
        for (int a2 = 0; a2 < 4; a2++)
            d.transitions.push_back({done, a1, a2, {{obs_none, done, 1.0}}});

    d.gamma = gamma;
    d.initial_belief = {{state_id.at(init), 1.0}};
    return validate_game(d);
}

} // namespace osposg
