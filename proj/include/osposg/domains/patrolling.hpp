#pragma once

#include "osposg/core/game.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace osposg {

namespace detail {

/// Samples an undirected Erdos-Renyi graph until a connected one comes up.
inline std::vector<std::set<int>> connected_er_graph(int vertices, prec_t edge_prob,
                                                     unsigned long long seed) {
    std::mt19937_64 rng(seed);
    for (int attempt = 0; attempt < 200; attempt++) {
        std::vector<std::set<int>> adj(vertices);
        for (int i = 0; i < vertices; i++)
            for (int j = i + 1; j < vertices; j++) {
                prec_t u = prec_t(rng() >> 11) * 0x1.0p-53;
                if (u < edge_prob) {
                    adj[i].insert(j);
                    adj[j].insert(i);
                }
            }
        std::vector<char> seen(vertices, 0);
        std::queue<int> q;
        q.push(0);
        seen[0] = 1;
        int count = 1;
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            for (int w : adj[v])
                if (!seen[w]) {
                    seen[w] = 1;
                    count++;
                    q.push(w);
                }
        }
        if (count == vertices) return adj;
    }
    throw disconnected_graph_error("no connected graph found for the given "
                                   "edge probability within 200 attempts");
}

} // namespace detail

/**
 * Patrolling on a random connected graph. The patroller (player 1) walks along
 * edges; the attacker (player 2) may start an attack on any vertex, which
 * needs attack_time full stages to complete. Stepping onto the attacked vertex
 * before completion foils the attack silently; completion costs the patroller
 * cost[v] and ends the game with an observable end signal. Vertex costs are
 * scaled so the worst completed attack costs 100 in discounted start-time
 * value. The patroller never sees the attacker, so the blocks are the
 * patroller positions. An empty costs vector means uniform costs.
 */
inline game gen_patrolling(int vertices, prec_t edge_prob, int attack_time,
                           const numvec& costs, prec_t gamma,
                           unsigned long long seed) {
    if (vertices < 2) throw validation_error("patrolling needs at least two vertices");
    if (attack_time < 1) throw validation_error("attack_time must be positive");
    if (!costs.empty() && int(costs.size()) != vertices)
        throw validation_error("costs must be empty or give one value per vertex");
    if (gamma <= 0.0 || gamma >= 1.0)
        throw gamma_out_of_range_error("patrolling needs gamma in (0,1)");
    for (prec_t c : costs)
        if (c <= 0.0) throw validation_error("vertex costs must be positive");

    auto adj = detail::connected_er_graph(vertices, edge_prob, seed);

    prec_t cmax_in = costs.empty() ? 1.0 : *std::max_element(costs.begin(), costs.end());
    prec_t scale = 100.0 / std::pow(gamma, prec_t(attack_time)) / cmax_in;
    numvec cost(vertices, costs.empty() ? scale : 0.0);
    for (int v = 0; v < int(costs.size()); v++)
        cost[v] = costs[v] * scale;

    // Status: 0 = no attack running, 1 + v*attack_time + k = attack on v in
    // progress for k+1 more stages including this one being the (k+1)-th.
    const int idle = 0;
    auto running = [&](int v, int k) { return 1 + v * attack_time + k; };

    using live_state = std::pair<int, int>; // patroller vertex, status

    const int nA1 = vertices;          // walk towards vertex v (stay if not adjacent)
    const int nA2 = 1 + vertices;      // wait, or start attack on v
    auto walk = [&](int pos, int a1) {
        return adj[pos].count(a1) ? a1 : pos;
    };

    live_state init{0, idle};
    std::set<live_state> reached{init};
    std::queue<live_state> frontier;
    frontier.push(init);
    // Returns the next status and whether the attack completed this stage.
    // An attack declared at stage t can be foiled by the patroller's moves at
    // stages t..t+attack_time and otherwise completes at stage t+attack_time,
    // so the earliest completion reward is discounted by gamma^attack_time.
    auto advance = [&](int npos, int status, int a2) -> std::pair<int, bool> {
        if (status == idle) {
            if (a2 == 0) return {idle, false};
            int v = a2 - 1;
            if (npos == v) return {idle, false};
            return {running(v, 0), false};
        }
        int v = (status - 1) / attack_time;
        int k = (status - 1) % attack_time;
        if (npos == v) return {idle, false};
        if (k + 1 >= attack_time) return {idle, true};
        return {running(v, k + 1), false};
    };
    while (!frontier.empty()) {
        auto [pos, status] = frontier.front();
        frontier.pop();
        for (int a1 = 0; a1 < nA1; a1++) {
            int npos = walk(pos, a1);
            for (int a2 = 0; a2 < nA2; a2++) {
                auto [nstatus, boom] = advance(npos, status, a2);
                if (boom) continue;
                live_state next{npos, nstatus};
                if (reached.insert(next).second) frontier.push(next);
            }
        }
    }

    game_description d;
    std::map<live_state, int> state_id;
    std::map<int, int> block_id;
    for (const auto& st : reached)
        if (!block_id.count(st.first)) {
            int b = int(block_id.size());
            block_id[st.first] = b;
            d.block_names.push_back("v" + std::to_string(st.first));
        }
    for (const auto& st : reached) {
        state_id[st] = int(d.states.size());
        std::string n = d.block_names[block_id.at(st.first)];
        if (st.second == idle) {
            n += "-idle";
        } else {
            int v = (st.second - 1) / attack_time;
            int k = (st.second - 1) % attack_time;
            n += "-atk" + std::to_string(v) + "." + std::to_string(k);
        }
        d.states.push_back(n);
        d.block_of_state.push_back(block_id.at(st.first));
    }
    const int done = int(d.states.size());
    d.states.push_back("done");
    d.block_of_state.push_back(int(block_id.size()));
    d.block_names.push_back("done");

    for (int v = 0; v < vertices; v++)
        d.actions1.push_back("go" + std::to_string(v));
    d.actions2.push_back("wait");
    for (int v = 0; v < vertices; v++)
        d.actions2.push_back("atk" + std::to_string(v));
    d.observations = {"none", "end"};
    const int obs_none = 0, obs_end = 1;

    for (const auto& st : reached) {
        int s = state_id.at(st);
        auto [pos, status] = st;
        for (int a1 = 0; a1 < nA1; a1++) {
            int npos = walk(pos, a1);
            for (int a2 = 0; a2 < nA2; a2++) {
                auto [nstatus, boom] = advance(npos, status, a2);
                game_description::transition_row row{s, a1, a2, {}};
                if (boom) {
                    int v = status == idle ? a2 - 1 : (status - 1) / attack_time;
                    row.out.push_back({obs_end, done, 1.0});
                    d.rewards.push_back({s, a1, a2, -cost[v]});
                } else {
                    row.out.push_back({obs_none, state_id.at({npos, nstatus}), 1.0});
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
