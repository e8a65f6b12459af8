#pragma once

#include "osposg/core/game.hpp"
#include "osposg/io/hash.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace osposg::io {

/**
 * Serializes a validated game into the standard game document: name-based,
 * sparse, and human-diffable. Rewards of exactly 0 are omitted.
 */
inline nlohmann::json game_to_json(const game& g) {
    nlohmann::json j;
    for (int s = 0; s < g.n_states(); s++)
        j["states"].push_back(g.state_name(s));
    for (int a = 0; a < g.n_actions1(); a++)
        j["actions1"].push_back(g.action1_name(a));
    for (int a = 0; a < g.n_actions2(); a++)
        j["actions2"].push_back(g.action2_name(a));
    for (int o = 0; o < g.n_observations(); o++)
        j["observations"].push_back(g.obs_name(o));
    j["gamma"] = g.gamma();

    nlohmann::json ib = nlohmann::json::object();
    const auto& b0 = g.initial_belief();
    const auto& states0 = g.block_states(b0.block);
    for (std::size_t i = 0; i < states0.size(); i++)
        if (b0.probs[i] > 0) ib[g.state_name(states0[i])] = b0.probs[i];
    j["initial_belief"] = ib;

    j["partitions"] = nlohmann::json::array();
    for (int b = 0; b < g.n_blocks(); b++) {
        nlohmann::json p;
        p["block"] = g.block_name(b);
        p["states"] = nlohmann::json::array();
        for (int s : g.block_states(b))
            p["states"].push_back(g.state_name(s));
        p["successors"] = nlohmann::json::array();
        for (int a1 = 0; a1 < g.n_actions1(); a1++)
            for (int o = 0; o < g.n_observations(); o++) {
                int nb = g.successor_block(b, a1, o);
                if (nb < 0) continue;
                p["successors"].push_back({{"a1", g.action1_name(a1)},
                                           {"o", g.obs_name(o)},
                                           {"block", g.block_name(nb)}});
            }
        j["partitions"].push_back(std::move(p));
    }

    j["transitions"] = nlohmann::json::array();
    j["rewards"] = nlohmann::json::array();
    for (int s = 0; s < g.n_states(); s++)
        for (int a1 = 0; a1 < g.n_actions1(); a1++)
            for (int a2 = 0; a2 < g.n_actions2(); a2++) {
                nlohmann::json row;
                row["s"] = g.state_name(s);
                row["a1"] = g.action1_name(a1);
                row["a2"] = g.action2_name(a2);
                row["out"] = nlohmann::json::array();
                for (const auto& e : g.transitions(s, a1, a2))
                    row["out"].push_back({{"o", g.obs_name(e.obs)},
                                          {"s2", g.state_name(e.next)},
                                          {"p", e.prob}});
                j["transitions"].push_back(std::move(row));
                prec_t r = g.reward(s, a1, a2);
                if (r != 0)
                    j["rewards"].push_back({{"s", g.state_name(s)},
                                            {"a1", g.action1_name(a1)},
                                            {"a2", g.action2_name(a2)},
                                            {"r", r}});
            }
    return j;
}

/// Parses the standard game document and validates it into a game model.
inline game game_from_json(const nlohmann::json& j) {
    game_description d;
    try {
        d.states = j.at("states").get<std::vector<std::string>>();
        d.actions1 = j.at("actions1").get<std::vector<std::string>>();
        d.actions2 = j.at("actions2").get<std::vector<std::string>>();
        d.observations = j.at("observations").get<std::vector<std::string>>();
        d.gamma = j.at("gamma").get<prec_t>();

        std::map<std::string, int> sid, a1id, a2id, oid, bid;
        for (std::size_t i = 0; i < d.states.size(); i++)
            if (!sid.emplace(d.states[i], int(i)).second)
                throw validation_error("duplicate state name " + d.states[i]);
        for (std::size_t i = 0; i < d.actions1.size(); i++)
            a1id[d.actions1[i]] = int(i);
        for (std::size_t i = 0; i < d.actions2.size(); i++)
            a2id[d.actions2[i]] = int(i);
        for (std::size_t i = 0; i < d.observations.size(); i++)
            oid[d.observations[i]] = int(i);
        auto look = [](const std::map<std::string, int>& m, const std::string& n,
                       const char* kind) {
            auto it = m.find(n);
            if (it == m.end())
                throw validation_error(std::string("unknown ") + kind + " name " + n);
            return it->second;
        };

        d.block_of_state.assign(d.states.size(), -1);
        for (const auto& p : j.at("partitions")) {
            int b = int(d.block_names.size());
            d.block_names.push_back(p.at("block").get<std::string>());
            bid[d.block_names.back()] = b;
            for (const auto& sn : p.at("states")) {
                int s = look(sid, sn.get<std::string>(), "state");
                if (d.block_of_state[s] != -1)
                    throw validation_error("state " + d.states[s] +
                                           " assigned to two blocks");
                d.block_of_state[s] = b;
            }
        }
        for (const auto& p : j.at("partitions")) {
            int b = look(bid, p.at("block").get<std::string>(), "block");
            if (p.contains("successors"))
                for (const auto& e : p.at("successors"))
                    d.successors.push_back(
                        {b, look(a1id, e.at("a1").get<std::string>(), "action1"),
                         look(oid, e.at("o").get<std::string>(), "observation"),
                         look(bid, e.at("block").get<std::string>(), "block")});
        }
        for (std::size_t s = 0; s < d.states.size(); s++)
            if (d.block_of_state[s] == -1)
                throw validation_error("state " + d.states[s] +
                                       " is missing from the partition");

        for (const auto& [name, p] : j.at("initial_belief").items())
            d.initial_belief.push_back({look(sid, name, "state"), p.get<prec_t>()});

        for (const auto& row : j.at("transitions")) {
            game_description::transition_row r;
            r.s = look(sid, row.at("s").get<std::string>(), "state");
            r.a1 = look(a1id, row.at("a1").get<std::string>(), "action1");
            r.a2 = look(a2id, row.at("a2").get<std::string>(), "action2");
            for (const auto& e : row.at("out"))
                r.out.push_back({look(oid, e.at("o").get<std::string>(), "observation"),
                                 look(sid, e.at("s2").get<std::string>(), "state"),
                                 e.at("p").get<prec_t>()});
            d.transitions.push_back(std::move(r));
        }
        if (j.contains("rewards"))
            for (const auto& e : j.at("rewards"))
                d.rewards.push_back({look(sid, e.at("s").get<std::string>(), "state"),
                                     look(a1id, e.at("a1").get<std::string>(), "action1"),
                                     look(a2id, e.at("a2").get<std::string>(), "action2"),
                                     e.at("r").get<prec_t>()});
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("malformed game document: ") + e.what());
    }
    return validate_game(d);
}

/// Content hash of a game: SHA-1 of its canonical (compact) serialization.
inline std::string game_hash(const game& g) { return sha1_hex(game_to_json(g).dump()); }

inline void save_game(const game& g, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw validation_error("cannot open " + path + " for writing");
    f << game_to_json(g).dump(1) << "\n";
}

inline game load_game(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw validation_error("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("cannot parse ") + path + ": " + e.what());
    }
    return game_from_json(j);
}

} // namespace osposg::io
