#pragma once

#include "osposg/bounds/bounds.hpp"
#include "osposg/io/game_json.hpp"
#include "osposg/solver/hsvi.hpp"

#include <json.hpp>

#include <fstream>
#include <string>
#include <utility>

namespace osposg::io {

struct bounds_file {
    lower_bound lower;
    upper_bound upper;
    prec_t epsilon_achieved = 0;
    bool wall_clock_exceeded = false;
    nlohmann::json config;
    std::string game_hash;
};

inline nlohmann::json config_to_json(const solver_config& c) {
    return {{"epsilon", c.epsilon},       {"neighborhood", c.neighborhood},
            {"eta", c.eta},               {"epsilon_floor", c.epsilon_floor},
            {"init_beta", c.init_beta},   {"init_time_limit", c.init_time_limit},
            {"time_limit", c.time_limit}, {"max_trial_depth", c.max_trial_depth},
            {"prune_growth", c.prune_growth}, {"seed", c.seed}};
}

/**
 * Serializes converged bounds with enough metadata to tie them to the game
 * they were computed for. Alpha-vectors and point beliefs are listed in the
 * block's state order; values survive a round-trip bit for bit.
 */
inline nlohmann::json bounds_to_json(const game& g, const lower_bound& lb,
                                     const upper_bound& ub, prec_t epsilon_achieved,
                                     const nlohmann::json& config,
                                     bool wall_clock_exceeded = false) {
    nlohmann::json j;
    j["meta"] = {{"gamma", g.gamma()},
                 {"delta", g.bounds().delta()},
                 {"epsilon_achieved", epsilon_achieved},
                 {"wall_clock_exceeded", wall_clock_exceeded},
                 {"config", config},
                 {"game_hash", game_hash(g)}};
    j["blocks"] = nlohmann::json::array();
    for (int b = 0; b < g.n_blocks(); b++) {
        nlohmann::json jb;
        jb["block"] = g.block_name(b);
        jb["gamma_set"] = nlohmann::json::array();
        for (const auto& a : lb.block_set(b))
            jb["gamma_set"].push_back(a.values);
        try {
            jb["fallback"] = lb.initial(b).values;
        } catch (const empty_bound_error&) {
        }
        jb["upsilon_set"] = nlohmann::json::array();
        for (const auto& p : ub.block_set(b))
            jb["upsilon_set"].push_back({{"belief", p.probs}, {"value", p.y}});
        j["blocks"].push_back(std::move(jb));
    }
    return j;
}

/// Parses a bounds document and rebuilds the bound sets verbatim. Throws when
/// the document's game hash does not match the given game.
inline bounds_file bounds_from_json(const game& g, const nlohmann::json& j) {
    bounds_file out{lower_bound(g), upper_bound(g)};
    try {
        const auto& meta = j.at("meta");
        out.epsilon_achieved = meta.at("epsilon_achieved").get<prec_t>();
        out.game_hash = meta.at("game_hash").get<std::string>();
        if (meta.contains("wall_clock_exceeded"))
            out.wall_clock_exceeded = meta.at("wall_clock_exceeded").get<bool>();
        if (meta.contains("config")) out.config = meta.at("config");
        if (out.game_hash != game_hash(g))
            throw validation_error("bounds file was computed for a different game "
                                   "(content hash mismatch)");

        for (const auto& jb : j.at("blocks")) {
            std::string name = jb.at("block").get<std::string>();
            int b = -1;
            for (int k = 0; k < g.n_blocks(); k++)
                if (g.block_name(k) == name) {
                    b = k;
                    break;
                }
            if (b < 0) throw validation_error("unknown block " + name + " in bounds file");
            for (const auto& row : jb.at("gamma_set"))
                out.lower.restore({b, row.get<numvec>()});
            if (jb.contains("fallback"))
                out.lower.restore_initial({b, jb.at("fallback").get<numvec>()});
            for (const auto& p : jb.at("upsilon_set"))
                out.upper.restore(b, {p.at("belief").get<numvec>(),
                                      p.at("value").get<prec_t>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("malformed bounds document: ") + e.what());
    }
    out.upper.set_prune_baseline();
    return out;
}

inline void save_bounds(const game& g, const lower_bound& lb, const upper_bound& ub,
                        prec_t epsilon_achieved, const nlohmann::json& config,
                        const std::string& path, bool wall_clock_exceeded = false) {
    std::ofstream f(path);
    if (!f) throw validation_error("cannot open " + path + " for writing");
    f << bounds_to_json(g, lb, ub, epsilon_achieved, config, wall_clock_exceeded).dump(1)
      << "\n";
}

inline bounds_file load_bounds(const game& g, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw validation_error("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("cannot parse ") + path + ": " + e.what());
    }
    return bounds_from_json(g, j);
}

} // namespace osposg::io
