#pragma once

#include "osposg/core/game.hpp"

namespace osposg {

/**
 * Two-stage matching pennies. Player 2 secretly picks a side in the first
 * stage; player 1 guesses in the second and receives +1/-1 in start-stage
 * discounted value, which makes the stage-two payoffs 1/gamma and -1/gamma.
 * The guessed-side states share a partition block, so player 1 cannot tell
 * them apart. The game value at the initial belief is 0.
 */
inline game gen_matching_pennies(prec_t gamma) {
    game_description d;
    d.states = {"start", "picked-h", "picked-t", "done"};
    d.actions1 = {"h", "t"};
    d.actions2 = {"h", "t"};
    d.observations = {"none"};
    d.block_names = {"start", "picked", "done"};
    d.block_of_state = {0, 1, 1, 2};
    d.gamma = gamma;
    d.initial_belief = {{0, 1.0}};

    const int start = 0, picked_h = 1, picked_t = 2, done = 3;
    const prec_t w = 1.0 / gamma;
    for (int a1 = 0; a1 < 2; a1++)
        for (int a2 = 0; a2 < 2; a2++) {
            d.transitions.push_back({start, a1, a2, {{0, a2 == 0 ? picked_h : picked_t, 1.0}}});
            d.transitions.push_back({picked_h, a1, a2, {{0, done, 1.0}}});
            d.transitions.push_back({picked_t, a1, a2, {{0, done, 1.0}}});
            d.transitions.push_back({done, a1, a2, {{0, done, 1.0}}});
            d.rewards.push_back({picked_h, a1, a2, a1 == 0 ? w : -w});
            d.rewards.push_back({picked_t, a1, a2, a1 == 1 ? w : -w});
        }
    return validate_game(d);
}

} // namespace osposg
