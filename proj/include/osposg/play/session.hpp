#pragma once

#include "osposg/bounds/bounds.hpp"
#include "osposg/core/game.hpp"
#include "osposg/solver/stage.hpp"

#include <map>
#include <memory>
#include <utility>

namespace osposg {

/// Stage strategy provider for player 1 during online play.
struct player1_policy {
    virtual ~player1_policy() = default;
    virtual void reset() = 0;
    virtual stage_strategy1 strategy() = 0;
    virtual void observe(int a1, int o) = 0;
};

/// Stage strategy provider for player 2 during online play. The returned
/// strategy covers every state of the current partition block; the caller
/// samples the action for the true state.
struct player2_policy {
    virtual ~player2_policy() = default;
    virtual void reset() = 0;
    virtual stage_strategy2 strategy() = 0;
    virtual void observe(int a1, int o) = 0;
};

namespace detail {

inline const alpha_vector& argmax_alpha(const lower_bound& lb, const belief& b) {
    const auto& set = lb.block_set(b.block);
    if (set.empty())
        throw empty_bound_error("no vectors available to pick a gadget from");
    std::size_t best = 0;
    prec_t best_val = set[0].dot(b.probs);
    for (std::size_t i = 1; i < set.size(); i++) {
        prec_t v = set[i].dot(b.probs);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    return set[best];
}

inline belief uniform_belief(const game& g, int block) {
    belief b;
    b.block = block;
    b.probs.assign(g.block_size(block), 1.0 / g.block_size(block));
    return b;
}

} // namespace detail

/**
 * Player 1 by continual resolving: each stage solves the gadget-constrained
 * stage game, which composes a strategy whose value dominates the promises
 * made so far, so the overall play guarantees the lower-bound value at the
 * initial belief against any opponent.
 *
 * The belief is tracked against an assumed opponent strategy taken from the
 * unconstrained stage solution. An observation that the assumed strategy gives
 * zero probability resets the belief with a uniform opponent model and the
 * gadget to the best stored vector at the reset belief.
 *
 * Stage solutions are memoized on the action-observation history, shared
 * across episodes.
 */
class p1_resolving : public player1_policy {
public:
    p1_resolving(const game& g, lower_bound lb)
        : game_(&g), lb_(std::move(lb)) {
        root_.b = g.initial_belief();
        root_.gadget = detail::argmax_alpha(lb_, root_.b);
        guarantee_ = root_.gadget.dot(root_.b.probs);
        cur_ = &root_;
    }

    /// Value this strategy secures from the initial belief in the infinite game.
    prec_t guarantee() const { return guarantee_; }

    void reset() override { cur_ = &root_; }

    stage_strategy1 strategy() override {
        ensure_solved(*cur_);
        return cur_->res.pi1;
    }

    void observe(int a1, int o) override {
        ensure_solved(*cur_);
        auto& child = cur_->children[{a1, o}];
        if (!child) {
            child = std::make_unique<node>();
            try {
                child->b = belief_update(*game_, cur_->b, a1, cur_->assumed_pi2, o);
                child->gadget = cur_->res.continuations.at({a1, o});
            } catch (const zero_probability_observation_error&) {
                try {
                    child->b = belief_update(*game_, cur_->b, a1,
                                             uniform_strategy2(*game_, cur_->b.block), o);
                } catch (const zero_probability_observation_error&) {
                    child->b = detail::uniform_belief(
                        *game_, game_->successor_block(cur_->b.block, a1, o));
                }
                child->gadget = detail::argmax_alpha(lb_, child->b);
            }
        }
        cur_ = child.get();
    }

private:
    struct node {
        belief b;
        alpha_vector gadget;
        bool solved = false;
        resolve_result res;
        stage_strategy2 assumed_pi2;
        std::map<std::pair<int, int>, std::unique_ptr<node>> children;
    };

    void ensure_solved(node& n) {
        if (n.solved) return;
        n.res = resolve_gadget(*game_, lb_, n.b, n.gadget);
        n.assumed_pi2 = solve_stage_lb(*game_, lb_, n.b).pi2;
        n.solved = true;
    }

    const game* game_;
    lower_bound lb_;
    prec_t guarantee_ = 0;
    node root_;
    node* cur_;
};

/**
 * Player 2 by replaying the upper-bound stage games: each stage plays the
 * opponent part of the equilibrium of the upper-bound stage game at the
 * tracked belief, which keeps player 1's utility below the upper-bound value
 * at the initial belief. The belief is updated with the strategy actually
 * played, so occurring observations always have positive probability.
 */
class p2_stage_replay : public player2_policy {
public:
    p2_stage_replay(const game& g, upper_bound ub)
        : game_(&g), ub_(std::move(ub)) {
        root_.b = g.initial_belief();
        cap_ = ub_.value(root_.b);
        cur_ = &root_;
    }

    /// Value this strategy concedes at most from the initial belief.
    prec_t cap() const { return cap_; }

    void reset() override { cur_ = &root_; }

    stage_strategy2 strategy() override {
        ensure_solved(*cur_);
        return cur_->res.pi2;
    }

    void observe(int a1, int o) override {
        ensure_solved(*cur_);
        auto& child = cur_->children[{a1, o}];
        if (!child) {
            child = std::make_unique<node>();
            try {
                child->b = belief_update(*game_, cur_->b, a1, cur_->res.pi2, o);
            } catch (const zero_probability_observation_error&) {
                try {
                    child->b = belief_update(*game_, cur_->b, a1,
                                             uniform_strategy2(*game_, cur_->b.block), o);
                } catch (const zero_probability_observation_error&) {
                    child->b = detail::uniform_belief(
                        *game_, game_->successor_block(cur_->b.block, a1, o));
                }
            }
        }
        cur_ = child.get();
    }

private:
    struct node {
        belief b;
        bool solved = false;
        stage_ub_result res;
        std::map<std::pair<int, int>, std::unique_ptr<node>> children;
    };

    void ensure_solved(node& n) {
        if (n.solved) return;
        n.res = solve_stage_ub(*game_, ub_, n.b);
        n.solved = true;
    }

    const game* game_;
    upper_bound ub_;
    prec_t cap_ = 0;
    node root_;
    node* cur_;
};

/// Player 1 playing uniformly at every stage.
class p1_uniform : public player1_policy {
public:
    explicit p1_uniform(const game& g) : game_(&g) {}
    void reset() override {}
    stage_strategy1 strategy() override { return uniform_strategy1(*game_); }
    void observe(int, int) override {}

private:
    const game* game_;
};

/// Player 2 playing uniformly at every stage, tracking only the block.
class p2_uniform : public player2_policy {
public:
    explicit p2_uniform(const game& g)
        : game_(&g), block_(g.initial_belief().block) {}
    void reset() override { block_ = game_->initial_belief().block; }
    stage_strategy2 strategy() override { return uniform_strategy2(*game_, block_); }
    void observe(int a1, int o) override {
        block_ = game_->successor_block(block_, a1, o);
    }

private:
    const game* game_;
    int block_;
};

} // namespace osposg
