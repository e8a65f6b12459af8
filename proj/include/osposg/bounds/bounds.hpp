#pragma once

#include "osposg/core/errors.hpp"
#include "osposg/core/game.hpp"
#include "osposg/core/types.hpp"
#include "osposg/lp/lp.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace osposg {

/**
 * Lower bound on the optimal value function: per partition block, a set of
 * linear functions whose pointwise maximum is the bound. Insertions prune
 * vectors that stop contributing to the maximum.
 */
class lower_bound {
public:
    explicit lower_bound(const game& g)
        : game_(&g), sets_(g.n_blocks()), initial_(g.n_blocks()) {}

    const std::vector<alpha_vector>& block_set(int block) const { return sets_[block]; }

    /// Alpha-vector used as the continuation fallback for unplayed actions.
    const alpha_vector& initial(int block) const {
        if (initial_[block].values.empty())
            throw empty_bound_error("lower bound has no initial vector for block " +
                                    game_->block_name(block));
        return initial_[block];
    }

    void set_initial(alpha_vector a) {
        check_range(a);
        initial_[a.block] = a;
        insert(std::move(a));
    }

    prec_t value(const belief& b) const {
        const auto& set = sets_[b.block];
        if (set.empty())
            throw empty_bound_error("lower bound is empty for block " +
                                    game_->block_name(b.block));
        prec_t best = -lp::infinity;
        for (const auto& a : set)
            best = std::max(best, a.dot(b.probs));
        return best;
    }

    /**
     * Inserts a vector and drops every stored vector that no longer strictly
     * improves on the new one anywhere. The pointwise bound can drop by at most
     * the dominance tolerance.
     */
    void insert(alpha_vector a) {
        check_range(a);
        a.id = next_id_++;
        auto& set = sets_[a.block];
        std::size_t kept = 0;
        for (std::size_t i = 0; i < set.size(); i++) {
            bool improves = false;
            for (std::size_t s = 0; s < a.values.size(); s++)
                if (set[i].values[s] > a.values[s] + tol::dominance) {
                    improves = true;
                    break;
                }
            if (improves) {
                if (kept != i) set[kept] = std::move(set[i]);
                kept++;
            }
        }
        set.resize(kept);
        set.push_back(std::move(a));
    }

    /// Re-adds a stored vector verbatim, without pruning; used when loading
    /// bounds from a file.
    void restore(alpha_vector a) {
        check_range(a);
        a.id = next_id_++;
        sets_[a.block].push_back(std::move(a));
    }

    void restore_initial(alpha_vector a) {
        check_range(a);
        initial_[a.block] = std::move(a);
    }

    int size() const {
        int n = 0;
        for (const auto& s : sets_)
            n += int(s.size());
        return n;
    }

private:
    void check_range(alpha_vector& a) const {
        const auto& ub = game_->bounds();
        if (int(a.values.size()) != game_->block_size(a.block))
            throw solver_error("alpha-vector length does not match its block");
        for (auto& v : a.values) {
            if (v < ub.lower - tol::feasibility || v > ub.upper + tol::feasibility)
                throw range_violation_error("alpha value " + std::to_string(v) +
                                            " escapes the utility range");
            v = std::min(std::max(v, ub.lower), ub.upper);
        }
    }

    const game* game_;
    std::vector<std::vector<alpha_vector>> sets_;
    std::vector<alpha_vector> initial_;
    long next_id_ = 0;
};

/**
 * Upper bound on the optimal value function: per partition block, a set of
 * (belief, value) points. The bound at a belief is the value of the cheapest
 * convex combination of the points, relaxed by delta times the L1 distance
 * between the combined belief and the query, which keeps it delta-Lipschitz.
 */
class upper_bound {
public:
    struct point {
        numvec probs;
        prec_t y;
        /// Identity stable under pruning, for LP warm starts; see alpha_vector.
        long id = -1;
    };

    explicit upper_bound(const game& g, prec_t prune_growth = 0.10)
        : game_(&g), prune_growth_(prune_growth), sets_(g.n_blocks()),
          last_prune_size_(g.n_blocks(), 0) {}

    const std::vector<point>& block_set(int block) const { return sets_[block]; }

    prec_t value(const belief& b) const {
        const auto& set = sets_[b.block];
        if (set.empty())
            throw empty_bound_error("upper bound is empty for block " +
                                    game_->block_name(b.block));
        return envelope(set, b.probs, -1);
    }

    /**
     * Closed-form relaxation of the envelope: the best single stored point
     * extended by the Lipschitz cone, without mixing. Never below the exact
     * envelope, so it is still a valid upper bound on the optimal value;
     * used where an inexpensive evaluation matters more than tightness.
     */
    prec_t value_fast(const belief& b) const {
        const auto& set = sets_[b.block];
        if (set.empty())
            throw empty_bound_error("upper bound is empty for block " +
                                    game_->block_name(b.block));
        const prec_t delta = game_->bounds().delta();
        prec_t best = lp::infinity;
        for (const auto& p : set) {
            prec_t dist = 0;
            for (std::size_t s = 0; s < b.probs.size(); s++)
                dist += std::abs(b.probs[s] - p.probs[s]);
            best = std::min(best, p.y + delta * dist);
        }
        return best;
    }

    /// Inserts a point; a growth of prune_growth since the last prune of the
    /// block triggers a pruning pass. A point at an already stored belief
    /// only lowers the stored value instead of duplicating the column.
    void insert(const belief& b, prec_t y) {
        const auto& ub = game_->bounds();
        if (y < ub.lower - tol::feasibility || y > ub.upper + tol::feasibility)
            throw range_violation_error("upper-bound value " + std::to_string(y) +
                                        " escapes the utility range");
        y = std::min(std::max(y, ub.lower), ub.upper);
        auto& set = sets_[b.block];
        for (auto& p : set) {
            prec_t dist = 0;
            for (std::size_t s = 0; s < b.probs.size(); s++)
                dist += std::abs(b.probs[s] - p.probs[s]);
            if (dist <= tol::reach) {
                p.y = std::min(p.y, y);
                return;
            }
        }
        set.push_back({b.probs, y, next_id_++});
        if (last_prune_size_[b.block] != 0 &&
            prec_t(set.size()) >= (1 + prune_growth_) * last_prune_size_[b.block])
            prune(b.block);
    }

    /// Re-adds a stored point verbatim, without the growth trigger; used when
    /// loading bounds from a file.
    void restore(int block, point p) {
        const auto& ub = game_->bounds();
        if (p.y < ub.lower - tol::feasibility || p.y > ub.upper + tol::feasibility)
            throw range_violation_error("upper-bound value " + std::to_string(p.y) +
                                        " escapes the utility range");
        p.id = next_id_++;
        sets_[block].push_back(std::move(p));
    }

    /// Marks the current sizes as the reference point for growth-triggered
    /// pruning; inserts before this never trigger.
    void set_prune_baseline() {
        for (int b = 0; b < int(sets_.size()); b++)
            last_prune_size_[b] = int(sets_[b].size());
    }

    /// Removes points that lie strictly above the envelope of the remaining
    /// points, one pass in insertion order. The single-point relaxation
    /// settles most removals; the exact envelope is only consulted when the
    /// relaxation cannot already certify redundancy.
    void prune(int block) {
        auto& set = sets_[block];
        const prec_t delta = game_->bounds().delta();
        for (std::size_t i = 0; i < set.size();) {
            if (set.size() == 1) break;
            prec_t fast_without = lp::infinity;
            for (std::size_t j = 0; j < set.size(); j++) {
                if (j == i) continue;
                prec_t dist = 0;
                for (std::size_t s = 0; s < set[i].probs.size(); s++)
                    dist += std::abs(set[i].probs[s] - set[j].probs[s]);
                fast_without = std::min(fast_without, set[j].y + delta * dist);
            }
            prec_t without = fast_without;
            if (set[i].y <= fast_without + tol::dominance)
                without = envelope(set, set[i].probs, int(i));
            if (set[i].y > without + tol::dominance)
                set.erase(set.begin() + i);
            else
                i++;
        }
        last_prune_size_[block] = int(set.size());
    }

    void prune() {
        for (int b = 0; b < int(sets_.size()); b++)
            if (!sets_[b].empty()) prune(b);
    }

    int size() const {
        int n = 0;
        for (const auto& s : sets_)
            n += int(s.size());
        return n;
    }

private:
    /// Value of the Lipschitz envelope at a belief, optionally excluding one point.
    prec_t envelope(const std::vector<point>& set, const numvec& probs,
                    int exclude) const {
        const int n = int(probs.size());
        const prec_t delta = game_->bounds().delta();
        lp::model m;
        indvec lambda;
        for (int i = 0; i < int(set.size()); i++)
            lambda.push_back(i == exclude ? -1 : m.add_variable(0, lp::infinity));
        indvec pos(n), neg(n);
        for (int s = 0; s < n; s++) {
            pos[s] = m.add_variable(0, lp::infinity);
            neg[s] = m.add_variable(0, lp::infinity);
        }
        std::vector<lp::term> obj;
        for (int i = 0; i < int(set.size()); i++)
            if (lambda[i] >= 0) obj.push_back({lambda[i], set[i].y});
        for (int s = 0; s < n; s++) {
            obj.push_back({pos[s], delta});
            obj.push_back({neg[s], delta});
        }
        m.set_objective(lp::sense::minimize, std::move(obj));
        for (int s = 0; s < n; s++) {
            std::vector<lp::term> terms;
            for (int i = 0; i < int(set.size()); i++)
                if (lambda[i] >= 0 && set[i].probs[s] != 0)
                    terms.push_back({lambda[i], set[i].probs[s]});
            terms.push_back({pos[s], -1.0});
            terms.push_back({neg[s], 1.0});
            m.add_constraint(std::move(terms), lp::rel::eq, probs[s]);
        }
        {
            std::vector<lp::term> terms;
            for (int i = 0; i < int(set.size()); i++)
                if (lambda[i] >= 0) terms.push_back({lambda[i], 1.0});
            m.add_constraint(std::move(terms), lp::rel::eq, 1.0);
        }
        auto sol = lp::solve(m);
        if (sol.stat != lp::status::optimal)
            throw lp_failure_error("upper-bound envelope LP did not solve");
        return sol.objective;
    }

    const game* game_;
    prec_t prune_growth_;
    std::vector<std::vector<point>> sets_;
    indvec last_prune_size_;
};

} // namespace osposg
