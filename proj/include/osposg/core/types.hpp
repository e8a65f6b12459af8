#pragma once

#include <cstdint>
#include <vector>

namespace osposg {

using prec_t = double;
using numvec = std::vector<prec_t>;
using indvec = std::vector<int>;

/// Tolerances shared across the library.
namespace tol {
/// Validation of input probability rows.
constexpr prec_t validation = 1e-9;
/// Derived probability sums (belief updates, action-observation masses).
constexpr prec_t derived = 1e-8;
/// LP feasibility and bound-sandwich slack.
constexpr prec_t feasibility = 1e-6;
/// Pointwise-dominance margin used when pruning bound elements.
constexpr prec_t dominance = 1e-9;
/// Below this mass an action or observation branch counts as unreachable.
constexpr prec_t reach = 1e-12;
/// Strategy weights below this are treated as zero during de-substitution.
constexpr prec_t strategy_support = 1e-9;
} // namespace tol

/// Lower and upper bounds on achievable discounted utility.
struct utility_bounds {
    prec_t lower;
    prec_t upper;

    /// Half-width of the utility range; Lipschitz constant of the optimal value.
    prec_t delta() const { return (upper - lower) / 2; }
};

/// Distribution over the states of one partition block.
struct belief {
    int block;
    numvec probs; // indexed by local state index within the block
};

/// Linear function over the states of one partition block.
struct alpha_vector {
    int block;
    numvec values; // indexed by local state index within the block
    /// Identity assigned by the containing bound, stable under pruning; lets
    /// LP warm starts recognize columns across solves.
    long id = -1;

    prec_t dot(const numvec& probs) const {
        prec_t v = 0;
        for (std::size_t i = 0; i < values.size(); i++)
            v += values[i] * probs[i];
        return v;
    }
};

/// Stage strategy of player 1: distribution over its actions.
struct stage_strategy1 {
    numvec probs; // indexed by a1
};

/// Stage strategy of player 2: distribution over its actions for each state of a block.
struct stage_strategy2 {
    int block;
    std::vector<numvec> cond; // cond[local_state][a2]
};

} // namespace osposg
