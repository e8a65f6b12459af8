#pragma once

#include "osposg/bounds/bounds.hpp"
#include "osposg/core/game.hpp"
#include "osposg/solver/init.hpp"
#include "osposg/solver/stage.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

namespace osposg {

struct solver_config {
    /// Target width of the value interval at the initial belief.
    prec_t epsilon = 1.0;
    /// Neighborhood parameter D; nonpositive selects 0.9 (1-gamma) eps / (2 delta).
    prec_t neighborhood = -1;
    /// Gap contraction factor of the per-trial target schedule.
    prec_t eta = 0.9;
    /// Floor of the per-trial target schedule.
    prec_t epsilon_floor = 0.25;
    /// Residual threshold of the bound initialization sweeps.
    prec_t init_beta = 0.025;
    /// Time limit (seconds) for each bound initialization.
    double init_time_limit = 1200.0;
    /// Overall wall-clock limit in seconds; nonpositive means unlimited.
    double time_limit = -1;
    /// Hard cap on trial depth; nonpositive derives it from the target schedule.
    int max_trial_depth = -1;
    /// Relative growth of a point set that triggers upper-bound pruning.
    prec_t prune_growth = 0.10;
    /// Recorded with results; the solver itself is deterministic.
    std::uint64_t seed = 0;
    /// Optional progress log, one line per trial.
    std::ostream* log = nullptr;
};

struct solve_stats {
    int trials = 0;
    long updates = 0; // point-based update pairs
    prec_t initial_gap = 0;
    prec_t final_gap = 0;
    indvec trial_depths;
    /// (vector count, point count) after every trial.
    std::vector<std::pair<int, int>> size_trace;
    double seconds_init = 0;
    double seconds_trials = 0;
    double seconds_total = 0;
    bool wall_clock_exceeded = false;
    /// Largest observed lower-over-upper stage-value overshoot (should be ~0).
    prec_t sandwich_violation = 0;
    init_result lb_init_info, ub_init_info;
};

/// Per-trial target schedule: rho(0) given, rho(t+1) = (rho(t) - 2 delta D) / gamma,
/// extended until it reaches the utility range width.
inline numvec rho_schedule(prec_t rho0, prec_t gamma, prec_t delta, prec_t D,
                           prec_t range) {
    numvec rho{rho0};
    while (rho.back() < range && int(rho.size()) < 100000)
        rho.push_back((rho.back() - 2 * delta * D) / gamma);
    return rho;
}

/**
 * Heuristic search value iteration for one-sided partially observable
 * stochastic games: refines sandwiching bounds on the optimal value by
 * forward exploration along the most promising action-observation branches,
 * with point-based updates on the way down and again on the way back up.
 */
class hsvi_solver {
public:
    hsvi_solver(const game& g, solver_config cfg)
        : game_(&g), cfg_(cfg), lb_(g), ub_(g, cfg.prune_growth) {
        if (cfg_.epsilon <= 0) throw solver_error("epsilon must be positive");
        const prec_t delta = g.bounds().delta();
        const prec_t dmax = delta > 0
                                ? (1 - g.gamma()) * cfg_.epsilon / (2 * delta)
                                : 0;
        if (cfg_.neighborhood > 0) {
            if (delta > 0 && cfg_.neighborhood >= dmax)
                throw solver_error("neighborhood parameter too large: trials would "
                                   "not terminate");
            D_ = cfg_.neighborhood;
        } else {
            D_ = 0.9 * dmax;
        }
    }

    const game& model() const { return *game_; }
    const solver_config& config() const { return cfg_; }
    const lower_bound& lower() const { return lb_; }
    const upper_bound& upper() const { return ub_; }
    prec_t neighborhood() const { return D_; }

    prec_t gap() const {
        const belief& b0 = game_->initial_belief();
        return ub_.value(b0) - lb_.value(b0);
    }

    solve_stats solve() {
        using clock = std::chrono::steady_clock;
        start_ = clock::now();
        stats_ = solve_stats{};

        stats_.lb_init_info = lb_init(*game_, lb_, cfg_.init_beta, cfg_.init_time_limit);
        stats_.ub_init_info = ub_init(*game_, ub_, cfg_.init_beta, cfg_.init_time_limit);
        stats_.seconds_init = elapsed();
        stats_.initial_gap = gap();

        const belief& b0 = game_->initial_belief();
        const prec_t range = game_->bounds().upper - game_->bounds().lower;
        for (;;) {
            prec_t g0 = gap();
            if (g0 <= cfg_.epsilon) break;
            if (out_of_time()) {
                stats_.wall_clock_exceeded = true;
                break;
            }
            // per-trial target: tighter than the current gap, never below the
            // overall target so the schedule stays increasing
            prec_t imm = cfg_.epsilon_floor + cfg_.eta * (g0 - cfg_.epsilon_floor);
            prec_t rho0 = std::max(cfg_.epsilon, imm);
            if (rho0 >= g0) rho0 = cfg_.epsilon;
            rho_ = rho_schedule(rho0, game_->gamma(), game_->bounds().delta(), D_,
                                range);
            int depth = explore(b0, 0);
            stats_.trials++;
            stats_.trial_depths.push_back(depth);
            stats_.size_trace.push_back({lb_.size(), ub_.size()});
            if (cfg_.log) {
                auto& os = *cfg_.log;
                os.precision(12);
                os << "trial=" << stats_.trials << " depth=" << depth
                   << " gap=" << gap() << " gamma_size=" << lb_.size()
                   << " upsilon_size=" << ub_.size() << " elapsed=" << elapsed()
                   << "\n";
                os.flush();
            }
        }
        stats_.final_gap = gap();
        stats_.seconds_trials = elapsed() - stats_.seconds_init;
        stats_.seconds_total = elapsed();
        return stats_;
    }

private:
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

    bool out_of_time() const {
        return cfg_.time_limit > 0 && elapsed() > cfg_.time_limit;
    }

    void point_update(const belief& b, const stage_lb_result& lbres,
                      const stage_ub_result& ubres) {
        stats_.sandwich_violation =
            std::max(stats_.sandwich_violation, lbres.value - ubres.value);
        lb_.insert(lbres.composed_alpha);
        ub_.insert(b, ubres.value);
        stats_.updates++;
    }

    int explore(const belief& b, int t) {
        auto lbres = solve_stage_lb(*game_, lb_, b);
        auto ubres = solve_stage_ub(*game_, ub_, b);
        point_update(b, lbres, ubres);

        int depth = t;
        bool depth_ok = t + 1 < int(rho_.size()) &&
                        (cfg_.max_trial_depth <= 0 || t + 1 <= cfg_.max_trial_depth);
        if (depth_ok && !out_of_time()) {
            // the next belief maximizes reach probability times excess gap;
            // the single-point envelope relaxation never understates the
            // excess, so branches are screened by it first and the exact
            // envelope is evaluated in decreasing order of that screen until
            // the leader cannot be overtaken
            struct candidate {
                prec_t screen, pr;
                int a1, obs;
                belief next;
            };
            std::vector<candidate> cands;
            for (int a1 = 0; a1 < game_->n_actions1(); a1++)
                for (int o = 0; o < game_->n_observations(); o++) {
                    if (game_->successor_block(b.block, a1, o) < 0) continue;
                    prec_t pr =
                        prob_action_obs(*game_, b, ubres.pi1, lbres.pi2, a1, o);
                    if (pr <= tol::reach) continue;
                    belief next = belief_update(*game_, b, a1, lbres.pi2, o);
                    prec_t screened =
                        ub_.value_fast(next) - lb_.value(next) - rho_[t + 1];
                    if (pr * screened > 0)
                        cands.push_back({pr * screened, pr, a1, o, std::move(next)});
                }
            std::sort(cands.begin(), cands.end(),
                      [](const candidate& x, const candidate& y) {
                          if (x.screen != y.screen) return x.screen > y.screen;
                          return std::pair(x.a1, x.obs) < std::pair(y.a1, y.obs);
                      });
            prec_t best_weight = 0;
            const candidate* best = nullptr;
            for (const auto& c : cands) {
                if (c.screen <= best_weight) break;
                prec_t excess =
                    ub_.value(c.next) - lb_.value(c.next) - rho_[t + 1];
                if (c.pr * excess > best_weight) {
                    best_weight = c.pr * excess;
                    best = &c;
                }
            }
            if (best) {
                depth = explore(best->next, t + 1);
                auto lbres2 = solve_stage_lb(*game_, lb_, b);
                auto ubres2 = solve_stage_ub(*game_, ub_, b);
                point_update(b, lbres2, ubres2);
            }
        }
        return depth;
    }

    const game* game_;
    solver_config cfg_;
    lower_bound lb_;
    upper_bound ub_;
    solve_stats stats_;
    prec_t D_ = 0;
    numvec rho_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace osposg
