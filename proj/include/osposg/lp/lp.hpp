#pragma once

#include "osposg/core/errors.hpp"
#include "osposg/core/types.hpp"

#ifdef OSPOSG_LP_TRACE
#include <cstdio>
#endif

#include <algorithm>
#include <map>
#include <utility>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace osposg::lp {

constexpr prec_t infinity = std::numeric_limits<prec_t>::infinity();

#ifdef OSPOSG_LP_STATS
struct lp_stats {
    inline static long solves = 0, iters = 0, freshes = 0, repairs = 0,
                       restarts = 0;
    inline static long solves_big = 0, iters_big = 0, work_big = 0,
                       iters_small = 0, work_small = 0;
    // (rows, vars) -> (solves, iters)
    inline static std::map<std::pair<int, int>, std::pair<long, long>> shapes;
    inline static int cur_rows = 0, cur_vars = 0;
};
#endif

enum class sense { minimize, maximize };
enum class rel { le, eq, ge };
enum class status { optimal, infeasible, unbounded };

struct term {
    int var;
    prec_t coef;
};

/// Linear program: bounded variables, le/eq/ge rows, min or max objective.
class model {
public:
    int add_variable(prec_t lo, prec_t hi, std::string name = {}) {
        if (std::isnan(lo) || std::isnan(hi) || lo > hi)
            throw lp_failure_error("invalid variable bounds");
        vars_.push_back({lo, hi, std::move(name)});
        return int(vars_.size()) - 1;
    }

    int add_constraint(std::vector<term> terms, rel r, prec_t rhs, std::string name = {}) {
        if (!std::isfinite(rhs)) throw lp_failure_error("constraint rhs must be finite");
        for (const auto& t : terms) {
            if (t.var < 0 || t.var >= int(vars_.size()))
                throw lp_failure_error("constraint references unknown variable");
            if (!std::isfinite(t.coef))
                throw lp_failure_error("constraint coefficient must be finite");
        }
        rows_.push_back({std::move(terms), r, rhs, std::move(name)});
        return int(rows_.size()) - 1;
    }

    void set_objective(sense s, std::vector<term> terms) {
        for (const auto& t : terms)
            if (t.var < 0 || t.var >= int(vars_.size()) || !std::isfinite(t.coef))
                throw lp_failure_error("invalid objective term");
        sense_ = s;
        objective_ = std::move(terms);
    }

    /// Attaches a caller-chosen identity to a variable so a basis exported
    /// from one solve can be replayed on a later model whose column set
    /// changed. Tags must be nonnegative and unique within a model.
    void tag_variable(int var, long tag) {
        if (var < 0 || var >= int(vars_.size()))
            throw lp_failure_error("tag references unknown variable");
        vars_[var].tag = tag;
    }

    struct variable {
        prec_t lo, hi;
        std::string name;
        long tag = -1;
    };
    struct row {
        std::vector<term> terms;
        rel r;
        prec_t rhs;
        std::string name;
    };

    int n_vars() const { return int(vars_.size()); }
    int n_rows() const { return int(rows_.size()); }
    const std::vector<variable>& variables() const { return vars_; }
    const std::vector<row>& rows() const { return rows_; }
    const std::vector<term>& objective() const { return objective_; }
    sense objective_sense() const { return sense_; }

private:
    std::vector<variable> vars_;
    std::vector<row> rows_;
    std::vector<term> objective_;
    sense sense_ = sense::minimize;
};

/// Result of a solve. Duals are reported as d(objective)/d(rhs) in the model's
/// own sense, so for a maximization a binding `<=` row has a nonnegative dual.
struct solution {
    status stat;
    prec_t objective = std::numeric_limits<prec_t>::quiet_NaN();
    numvec primal; // per variable
    numvec dual;   // per constraint
};

/// Basis snapshot expressed through variable tags, usable to warm start a
/// later solve of a structurally similar model. Entries of `basic` hold, per
/// constraint row, the tag of the basic variable, the encoded slack
/// -(row + 2), or -1 when the variable carried no tag; `upper` lists the tags
/// of nonbasic variables resting at their upper bound.
struct warm_basis {
    std::vector<long> basic;
    std::vector<long> upper;
};

namespace detail {

/// Revised simplex over the equality form A x + s = b with bounded variables
/// and an explicit basis inverse. Deterministic pivoting: Dantzig pricing with
/// a Bland fallback after a run of degenerate steps; ties break on the lowest
/// index.
class simplex {
public:
    explicit simplex(const model& m, const warm_basis* warm = nullptr,
                     warm_basis* out = nullptr)
        : m_(m), warm_(warm), out_(out) {}

    solution run() {
#ifdef OSPOSG_LP_STATS
        lp_stats::solves++;
        if (m_.n_rows() >= 100) lp_stats::solves_big++;
        long iters0 = lp_stats::iters;
        auto& shape = lp_stats::shapes[{m_.n_rows(), m_.n_vars()}];
        shape.first++;
        struct shape_guard {
            std::pair<long, long>* s;
            long i0;
            ~shape_guard() { s->second += lp_stats::iters - i0; }
        } guard{&shape, iters0};
#endif
        solution sol;
        try {
            build();
            sol = attempt(false);
        } catch (const numerical_failure_error&) {
#ifdef OSPOSG_LP_STATS
            lp_stats::restarts++;
#endif
            // restart on a maximally stable path: cold basis, Bland pivoting
            // throughout and frequent refactorization
            warm_ = nullptr;
            build();
            sol = attempt(true);
        }
        if (out_ && sol.stat == status::optimal) export_basis(*out_);
        return sol;
    }

private:
    solution attempt(bool conservative) {
        solution sol;
        // phase 1: drive artificial variables to zero
        if (!phase(true, conservative)) {
            sol.stat = status::infeasible;
            return sol;
        }
        prec_t infeas = 0;
        for (int j = art_begin_; j < total_; j++)
            infeas += std::abs(value_of(j));
        if (infeas > 1e-8 * (1 + rhs_scale_)) {
            sol.stat = status::infeasible;
            return sol;
        }
        for (int j = art_begin_; j < total_; j++)
            lo_[j] = hi_[j] = 0;

        // phase 2: optimize the real objective
        if (!phase(false, conservative)) {
            sol.stat = status::unbounded;
            return sol;
        }

        // verify the result; on drift, refactorize and resume
        for (int round = 0;; round++) {
            if (verified()) break;
            if (round >= 3)
                throw numerical_failure_error("simplex failed to reach a verified optimum");
            refactorize();
            recompute_basics();
            if (!phase(false, conservative)) {
                sol.stat = status::unbounded;
                return sol;
            }
        }

        sol.stat = status::optimal;
        sol.primal.resize(m_.n_vars());
        for (int j = 0; j < m_.n_vars(); j++) {
            // residual bound violations are backward error; reporting values
            // clamped into the box keeps downstream sign assumptions intact
            const auto& v = m_.variables()[j];
            sol.primal[j] =
                std::clamp(value_of(j) * colscale_[j], v.lo, v.hi);
        }
        prec_t obj = 0;
        for (const auto& t : m_.objective())
            obj += t.coef * sol.primal[t.var];
        sol.objective = obj;
        compute_duals(sol);
        return sol;
    }

    const model& m_;
    const warm_basis* warm_ = nullptr;
    warm_basis* out_ = nullptr;
    int n_ = 0;         // structural variables
    int rows_ = 0;      // constraints
    int slack_begin_ = 0, art_begin_ = 0, total_ = 0;
    prec_t rhs_scale_ = 0;
    bool maximize_ = false;

    std::vector<std::vector<term>> cols_; // per variable, rows it touches
    numvec rowscale_, colscale_;          // equilibration factors
    numvec lo_, hi_, cost_, val_;         // val_ holds nonbasic values
    numvec rhs_;
    enum class vstat : char { basic, at_lower, at_upper, free_zero };
    std::vector<vstat> stat_;
    indvec basis_;   // basis_[k] = variable in basis row k
    indvec in_basis_; // variable -> basis row or -1
    numvec xb_;      // values of basic variables
    numvec binv_;    // row-major rows_ x rows_ basis inverse
    numvec work_y_, work_w_;

    prec_t value_of(int j) const {
        return in_basis_[j] >= 0 ? xb_[in_basis_[j]] : val_[j];
    }

    /// Geometric-mean equilibration. Coefficients spanning many orders of
    /// magnitude (rewards next to discounted probabilities) otherwise drive
    /// the basis condition number high enough that roundoff masquerades as
    /// reduced costs. Scales are snapped to powers of two so applying them is
    /// exact.
    void compute_scaling() {
        rowscale_.assign(rows_, 1.0);
        colscale_.assign(n_, 1.0);
        // coefficients this far below the row or column maximum are treated as
        // absent: letting them drag the geometric mean would blow up the scale
        // of the dominant entries instead of balancing them
        constexpr prec_t drop = 1e-8;
        for (int round = 0; round < 3; round++) {
            for (int i = 0; i < rows_; i++) {
                prec_t mx = 0, mn = infinity;
                for (const auto& t : m_.rows()[i].terms)
                    mx = std::max(mx, std::abs(t.coef) * rowscale_[i] *
                                          colscale_[t.var]);
                for (const auto& t : m_.rows()[i].terms) {
                    prec_t a = std::abs(t.coef) * rowscale_[i] * colscale_[t.var];
                    if (a >= drop * mx) mn = std::min(mn, a);
                }
                if (mx > 0) rowscale_[i] *= scale_step(mx, mn);
            }
            numvec cmx(n_, 0.0), cmn(n_, infinity);
            for (int i = 0; i < rows_; i++)
                for (const auto& t : m_.rows()[i].terms)
                    cmx[t.var] = std::max(cmx[t.var], std::abs(t.coef) *
                                                          rowscale_[i] *
                                                          colscale_[t.var]);
            for (int i = 0; i < rows_; i++)
                for (const auto& t : m_.rows()[i].terms) {
                    prec_t a = std::abs(t.coef) * rowscale_[i] * colscale_[t.var];
                    if (a >= drop * cmx[t.var]) cmn[t.var] = std::min(cmn[t.var], a);
                }
            for (int j = 0; j < n_; j++)
                if (cmx[j] > 0) colscale_[j] *= scale_step(cmx[j], cmn[j]);
        }
    }

    static prec_t scale_step(prec_t mx, prec_t mn) {
        prec_t e = std::round((std::log2(mx) + std::log2(mn)) / 2);
        return std::exp2(-std::clamp(e, -40.0, 40.0));
    }

    void build() {
        n_ = m_.n_vars();
        rows_ = m_.n_rows();
        maximize_ = m_.objective_sense() == sense::maximize;
        slack_begin_ = n_;
        compute_scaling();

        // the solver works on the scaled system R A C, with variables and
        // duals mapped back at extraction time
        cols_.assign(n_ + rows_, {});
        lo_.assign(n_ + rows_, 0.0);
        hi_.assign(n_ + rows_, 0.0);
        rhs_.assign(rows_, 0.0);
        rhs_scale_ = 0;
        for (int j = 0; j < n_; j++) {
            lo_[j] = m_.variables()[j].lo / colscale_[j];
            hi_[j] = m_.variables()[j].hi / colscale_[j];
        }
        for (int i = 0; i < rows_; i++) {
            const auto& r = m_.rows()[i];
            for (const auto& t : r.terms)
                cols_[t.var].push_back(
                    {i, t.coef * rowscale_[i] * colscale_[t.var]});
            int sj = slack_begin_ + i;
            cols_[sj].push_back({i, 1.0});
            switch (r.r) {
            case rel::le: lo_[sj] = 0; hi_[sj] = infinity; break;
            case rel::ge: lo_[sj] = -infinity; hi_[sj] = 0; break;
            case rel::eq: lo_[sj] = 0; hi_[sj] = 0; break;
            }
            rhs_[i] = r.rhs * rowscale_[i];
            rhs_scale_ = std::max(rhs_scale_, std::abs(rhs_[i]));
        }

        // presolve: an equality row whose unfixed terms all push one way
        // forces every one of them to zero. Fixing those variables up front
        // removes most of the degeneracy that stalls the pivot loop on
        // sparse-belief instances, and cascades through dependent rows.
        for (bool changed = true; changed;) {
            changed = false;
            for (int i = 0; i < rows_; i++) {
                const auto& r = m_.rows()[i];
                if (r.r != rel::eq) continue;
                prec_t resid = r.rhs;
                bool forcing = true;
                for (const auto& t : r.terms) {
                    if (lo_[t.var] == hi_[t.var]) {
                        // bounds are stored scaled; fold in the original value
                        resid -= t.coef * lo_[t.var] * colscale_[t.var];
                        continue;
                    }
                    bool nonneg = t.coef > 0 && lo_[t.var] == 0;
                    bool nonpos = t.coef < 0 && hi_[t.var] == 0;
                    if (!nonneg && !nonpos) forcing = false;
                }
                if (!forcing || std::abs(resid) > 1e-12) continue;
                for (const auto& t : r.terms) {
                    if (lo_[t.var] == hi_[t.var]) continue;
                    lo_[t.var] = hi_[t.var] = 0;
                    changed = true;
                }
            }
        }

        // initial nonbasic values at the nearest finite bound
        int nv = n_ + rows_;
        val_.assign(nv, 0.0);
        stat_.assign(nv, vstat::free_zero);
        for (int j = 0; j < nv; j++) {
            if (std::isfinite(lo_[j])) {
                val_[j] = lo_[j];
                stat_[j] = vstat::at_lower;
            } else if (std::isfinite(hi_[j])) {
                val_[j] = hi_[j];
                stat_[j] = vstat::at_upper;
            }
        }

        basis_.assign(rows_, -1);
        xb_.assign(rows_, 0.0);
        art_begin_ = nv;

        if (warm_ && int(warm_->basic.size()) == rows_) {
            // replay a cached basis: tagged columns that still exist rejoin
            // the basis, vanished ones fall back to slacks, and the
            // feasibility restoration of the pivot loop absorbs whatever the
            // data change did to the basic values. No artificials are
            // created; a failure here falls back to a cold build.
            std::map<long, int> bytag;
            for (int j = 0; j < n_; j++) {
                long t = m_.variables()[j].tag;
                if (t >= 0) bytag[t] = j;
            }
            for (long t : warm_->upper) {
                auto it = bytag.find(t);
                if (it == bytag.end()) continue;
                int j = it->second;
                if (std::isfinite(hi_[j]) && lo_[j] < hi_[j]) {
                    stat_[j] = vstat::at_upper;
                    val_[j] = hi_[j];
                }
            }
            std::vector<char> used(nv, 0);
            for (int i = 0; i < rows_; i++) {
                long t = warm_->basic[i];
                int j = -1;
                if (t <= -2) {
                    int r = int(-t - 2);
                    if (r >= 0 && r < rows_) j = slack_begin_ + r;
                } else if (t >= 0) {
                    auto it = bytag.find(t);
                    // presolve-pinned columns stay out of the basis
                    if (it != bytag.end() && lo_[it->second] < hi_[it->second])
                        j = it->second;
                }
                if (j >= 0 && !used[j]) {
                    used[j] = 1;
                    basis_[i] = j;
                }
            }
            for (int i = 0; i < rows_; i++) {
                if (basis_[i] != -1) continue;
                int r = i;
                while (used[slack_begin_ + r]) r = (r + 1) % rows_;
                used[slack_begin_ + r] = 1;
                basis_[i] = slack_begin_ + r;
            }
            total_ = nv;
            stat_.resize(total_);
            in_basis_.assign(total_, -1);
            for (int i = 0; i < rows_; i++) {
                stat_[basis_[i]] = vstat::basic;
                in_basis_[basis_[i]] = i;
            }
            binv_.assign(std::size_t(rows_) * rows_, 0.0);
            cost_.assign(total_, 0.0);
            refactorize();
            recompute_basics();
            return;
        }

        // residuals decide which rows need an artificial basic variable
        numvec resid = rhs_;
        for (int j = 0; j < nv; j++) {
            if (val_[j] == 0) continue;
            for (const auto& t : cols_[j])
                resid[t.var] -= t.coef * val_[j];
        }
        for (int i = 0; i < rows_; i++) {
            int sj = slack_begin_ + i;
            prec_t sval = val_[sj] + resid[i];
            if (sval >= lo_[sj] - 0.0 && sval <= hi_[sj] + 0.0) {
                // the slack itself can serve as the initial basic variable
                basis_[i] = sj;
                xb_[i] = sval;
            } else {
                int aj = int(cols_.size());
                cols_.push_back({{i, resid[i] >= 0 ? 1.0 : -1.0}});
                lo_.push_back(0);
                hi_.push_back(infinity);
                val_.push_back(0);
                stat_.push_back(vstat::at_lower);
                basis_[i] = aj;
                xb_[i] = std::abs(resid[i]);
            }
        }
        total_ = int(cols_.size());
        stat_.resize(total_);
        in_basis_.assign(total_, -1);
        for (int i = 0; i < rows_; i++) {
            stat_[basis_[i]] = vstat::basic;
            in_basis_[basis_[i]] = i;
        }

        // basis inverse: identity up to artificial signs
        binv_.assign(std::size_t(rows_) * rows_, 0.0);
        for (int i = 0; i < rows_; i++) {
            prec_t d = 1.0;
            if (basis_[i] >= art_begin_) d = cols_[basis_[i]][0].coef;
            binv_[std::size_t(i) * rows_ + i] = 1.0 / d;
        }

        cost_.assign(total_, 0.0);
    }

    void set_phase_costs(bool phase1) {
        std::fill(cost_.begin(), cost_.end(), 0.0);
        if (phase1) {
            for (int j = art_begin_; j < total_; j++)
                cost_[j] = 1.0;
        } else {
            prec_t sign = maximize_ ? -1.0 : 1.0;
            for (const auto& t : m_.objective())
                cost_[t.var] += sign * t.coef * colscale_[t.var];
        }
    }

    void compute_y(numvec& y) const {
        y.assign(rows_, 0.0);
        for (int k = 0; k < rows_; k++) {
            prec_t ck = cost_[basis_[k]];
            if (ck == 0) continue;
            const prec_t* row = binv_.data() + std::size_t(k) * rows_;
            for (int i = 0; i < rows_; i++)
                y[i] += ck * row[i];
        }
    }

    prec_t reduced_cost(int j, const numvec& y) const {
        prec_t d = cost_[j];
        for (const auto& t : cols_[j])
            d -= y[t.var] * t.coef;
        return d;
    }

    void compute_w(int j, numvec& w) const {
        w.assign(rows_, 0.0);
        for (const auto& t : cols_[j]) {
            const prec_t a = t.coef;
            const int i = t.var;
            for (int k = 0; k < rows_; k++)
                w[k] += a * binv_[std::size_t(k) * rows_ + i];
        }
    }

    /// Runs the simplex loop for one phase. Returns false when an unbounded
    /// improving direction exists (phase 2) or feasibility cannot be restored.
    bool phase(bool phase1, bool conservative) {
        set_phase_costs(phase1);
        prec_t cscale = 1.0;
        for (int j = 0; j < total_; j++)
            cscale = std::max(cscale, std::abs(cost_[j]));
        const prec_t dtol = 1e-9 * cscale;
        const long max_iter = 500L * (total_ + rows_) + 50000;
        const int refresh_period = conservative ? 16 : 64;
        int degenerate_run = 0, since_refresh = 0, perturb_rounds = 0;
        // pristine copies of the costs and bounds while a perturbation is
        // active; costs break pricing ties, bounds break vertex degeneracy
        numvec cost0, lo0, hi0;
        bool perturbed = false;
        // lowest-index pricing takes over when perturbation fails to break a
        // stall; it cannot cycle, only crawl
        bool bland = false;

        auto unperturb = [&]() {
            cost_ = cost0;
            lo_ = lo0;
            hi_ = hi0;
            for (int j = 0; j < total_; j++) {
                if (stat_[j] == vstat::at_lower) val_[j] = lo_[j];
                else if (stat_[j] == vstat::at_upper) val_[j] = hi_[j];
            }
            recompute_basics();
            perturbed = false;
            degenerate_run = 0;
        };

        // refresh the inverse and recompute the basic values against it;
        // recomputing can reveal that drift carried a basic value past its
        // bound, which the restoration mode of the main loop repairs
        auto fresh = [&]() {
#ifdef OSPOSG_LP_STATS
            lp_stats::freshes++;
#endif
            refactorize();
            recompute_basics();
            since_refresh = 0;
        };

        const prec_t feastol = 1e-9 * (1 + rhs_scale_);

        for (long iter = 0; iter < max_iter; iter++) {
#ifdef OSPOSG_LP_STATS
            lp_stats::iters++;
            if (rows_ >= 100) {
                lp_stats::iters_big++;
                lp_stats::work_big += long(rows_) * rows_;
            } else {
                lp_stats::iters_small++;
                lp_stats::work_small += long(rows_) * rows_;
            }
#endif
            // a basic value beyond its bound by more than the band switches
            // the iteration into restoration mode: the pricing objective
            // becomes the total bound violation and the ratio test lets the
            // offending variables travel back to the bound they crossed
            bool restoring = false;
            for (int k = 0; k < rows_ && !restoring; k++)
                restoring = xb_[k] < lo_[basis_[k]] - feastol ||
                            xb_[k] > hi_[basis_[k]] + feastol;

            if (restoring) {
                work_y_.assign(rows_, 0.0);
                for (int k = 0; k < rows_; k++) {
                    prec_t ck = 0;
                    if (xb_[k] < lo_[basis_[k]] - feastol) ck = -1.0;
                    else if (xb_[k] > hi_[basis_[k]] + feastol) ck = 1.0;
                    if (ck == 0) continue;
                    const prec_t* row = binv_.data() + std::size_t(k) * rows_;
                    for (int i = 0; i < rows_; i++)
                        work_y_[i] += ck * row[i];
                }
            } else {
                compute_y(work_y_);
            }

            int enter = -1, dir = 0;
            prec_t best_score = dtol;
            for (int j = 0; j < total_; j++) {
                if (stat_[j] == vstat::basic || lo_[j] == hi_[j]) continue;
                prec_t d = reduced_cost(j, work_y_);
                if (restoring) d -= cost_[j];
                int cand_dir = 0;
                if (stat_[j] == vstat::at_lower) {
                    if (d < -dtol) cand_dir = 1;
                } else if (stat_[j] == vstat::at_upper) {
                    if (d > dtol) cand_dir = -1;
                } else { // free at zero
                    if (d < -dtol) cand_dir = 1;
                    else if (d > dtol) cand_dir = -1;
                }
                if (cand_dir == 0) continue;
                if (bland) {
                    enter = j;
                    dir = cand_dir;
                    break;
                }
                prec_t score = std::abs(d);
                if (score > best_score + 1e-15) {
                    best_score = score;
                    enter = j;
                    dir = cand_dir;
                }
            }
            if (enter == -1) {
                if (restoring) {
                    // the violation cannot be reduced any further; repricing
                    // against pristine data and a fresh inverse gets the
                    // final word before giving up
                    if (perturbed) {
                        unperturb();
                        continue;
                    }
                    if (since_refresh > 0) {
                        fresh();
                        continue;
                    }
                    throw numerical_failure_error(
                        "could not restore basis feasibility");
                }
                if (!perturbed) return true; // optimal for this phase
                // optimal for the perturbed problem; certify against the true
                // one, usually a handful of further pivots
                unperturb();
                continue;
            }

            compute_w(enter, work_w_);

            // Two-pass ratio test with a relaxed feasibility band: the first
            // pass finds the largest step keeping every basic variable within
            // feastol of its bound, the second picks the best conditioned
            // pivot among the rows binding within that step. Trading a
            // bounded violation for a large pivot element is what keeps the
            // basis well conditioned; a tiny forced pivot would amplify the
            // inverse by its reciprocal. In restoration mode a violated row
            // only blocks when it travels back toward its box, at the bound
            // it crossed; moving further out is already priced against it.
            const prec_t wtol = 1e-11;
            prec_t span = hi_[enter] - lo_[enter];
            prec_t wmax = 0;
            for (int k = 0; k < rows_; k++)
                wmax = std::max(wmax, std::abs(work_w_[k]));

            // blocking step of basis row k, or -1 when the row never blocks
            auto ratio = [&](int k, prec_t pad) -> prec_t {
                int j = basis_[k];
                prec_t wk = dir * work_w_[k];
                if (std::abs(wk) <= wtol) return -1;
                if (restoring) {
                    if (xb_[k] < lo_[j] - feastol)
                        return wk < 0 ? std::max((xb_[k] - lo_[j]) / wk, 0.0)
                                      : -1;
                    if (xb_[k] > hi_[j] + feastol)
                        return wk > 0 ? std::max((xb_[k] - hi_[j]) / wk, 0.0)
                                      : -1;
                }
                if (wk > 0) {
                    if (!std::isfinite(lo_[j])) return -1;
                    return std::max((xb_[k] - lo_[j] + pad) / wk, 0.0);
                }
                if (!std::isfinite(hi_[j])) return -1;
                return std::max((xb_[k] - hi_[j] - pad) / wk, 0.0);
            };

            prec_t t_limit = infinity;
            for (int k = 0; k < rows_; k++) {
                prec_t t = ratio(k, feastol);
                if (t >= 0) t_limit = std::min(t_limit, t);
            }
            if (t_limit == infinity && !std::isfinite(span)) {
                // a perturbed cost can fake an improving ray; never report
                // unboundedness for anything but the true costs
                if (perturbed) {
                    unperturb();
                    continue;
                }
                // rule out drift before concluding it
                if (since_refresh > 0) {
                    fresh();
                    continue;
                }
                if (restoring)
                    throw numerical_failure_error(
                        "unblocked ray while restoring feasibility");
                return phase1 ? throw numerical_failure_error(
                                    "unbounded direction in feasibility phase")
                              : false;
            }

            int leave = -1; // -1 means a bound flip of the entering variable
            prec_t leave_w = 0, t_best;
            if (span <= t_limit) {
                t_best = span;
            } else if (bland) {
                // exact minimum ratio, ties to the lowest leaving variable
                // index; paired with lowest-index pricing this rule cannot
                // revisit a basis
                prec_t tmin = infinity;
                for (int k = 0; k < rows_; k++) {
                    prec_t t = ratio(k, 0.0);
                    if (t >= 0) tmin = std::min(tmin, t);
                }
                prec_t band = tmin + 1e-12 * (1 + tmin);
                t_best = tmin;
                for (int k = 0; k < rows_; k++) {
                    prec_t t = ratio(k, 0.0);
                    if (t < 0 || t > band) continue;
                    if (leave == -1 || basis_[k] < basis_[leave]) {
                        leave = k;
                        leave_w = work_w_[k];
                        t_best = t;
                    }
                }
            } else {
                t_best = 0;
                prec_t tie = t_limit + 1e-12 * (1 + t_limit);
                // refuse pivots far below the column scale unless nothing
                // else binds within the band
                prec_t floor_w = 1e-6 * (1 + wmax);
                for (int pass = 0; pass < 2 && leave == -1; pass++) {
                    for (int k = 0; k < rows_; k++) {
                        prec_t t = ratio(k, 0.0);
                        if (t < 0) continue;
                        if (t > tie || std::abs(work_w_[k]) < floor_w) continue;
                        if (leave == -1 || std::abs(work_w_[k]) >
                                               std::abs(leave_w) * (1 + 1e-12)) {
                            leave = k;
                            leave_w = work_w_[k];
                            t_best = t;
                        }
                    }
                    floor_w = 0.0;
                }
            }

            // a pivot at the noise level of the running inverse is the
            // signature of drift: a truly dependent direction shows an
            // exactly zero entry once the inverse is rebuilt, so re-price on
            // a fresh factorization before accepting such a pivot
            if (leave != -1 && since_refresh > 0 &&
                std::abs(leave_w) < 1e-9 * (1 + wmax)) {
#ifdef OSPOSG_LP_TRACE
                fprintf(stderr,
                        "[lp] p%d it=%ld RETRY enter=%d dir=%d leave_row=%d "
                        "out=%d w=%.6e wmax=%.3e\n",
                        phase1 ? 1 : 2, iter, enter, dir, leave, basis_[leave],
                        leave_w, wmax);
#endif
                fresh();
                continue;
            }

            // anti-cycling: every pivot makes a minimum forward step, so the
            // iterate never exactly revisits a vertex; the overshoot stays
            // well inside the feasibility band and is absorbed at the next
            // refresh. A long run of near-degenerate pivots means the pricing
            // itself is caught in a tie cycle, which only a perturbation of
            // the costs can break: reduced costs depend on the basis alone,
            // so nudging the basic values would leave the cycle intact.
            if (leave != -1 && t_best < t_limit) {
                prec_t t_min = 0.01 * feastol / std::max<prec_t>(1, std::abs(leave_w));
                t_best = std::min(std::max(t_best, t_min), t_limit);
            }
            if (t_best <= 1e-9) {
                if (!bland && ++degenerate_run >= 25) {
                    degenerate_run = 0;
                    if (++perturb_rounds > 8) {
                        // the perturbation spent itself on earlier blocking
                        // pivots without clearing the stall; crawl out with
                        // the anti-cycling rule instead
                        if (perturbed) unperturb();
                        bland = true;
                        continue;
                    }
                    if (cost0.empty()) {
                        cost0 = cost_;
                        lo0 = lo_;
                        hi0 = hi_;
                    }
                    auto noise = [&](long salt) {
                        prec_t u = 0.618033988749895 * salt * perturb_rounds;
                        return u - std::floor(u);
                    };
                    for (int j = 0; j < total_; j++) {
                        // cost noise is kept positive so a zero-cost ray never
                        // turns into a fake improving direction
                        cost_[j] = cost0[j] + 1e-7 * cscale * perturb_rounds *
                                                  (0.25 + 0.75 * noise(j + 1));
                        // widening each finite bound by a distinct amount
                        // makes the blocking ratios strictly positive again.
                        // Equality-row slacks are widened as well (their rows
                        // are where hard degeneracy lives), but artificials
                        // and presolve-fixed variables stay pinned
                        if (j >= art_begin_) continue;
                        if (lo0[j] == hi0[j] && j < slack_begin_) continue;
                        prec_t amp = 16 * feastol * perturb_rounds;
                        if (std::isfinite(lo0[j]))
                            lo_[j] = lo0[j] - amp * (0.25 + 0.75 * noise(j + 1 + total_));
                        if (std::isfinite(hi0[j]))
                            hi_[j] = hi0[j] + amp * (0.25 + 0.75 * noise(j + 1 + 2 * total_));
                    }
                    perturbed = true;
                }
            } else if (t_best > 1e-7) {
                degenerate_run = 0;
            }

            // apply the step to the basic values
            if (t_best > 0)
                for (int k = 0; k < rows_; k++)
                    xb_[k] -= t_best * dir * work_w_[k];

            if (leave == -1) {
                // bound flip, basis unchanged
                stat_[enter] = dir > 0 ? vstat::at_upper : vstat::at_lower;
                val_[enter] = dir > 0 ? hi_[enter] : lo_[enter];
                continue;
            }

            int out = basis_[leave];
#ifdef OSPOSG_LP_TRACE
            fprintf(stderr,
                    "[lp] p%d it=%ld enter=%d dir=%d d=%.6e leave_row=%d "
                    "out=%d w=%.6e t=%.3e deg=%d refresh=%d\n",
                    phase1 ? 1 : 2, iter, enter, dir,
                    reduced_cost(enter, work_y_), leave, out, leave_w, t_best,
                    degenerate_run, since_refresh);
#endif
            // the variable leaves at whichever bound its final value sits
            // nearest; the sign of the step decides only in the interior
            // case, while a variable returning from outside its box must
            // snap to the bound it just crossed
            prec_t out_end = xb_[leave]; // step already applied above
            bool out_low;
            if (!std::isfinite(lo_[out])) out_low = false;
            else if (!std::isfinite(hi_[out])) out_low = true;
            else out_low = std::abs(out_end - lo_[out]) <= std::abs(out_end - hi_[out]);
            stat_[out] = out_low ? vstat::at_lower : vstat::at_upper;
            val_[out] = out_low ? lo_[out] : hi_[out];
            in_basis_[out] = -1;

            prec_t enter_val =
                (stat_[enter] == vstat::at_upper ? hi_[enter]
                 : stat_[enter] == vstat::at_lower ? lo_[enter]
                                                   : 0.0) +
                dir * t_best;
            basis_[leave] = enter;
            in_basis_[enter] = leave;
            stat_[enter] = vstat::basic;
            xb_[leave] = enter_val;

            // pivot the basis inverse
            prec_t p = leave_w;
            prec_t* prow = binv_.data() + std::size_t(leave) * rows_;
            for (int i = 0; i < rows_; i++)
                prow[i] /= p;
            for (int k = 0; k < rows_; k++) {
                if (k == leave) continue;
                prec_t f = work_w_[k];
                if (f == 0) continue;
                prec_t* krow = binv_.data() + std::size_t(k) * rows_;
                for (int i = 0; i < rows_; i++)
                    krow[i] -= f * prow[i];
            }

            // periodic refresh keeps the inverse close to the true basis, so
            // pivots never happen on accumulated drift
            if (++since_refresh >= refresh_period) fresh();
        }
        throw numerical_failure_error("simplex iteration limit exceeded");
    }

    /// Recomputes the basis inverse from scratch with Gauss-Jordan elimination.
    /// A recorded basis can turn out linearly dependent when drift in the
    /// running inverse admitted a pivot whose true tableau entry was zero; in
    /// that case the dependent columns are replaced by the slacks of the rows
    /// the elimination could not reach and the factorization restarts.
    /// Returns true when such a repair happened.
    bool refactorize() {
        std::size_t m = rows_;
        numvec B(m * m), inv(m * m);
        std::vector<int> pivrow(m);
        std::vector<char> used(m);
        for (int round = 0; round < 2; round++) {
            std::fill(B.begin(), B.end(), 0.0);
            std::fill(inv.begin(), inv.end(), 0.0);
            std::fill(used.begin(), used.end(), 0);
            for (std::size_t k = 0; k < m; k++) {
                for (const auto& t : cols_[basis_[k]])
                    B[std::size_t(t.var) * m + k] += t.coef;
                inv[k * m + k] = 1.0;
            }
            std::vector<std::size_t> dependent;
            for (std::size_t c = 0; c < m; c++) {
                // a pivot far below the column's own scale marks the column
                // as (near) dependent on the ones already eliminated; keeping
                // it would make the inverse amplify noise past any tolerance
                prec_t colscale = 0;
                for (const auto& t : cols_[basis_[c]])
                    colscale = std::max(colscale, std::abs(t.coef));
                std::size_t piv = m;
                prec_t best = std::max(1e-11, 1e-8 * colscale);
                for (std::size_t r = 0; r < m; r++) {
                    prec_t a = std::abs(B[r * m + c]);
                    if (!used[r] && a > best) {
                        best = a;
                        piv = r;
                    }
                }
                if (piv == m) {
                    dependent.push_back(c);
                    continue;
                }
                used[piv] = 1;
                pivrow[c] = int(piv);
                prec_t d = B[piv * m + c];
                for (std::size_t i = 0; i < m; i++) {
                    B[piv * m + i] /= d;
                    inv[piv * m + i] /= d;
                }
                for (std::size_t r = 0; r < m; r++) {
                    if (r == piv) continue;
                    prec_t f = B[r * m + c];
                    if (f == 0) continue;
                    for (std::size_t i = 0; i < m; i++) {
                        B[r * m + i] -= f * B[piv * m + i];
                        inv[r * m + i] -= f * inv[piv * m + i];
                    }
                }
            }
            if (dependent.empty()) {
                // row ops turned B into a permutation: row pivrow[c] of the
                // transformed identity is row c of the inverse
                for (std::size_t c = 0; c < m; c++) {
                    const prec_t* src = inv.data() + std::size_t(pivrow[c]) * m;
                    std::copy(src, src + m, binv_.data() + c * m);
                }
                return round > 0;
            }
#ifdef OSPOSG_LP_TRACE
            fprintf(stderr, "[lp] repairing %zu dependent basis columns\n",
                    dependent.size());
#endif
#ifdef OSPOSG_LP_STATS
            lp_stats::repairs++;
#endif
            // a row the elimination never reached cannot have its own slack
            // basic, so that slack is free to stand in for a dependent column
            std::size_t di = 0;
            for (std::size_t r = 0; r < m && di < dependent.size(); r++) {
                if (used[r]) continue;
                int sj = slack_begin_ + int(r);
                if (in_basis_[sj] != -1) continue;
                std::size_t k = dependent[di++];
                int out = basis_[k];
                in_basis_[out] = -1;
                if (std::isfinite(lo_[out])) {
                    stat_[out] = vstat::at_lower;
                    val_[out] = lo_[out];
                } else if (std::isfinite(hi_[out])) {
                    stat_[out] = vstat::at_upper;
                    val_[out] = hi_[out];
                } else {
                    stat_[out] = vstat::free_zero;
                    val_[out] = 0;
                }
                basis_[k] = sj;
                in_basis_[sj] = k;
                stat_[sj] = vstat::basic;
            }
            if (di < dependent.size())
                throw numerical_failure_error("singular basis beyond repair");
        }
        throw numerical_failure_error("singular basis beyond repair");
    }

    void recompute_basics() {
        numvec r = rhs_;
        for (int j = 0; j < total_; j++) {
            if (stat_[j] == vstat::basic || val_[j] == 0) continue;
            for (const auto& t : cols_[j])
                r[t.var] -= t.coef * val_[j];
        }
        for (int k = 0; k < rows_; k++) {
            prec_t v = 0;
            const prec_t* row = binv_.data() + std::size_t(k) * rows_;
            for (int i = 0; i < rows_; i++)
                v += row[i] * r[i];
            xb_[k] = v;
        }
    }

    /// Backward-error check of the proposed solution: row residuals are
    /// measured against the magnitude of the terms that formed them, bound
    /// violations against the documented feasibility tolerance.
    bool verified() const {
        numvec activity(rows_, 0.0), rowmag(rows_, 0.0);
        for (int j = 0; j < total_; j++) {
            prec_t v = value_of(j);
            if (v == 0) continue;
            for (const auto& t : cols_[j]) {
                activity[t.var] += t.coef * v;
                rowmag[t.var] += std::abs(t.coef * v);
            }
        }
        for (int i = 0; i < rows_; i++)
            if (std::abs(activity[i] - rhs_[i]) >
                1e-7 * (1 + std::max(std::abs(rhs_[i]), rowmag[i]))) {
#ifdef OSPOSG_LP_TRACE
                fprintf(stderr, "[lp] verify row=%d act=%.12e rhs=%.12e\n", i,
                        activity[i], rhs_[i]);
#endif
                return false;
            }
        for (int j = 0; j < total_; j++) {
            prec_t v = value_of(j);
            if (v < lo_[j] - 1e-6 * (1 + std::abs(lo_[j])) ||
                v > hi_[j] + 1e-6 * (1 + std::abs(hi_[j]))) {
#ifdef OSPOSG_LP_TRACE
                fprintf(stderr, "[lp] verify var=%d v=%.12e lo=%.6e hi=%.6e\n",
                        j, v, lo_[j], hi_[j]);
#endif
                return false;
            }
        }
        return true;
    }

    void compute_duals(solution& sol) {
        compute_y(work_y_);
        sol.dual.assign(rows_, 0.0);
        prec_t sign = maximize_ ? -1.0 : 1.0;
        for (int i = 0; i < rows_; i++)
            sol.dual[i] = sign * work_y_[i] * rowscale_[i];
    }

    void export_basis(warm_basis& out) const {
        out.basic.assign(rows_, -1);
        out.upper.clear();
        for (int i = 0; i < rows_; i++) {
            int j = basis_[i];
            if (j < n_) {
                long t = m_.variables()[j].tag;
                if (t >= 0) out.basic[i] = t;
            } else if (j < slack_begin_ + rows_) {
                out.basic[i] = -long(j - slack_begin_) - 2;
            }
        }
        for (int j = 0; j < n_; j++)
            if (stat_[j] == vstat::at_upper && m_.variables()[j].tag >= 0)
                out.upper.push_back(m_.variables()[j].tag);
    }
};

} // namespace detail


namespace detail {
inline void append_terms(std::ostringstream& out, const std::vector<term>& terms,
                         const model& m) {
    bool first = true;
    for (const auto& t : terms) {
        prec_t c = t.coef;
        if (first) {
            if (c < 0) out << "- ";
            first = false;
        } else {
            out << (c < 0 ? " - " : " + ");
        }
        const auto& name = m.variables()[t.var].name;
        out.precision(17);
        out << std::abs(c) << " ";
        if (name.empty())
            out << "x" << t.var;
        else
            out << name;
    }
    if (first) out << "0 x0";
}
} // namespace detail

/// Renders the model in the conventional LP text format for external checking.
inline std::string write_lp_format(const model& m) {
    std::ostringstream out;
    out.precision(17);
    out << (m.objective_sense() == sense::maximize ? "Maximize\n" : "Minimize\n");
    out << " obj: ";
    detail::append_terms(out, m.objective(), m);
    out << "\nSubject To\n";
    for (int i = 0; i < m.n_rows(); i++) {
        const auto& r = m.rows()[i];
        out << " ";
        if (r.name.empty())
            out << "c" << i;
        else
            out << r.name;
        out << ": ";
        detail::append_terms(out, r.terms, m);
        switch (r.r) {
        case rel::le: out << " <= "; break;
        case rel::ge: out << " >= "; break;
        case rel::eq: out << " = "; break;
        }
        out << r.rhs << "\n";
    }
    out << "Bounds\n";
    for (int j = 0; j < m.n_vars(); j++) {
        const auto& v = m.variables()[j];
        std::string name = v.name.empty() ? "x" + std::to_string(j) : v.name;
        if (v.lo == 0 && v.hi == infinity) continue;
        out << " ";
        if (!std::isfinite(v.lo) && !std::isfinite(v.hi))
            out << name << " free";
        else if (v.lo == v.hi)
            out << name << " = " << v.lo;
        else {
            if (std::isfinite(v.lo))
                out << v.lo << " <= ";
            else
                out << "-inf <= ";
            out << name;
            if (std::isfinite(v.hi)) out << " <= " << v.hi;
        }
        out << "\n";
    }
    out << "End\n";
    return out.str();
}

/// Solves the model. Throws numerical_failure_error when no verified optimum
/// can be reached; infeasible and unbounded models are reported via the status.
/// When `warm` is given its basis seeds the solve; when `out` is given the
/// final basis is exported into it after an optimal solve.
inline solution solve(const model& m, const warm_basis* warm = nullptr,
                      warm_basis* out = nullptr) {
    detail::simplex s(m, warm, out);
#ifdef OSPOSG_LP_DUMP_ON_FAILURE
    try {
        return s.run();
    } catch (const numerical_failure_error&) {
        std::ofstream dump("/tmp/failing_lp.txt");
        dump << write_lp_format(m);
        throw;
    }
#else
    return s.run();
#endif
}

} // namespace osposg::lp
