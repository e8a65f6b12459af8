#include "osposg/osposg.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

namespace {

using namespace osposg;

constexpr int exit_ok = 0;
constexpr int exit_input = 2;
constexpr int exit_budget = 3;
constexpr int exit_internal = 4;

struct generate_args {
    std::string family;
    std::string out;
    int rows = 3, cols = 3, pursuers = 2;
    int width = 3, units = 1;
    int vertices = 7, attack_time = 3;
    double edge_prob = 0.25;
    numvec costs;
    double gamma = 0.95;
    std::uint64_t seed = 1;
};

int run_generate(const generate_args& a) {
    game g = [&] {
        if (a.family == "pursuit")
            return gen_pursuit(a.rows, a.cols, a.pursuers, a.gamma);
        if (a.family == "search") return gen_search(a.width, a.units, a.gamma);
        if (a.family == "patrolling")
            return gen_patrolling(a.vertices, a.edge_prob, a.attack_time, a.costs,
                                  a.gamma, a.seed);
        return gen_matching_pennies(a.gamma);
    }();
    io::save_game(g, a.out);
    std::cout << "wrote " << a.out << ": " << g.n_states() << " states, "
              << g.n_blocks() << " blocks, " << g.n_actions1() << "x"
              << g.n_actions2() << " actions, " << g.n_observations()
              << " observations\n";
    return exit_ok;
}

struct solve_args {
    std::string game_path;
    std::string out;
    solver_config cfg;
    bool log = false;
};

int run_solve(const solve_args& a) {
    game g = io::load_game(a.game_path);
    solver_config cfg = a.cfg;
    if (a.log) cfg.log = &std::cerr;
    hsvi_solver solver(g, cfg);
    solve_stats st = solver.solve();

    const belief& b0 = g.initial_belief();
    prec_t uv = solver.lower().value(b0), ov = solver.upper().value(b0);
    std::printf("lower  %.6f\nupper  %.6f\ngap    %.6g (target %.6g)\n", uv, ov,
                st.final_gap, cfg.epsilon);
    std::printf("trials %d  updates %ld  |G| %d  |Y| %d\n", st.trials, st.updates,
                solver.lower().size(), solver.upper().size());
    std::printf("time   %.2fs init + %.2fs trials = %.2fs\n", st.seconds_init,
                st.seconds_trials, st.seconds_total);
    if (!a.out.empty()) {
        io::save_bounds(g, solver.lower(), solver.upper(), st.final_gap,
                        io::config_to_json(cfg), a.out, st.wall_clock_exceeded);
        std::cout << "wrote " << a.out << "\n";
    }
    if (st.wall_clock_exceeded) {
        std::cerr << "time limit exceeded before reaching the target gap\n";
        return exit_budget;
    }
    return exit_ok;
}

struct play_args {
    std::string game_path, bounds_path, mode = "selfplay", trajectories;
    int episodes = 2000, horizon = 0;
    std::uint64_t seed = 1;
};

int run_play(const play_args& a) {
    game g = io::load_game(a.game_path);
    io::bounds_file bf = io::load_bounds(g, a.bounds_path);

    const prec_t range = g.bounds().upper - g.bounds().lower;
    int horizon = a.horizon;
    if (horizon <= 0) { // smallest horizon that makes the truncation negligible
        horizon = 1;
        while (std::pow(g.gamma(), horizon) * range > 1e-3 && horizon < 10000)
            horizon++;
    }
    prec_t trunc = std::pow(g.gamma(), horizon) * range;
    prec_t tau = std::pow(g.gamma(), horizon) *
                 std::max(std::abs(g.bounds().lower), std::abs(g.bounds().upper));
    if (trunc > 1e-3)
        std::cerr << "warning: horizon " << horizon << " leaves a truncation error "
                  << trunc << "; the verdict interval is widened accordingly\n";

    std::unique_ptr<player1_policy> p1;
    std::unique_ptr<player2_policy> p2;
    if (a.mode == "uniform-vs-p2")
        p1 = std::make_unique<p1_uniform>(g);
    else
        p1 = std::make_unique<p1_resolving>(g, bf.lower);
    if (a.mode == "p1-vs-uniform")
        p2 = std::make_unique<p2_uniform>(g);
    else
        p2 = std::make_unique<p2_stage_replay>(g, bf.upper);

    std::ofstream traj;
    if (!a.trajectories.empty()) {
        traj.open(a.trajectories);
        if (!traj) throw validation_error("cannot open " + a.trajectories);
    }
    episode_stats st = simulate(g, *p1, *p2, horizon, a.episodes, a.seed,
                                traj.is_open() ? &traj : nullptr);

    const belief& b0 = g.initial_belief();
    prec_t uv = bf.lower.value(b0), ov = bf.upper.value(b0);
    prec_t lo = uv - tau - 3 * st.std_error, hi = ov + tau + 3 * st.std_error;
    std::printf("mode %s, %d episodes, horizon %d, seed %llu\n", a.mode.c_str(),
                a.episodes, horizon, (unsigned long long)a.seed);
    std::printf("mean %.6f  se %.6f  min %.6f  max %.6f\n", st.mean, st.std_error,
                st.min, st.max);
    std::printf("bounds [%.6f, %.6f], verdict interval [%.6f, %.6f]\n", uv, ov, lo,
                hi);
    bool inside = st.mean >= lo && st.mean <= hi;
    std::printf("sandwich verdict: %s\n", inside ? "inside" : "OUTSIDE");
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solver toolkit for one-sided partially observable stochastic "
                 "games: value bounds via heuristic search value iteration and "
                 "bound-guided strategies for both players."};
    app.require_subcommand(1);

    generate_args ga;
    auto* gen = app.add_subcommand("generate", "Generate a benchmark game file");
    gen->require_subcommand(1);
    auto add_common = [&](CLI::App* fam) {
        fam->add_option("-o,--out", ga.out, "Output game file")->required();
        fam->add_option("--gamma", ga.gamma, "Discount factor");
    };
    auto* fp = gen->add_subcommand("pursuit", "Grid pursuit-evasion game");
    fp->add_option("--rows", ga.rows, "Grid rows");
    fp->add_option("--cols", ga.cols, "Grid columns");
    fp->add_option("--pursuers", ga.pursuers, "Pursuer team size");
    add_common(fp);
    auto* fs = gen->add_subcommand("search", "Two-line border search game");
    fs->add_option("--width", ga.width, "Checkpoint line width");
    fs->add_option("--units", ga.units, "Defender units on line 1 (1 or 2)");
    add_common(fs);
    auto* fg = gen->add_subcommand("patrolling", "Random-graph patrolling game");
    fg->add_option("--vertices", ga.vertices, "Number of graph vertices");
    fg->add_option("--p", ga.edge_prob, "Edge probability");
    fg->add_option("--attack-time", ga.attack_time, "Stages an attack needs");
    fg->add_option("--cost", ga.costs, "Per-vertex costs (default uniform)");
    fg->add_option("--seed", ga.seed, "Graph seed");
    add_common(fg);
    auto* fm = gen->add_subcommand("pennies", "Two-stage matching pennies");
    add_common(fm);

    solve_args sa;
    auto* sol = app.add_subcommand("solve", "Compute value bounds for a game file");
    sol->add_option("game", sa.game_path, "Game file")->required();
    sol->add_option("-o,--out", sa.out, "Output bounds file");
    sol->add_option("--epsilon", sa.cfg.epsilon, "Target gap at the initial belief");
    sol->add_option("--neighborhood", sa.cfg.neighborhood,
                    "Neighborhood parameter D (default 0.9 (1-gamma) eps / (2 delta))");
    sol->add_option("--eta", sa.cfg.eta, "Gap contraction of the trial target");
    sol->add_option("--init-beta", sa.cfg.init_beta,
                    "Residual threshold of bound initialization");
    sol->add_option("--init-time-limit", sa.cfg.init_time_limit,
                    "Seconds allowed per bound initialization");
    sol->add_option("--time-limit", sa.cfg.time_limit,
                    "Overall wall-clock limit in seconds");
    sol->add_option("--prune-growth", sa.cfg.prune_growth,
                    "Point-set growth that triggers pruning");
    sol->add_option("--seed", sa.cfg.seed, "Recorded in the bounds metadata");
    sol->add_flag("--log", sa.log, "Per-trial progress on stderr");

    play_args pa;
    auto* pl = app.add_subcommand("play", "Evaluate extracted strategies by rollout");
    pl->add_option("game", pa.game_path, "Game file")->required();
    pl->add_option("bounds", pa.bounds_path, "Bounds file from solve")->required();
    pl->add_option("--mode", pa.mode, "Matchup")
        ->check(CLI::IsMember({"selfplay", "p1-vs-uniform", "uniform-vs-p2"}));
    pl->add_option("--episodes", pa.episodes, "Number of episodes");
    pl->add_option("--horizon", pa.horizon,
                   "Stages per episode (default: truncation error below 1e-3)");
    pl->add_option("--seed", pa.seed, "Simulation seed");
    pl->add_option("--trajectories", pa.trajectories, "Write per-step lines here");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) {
            ga.family = gen->get_subcommands().front()->get_name();
            return run_generate(ga);
        }
        if (sol->parsed()) return run_solve(sa);
        return run_play(pa);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_input;
    } catch (const validation_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return exit_input;
    } catch (const disconnected_graph_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return exit_input;
    } catch (const solver_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return exit_internal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
}
