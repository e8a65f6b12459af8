#include "osposg/osposg.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

using namespace osposg;

TEST_CASE("pennies generates, solves and round-trips", "[smoke]") {
    game g = gen_matching_pennies(0.9);
    REQUIRE(g.n_states() == 4);
    REQUIRE(g.n_blocks() == 3);

    auto j = io::game_to_json(g);
    game g2 = io::game_from_json(j);
    REQUIRE(io::game_hash(g) == io::game_hash(g2));

    solver_config cfg;
    cfg.epsilon = 0.5;
    hsvi_solver solver(g, cfg);
    auto stats = solver.solve();
    REQUIRE(stats.final_gap <= 0.5);

    const belief& b0 = g.initial_belief();
    prec_t uv = solver.lower().value(b0), ov = solver.upper().value(b0);
    REQUIRE(uv <= ov + 1e-9);

    p1_resolving p1(g, solver.lower());
    p2_stage_replay p2(g, solver.upper());
    auto ep = simulate(g, p1, p2, 30, 20, 7);
    REQUIRE(ep.payoffs.size() == 20);
}
