#include <cmath>
#include <vector>

#include "doctest.h"

#include "contagion/experiment.hpp"

using namespace contagion;

namespace {

SearchConfig small_search() {
    SearchConfig s;
    s.side = 12;
    s.max_events = 5000;
    s.sims_per_block = 5;
    s.master_seed = 42;
    return s;
}

}  // namespace

TEST_CASE("search config validation and replica seeds") {
    SearchConfig s = small_search();
    CHECK_NOTHROW(s.validate());
    const EngineConfig a = s.replica_config(1.0, 2.0, 0);
    const EngineConfig b = s.replica_config(1.0, 2.0, 1);
    const EngineConfig c = s.replica_config(1.0, 3.0, 0);
    CHECK(a.seed == derive_seed(42, {key_of(1.0), key_of(2.0), 0}));
    CHECK(a.seed != b.seed);
    CHECK(a.seed != c.seed);
    CHECK(a.lattice.dim() == 2);
    CHECK(a.lattice.side() == 12);
    CHECK(a.max_events == 5000);

    s.sims_per_block = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = small_search();
    s.gamma_factor = 1.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = small_search();
    s.lambda_step = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("trial block extremes") {
    SearchConfig s = small_search();
    s.side = 10;
    s.max_events = 10000;
    const TrialBlock dead = survival_trial_block(1e3, kInfinity, s);
    CHECK(!dead.survived);
    CHECK(dead.sims_used == 5);

    const TrialBlock alive = survival_trial_block(1e-3, 1e-3, s);
    CHECK(alive.survived);
    CHECK(alive.sims_used == 1);
    CHECK(alive.events == 10000);
}

TEST_CASE("trial block is independent of the thread count") {
    for (double gamma : {0.5, 1.0, 2.0}) {
        SearchConfig s = small_search();
        s.sims_per_block = 8;
        const TrialBlock one = survival_trial_block(0.8, gamma, s);
        s.threads = 3;
        const TrialBlock three = survival_trial_block(0.8, gamma, s);
        CHECK(one.survived == three.survived);
        CHECK(one.sims_used == three.sims_used);
        CHECK(one.events == three.events);
        CHECK(one.sims_used <= 8);
    }
}

TEST_CASE("lambda search") {
    SearchConfig s = small_search();
    s.lambda_init = 1.0;
    s.lambda_step = 0.05;
    const LambdaSearch r = estimate_lambda_c_inf(s);
    REQUIRE(r.resolved);
    REQUIRE(!r.trace.empty());
    CHECK(r.trace.back().survived);
    for (std::size_t i = 0; i + 1 < r.trace.size(); ++i) {
        CHECK(!r.trace[i].survived);
        CHECK(r.trace[i + 1].lambda < r.trace[i].lambda);
        CHECK(r.trace[i].sims_used == s.sims_per_block);
    }
    CHECK(r.lambda_c_inf_hat == r.trace.back().lambda);
    CHECK(r.events > 0);

    // lambda_init below every plausible threshold survives immediately.
    s.lambda_init = 0.05;
    s.lambda_step = 0.01;
    const LambdaSearch immediate = estimate_lambda_c_inf(s);
    CHECK(immediate.resolved);
    CHECK(immediate.trace.size() == 1);
    CHECK(immediate.lambda_c_inf_hat == 0.05);

    // An empty lattice never survives, so the search runs out of grid.
    SearchConfig empty = small_search();
    empty.load = LoadDistribution::parse("0:1");
    empty.lambda_init = 0.3;
    empty.lambda_step = 0.1;
    const LambdaSearch none = estimate_lambda_c_inf(empty);
    CHECK(!none.resolved);
    CHECK(std::isnan(none.lambda_c_inf_hat));
    CHECK(none.trace.size() == 3);
}

TEST_CASE("lambda search refinement stays in the bracket") {
    SearchConfig s = small_search();
    s.lambda_init = 1.0;
    s.lambda_step = 0.1;
    s.refine_iterations = 3;
    const LambdaSearch r = estimate_lambda_c_inf(s);
    REQUIRE(r.resolved);
    std::size_t first_success = 0;
    while (!r.trace[first_success].survived) ++first_success;
    if (first_success > 0) {
        const double hi = r.trace[first_success - 1].lambda;
        const double lo = r.trace[first_success].lambda;
        CHECK(r.trace.size() == first_success + 1 + 3);
        for (std::size_t i = first_success + 1; i < r.trace.size(); ++i) {
            CHECK(r.trace[i].lambda > lo);
            CHECK(r.trace[i].lambda < hi);
        }
        CHECK(r.lambda_c_inf_hat >= lo);
        CHECK(r.lambda_c_inf_hat < hi);
    }
}

TEST_CASE("gamma sweep") {
    SearchConfig s = small_search();
    s.gamma_init = 10;
    s.gamma_factor = 0.7;
    s.gamma_floor = 1e-3;
    const std::vector<double> grid{0.3, 2.0};
    const PhaseBoundaryEstimate p = estimate_gamma_c(grid, s, 0.9);
    REQUIRE(p.points.size() == 2);
    CHECK(p.lambda_c_inf_hat == 0.9);

    // Far below the threshold the first gamma already survives.
    CHECK(p.points[0].degenerate);
    CHECK(p.points[0].resolved);
    CHECK(p.points[0].gamma_c_hat == 10);
    CHECK(p.points[0].gamma_steps == 1);

    const GammaPoint& q = p.points[1];
    CHECK(q.resolved);
    CHECK(!q.degenerate);
    CHECK(q.gamma_c_hat < 10);
    CHECK(q.gamma_c_hat == doctest::Approx(10 * std::pow(0.7, q.gamma_steps - 1)));
    CHECK(q.trials_used >= (q.gamma_steps - 1) * s.sims_per_block);

    SearchConfig threaded = s;
    threaded.threads = 4;
    const PhaseBoundaryEstimate p4 = estimate_gamma_c(grid, threaded, 0.9);
    CHECK(p4.points[1].gamma_c_hat == q.gamma_c_hat);
    CHECK(p4.points[1].trials_used == q.trials_used);
    CHECK(p4.events == p.events);
}

TEST_CASE("gamma sweep that runs past the floor") {
    SearchConfig s = small_search();
    s.load = LoadDistribution::parse("0:1");
    s.gamma_init = 1;
    s.gamma_factor = 0.5;
    s.gamma_floor = 0.1;
    const std::vector<double> grid{1.0};
    const PhaseBoundaryEstimate p = estimate_gamma_c(grid, s);
    REQUIRE(p.points.size() == 1);
    CHECK(!p.points[0].resolved);
    CHECK(p.points[0].gamma_steps == 4);
    CHECK(p.points[0].gamma_c_hat == doctest::Approx(0.125));
}

TEST_CASE("spearman") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> up{2, 4, 6, 8, 10};
    const std::vector<double> down{9, 7, 5, 3, 1};
    CHECK(spearman(x, up) == doctest::Approx(1.0));
    CHECK(spearman(x, down) == doctest::Approx(-1.0));
    // Ties get average ranks: ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4).
    const std::vector<double> a{1, 2, 3, 4};
    const std::vector<double> b{1, 2, 2, 3};
    CHECK(spearman(a, b) == doctest::Approx(4.5 / std::sqrt(5.0 * 4.5)));
    CHECK(std::isnan(spearman(x, std::vector<double>{1, 1, 1, 1, 1})));
    CHECK_THROWS_AS((void)spearman(x, a), std::invalid_argument);
}
