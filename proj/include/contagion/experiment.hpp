#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "contagion/engine.hpp"

namespace contagion {

/// Phase-diagram search protocol: blocks of up to S runs of up to K events each on an
/// L^d torus, M = 1 and k = 1 unless overridden.
struct SearchConfig {
    int dim = 2;
    int side = 30;                   // L
    int k = 1;
    std::uint64_t max_events = 100000;  // K
    unsigned sims_per_block = 30;       // S
    LoadDistribution load = LoadDistribution::point_mass(1);
    TransmissionMode mode = TransmissionMode::standard;

    double lambda_init = 1.5;
    double lambda_step = 0.01;
    int refine_iterations = 0;  // bisection steps between the first success and the last failure

    double gamma_init = 10.0;
    double gamma_factor = 0.9;
    double gamma_floor = 1e-4;
    std::vector<double> lambda_grid;

    unsigned threads = 1;
    std::uint64_t master_seed = 0;

    void validate() const;

    /// Engine configuration of replica `replica` at (lambda, gamma); its seed is
    /// derive_seed(master_seed, {key_of(lambda), key_of(gamma), replica}).
    [[nodiscard]] EngineConfig replica_config(double lambda, double gamma, std::uint64_t replica) const;
};

struct TrialBlock {
    bool survived = false;
    unsigned sims_used = 0;
    std::uint64_t events = 0;  // events executed by the consulted replicas
};

/// Runs replicas 0, 1, ... in order and stops at the first one with an infected
/// particle after event K, or after S replicas. With threads > 1 batches run
/// speculatively; results past the first survivor are discarded.
[[nodiscard]] TrialBlock survival_trial_block(double lambda, double gamma, const SearchConfig& search);

struct LambdaSearchStep {
    double lambda = 0;
    bool survived = false;
    unsigned sims_used = 0;
};

struct LambdaSearch {
    bool resolved = false;
    double lambda_c_inf_hat = std::numeric_limits<double>::quiet_NaN();
    std::vector<LambdaSearchStep> trace;  // fixed-step pass, then refinement steps
    std::uint64_t events = 0;
};

/// Decreases lambda from lambda_init by lambda_step at gamma = inf until a block
/// survives. Unresolved when lambda would drop below lambda_step.
[[nodiscard]] LambdaSearch estimate_lambda_c_inf(const SearchConfig& search);

struct GammaPoint {
    double lambda = 0;
    double gamma_c_hat = 0;  // first surviving gamma, or the last one tried if unresolved
    bool resolved = false;
    bool degenerate = false;  // survived already at gamma_init
    std::uint64_t trials_used = 0;
    unsigned gamma_steps = 0;
};

struct PhaseBoundaryEstimate {
    double lambda_c_inf_hat = std::numeric_limits<double>::quiet_NaN();
    std::vector<GammaPoint> points;
    std::uint64_t events = 0;
};

/// For each lambda, sweeps gamma = gamma_init * gamma_factor^j downward until a block
/// survives; points that pass gamma_floor are unresolved.
[[nodiscard]] PhaseBoundaryEstimate estimate_gamma_c(std::span<const double> lambda_grid, const SearchConfig& search,
                                                     double lambda_c_inf_hat = std::numeric_limits<double>::quiet_NaN());

/// Spearman rank correlation with average ranks for ties. NaN if either side is constant.
[[nodiscard]] double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace contagion
