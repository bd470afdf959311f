#pragma once

#include <cstdint>

namespace contagion {

/// Inputs of the branching-process subcriticality bound for the maximal-load epidemic.
struct BoundParameters {
    int d = 2;
    int k = 1;
    unsigned m_bar = 1;  // almost-sure cap on particles per site
    double lambda = 1.0;
    double gamma = 1.0;  // may be infinity

    void validate() const;
};

/// Branching bound for one local infection process.
///
/// With n = m_bar * v_k particles per site, a local process alternates particle phases
/// (each ends when every resident has recovered) and site phases (each ends with the
/// site cleared or a reinforcement restoring the fully infected state). Signals per
/// particle phase are dominated by failures of a Ge(p_part*) variable and the number
/// of particle phases by the number of trials of a Ge(p_site*) variable, giving
///
///     E[offspring] <= (1 / p_site*) * (1 - p_part*) / p_part*.
///
/// `failure_product` keeps the product of the two failure means,
/// ((1 - p_site*) / p_site*) * ((1 - p_part*) / p_part*), which leaves out the first
/// particle phase and is therefore not an upper bound on its own (it vanishes at
/// gamma = inf).
struct BoundResult {
    std::uint64_t v_k = 0;
    double load = 0;                // n = m_bar * v_k
    double signal_hazard = 0;       // mu = n (1 + 2d)
    double reinforcement_rate = 0;  // 2 d n
    double p_part_star = 0;
    double p_site_star = 0;
    double failure_product = 0;
    double offspring_bound = 0;
    bool subcritical = false;  // offspring_bound < 1
};

/// P(Exp(gamma) < Exp(2 d n)) = gamma / (gamma + 2 d n); 1 when gamma = inf.
/// Throws std::invalid_argument for gamma <= 0.
[[nodiscard]] double p_site_star(const BoundParameters& params);

/// P(Gamma(n, lambda) < Exp(mu)) = E[exp(-mu G)] = (lambda / (lambda + mu))^n.
[[nodiscard]] double p_part_star(const BoundParameters& params);

[[nodiscard]] BoundResult offspring_bound(const BoundParameters& params);

struct LambdaStar {
    double lambda_star = 0;
    double bound_at_star = 0;
    int iterations = 0;
};

/// Smallest lambda (to within tol) with offspring_bound < 1: doubling bracket from
/// lambda = 1, then at most 60 bisection steps. Throws std::invalid_argument for tol <= 0.
[[nodiscard]] LambdaStar subcritical_lambda(double gamma, int d, int k, unsigned m_bar, double tol);

struct OffspringEstimate {
    double mean = 0;
    double std_error = 0;
    double ci_low = 0;
    double ci_high = 0;
    std::uint64_t trials = 0;
    std::uint64_t truncated_trials = 0;  // hit the per-trial event cap; counts are lower bounds
};

/// Monte Carlo mean of the number of infectious signals emitted by one local process
/// of the maximal-load epidemic, simulated directly (no resets on emission). Trial i
/// draws from derive_seed(seed, {i}); the result does not depend on `threads`.
[[nodiscard]] OffspringEstimate maximal_load_offspring_mc(const BoundParameters& params, std::uint64_t trials,
                                                          std::uint64_t seed, unsigned threads = 1,
                                                          std::uint64_t max_events_per_trial = 100'000'000);

}  // namespace contagion
