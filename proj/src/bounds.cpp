#include "contagion/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "contagion/lattice.hpp"
#include "contagion/parallel.hpp"
#include "contagion/rng.hpp"

namespace contagion {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double load_of(const BoundParameters& p) {
    return static_cast<double>(p.m_bar) * static_cast<double>(l1_ball_size(p.d, p.k));
}

// (1 - p_part*) / p_part* = (1 + mu/lambda)^n - 1, evaluated without cancellation.
double particle_failure_mean(double load, double mu, double lambda) {
    return std::expm1(load * std::log1p(mu / lambda));
}

}  // namespace

void BoundParameters::validate() const {
    if (d < 1 || k < 1 || m_bar < 1) throw std::invalid_argument("bound parameters need d, k, m_bar >= 1");
    if (!(lambda > 0)) throw std::invalid_argument("lambda must be positive");
    if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
}

double p_site_star(const BoundParameters& params) {
    if (!(params.gamma > 0)) throw std::invalid_argument("p_site_star: gamma must be positive");
    if (params.gamma == kInf) return 1.0;
    const double rate = 2.0 * params.d * load_of(params);
    return params.gamma / (params.gamma + rate);
}

double p_part_star(const BoundParameters& params) {
    if (!(params.lambda > 0)) throw std::invalid_argument("p_part_star: lambda must be positive");
    const double n = load_of(params);
    const double mu = n * (1.0 + 2.0 * params.d);
    if (params.lambda == kInf) return 1.0;
    return std::exp(-n * std::log1p(mu / params.lambda));
}

BoundResult offspring_bound(const BoundParameters& params) {
    params.validate();
    BoundResult r;
    r.v_k = l1_ball_size(params.d, params.k);
    r.load = load_of(params);
    r.signal_hazard = r.load * (1.0 + 2.0 * params.d);
    r.reinforcement_rate = 2.0 * params.d * r.load;
    r.p_part_star = p_part_star(params);
    r.p_site_star = p_site_star(params);

    const double part_failures =
        params.lambda == kInf ? 0.0 : particle_failure_mean(r.load, r.signal_hazard, params.lambda);
    const double site_failures = params.gamma == kInf ? 0.0 : r.reinforcement_rate / params.gamma;
    r.failure_product = site_failures * part_failures;
    r.offspring_bound = (1.0 + site_failures) * part_failures;
    r.subcritical = r.offspring_bound < 1.0;
    return r;
}

LambdaStar subcritical_lambda(double gamma, int d, int k, unsigned m_bar, double tol) {
    if (!(tol > 0)) throw std::invalid_argument("subcritical_lambda: tol must be positive");
    BoundParameters params{d, k, m_bar, 1.0, gamma};
    params.validate();
    auto bound_at = [&](double lambda) {
        params.lambda = lambda;
        return offspring_bound(params).offspring_bound;
    };

    double hi = 1.0;
    while (bound_at(hi) >= 1.0) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw std::range_error("subcritical_lambda: no finite bracket");
    }
    // The bound diverges as lambda -> 0+, so lo = 0 is a valid lower end.
    double lo = hi > 1.0 ? hi / 2.0 : 0.0;

    LambdaStar out;
    while (hi - lo > tol && out.iterations < 60) {
        const double mid = 0.5 * (lo + hi);
        (bound_at(mid) < 1.0 ? hi : lo) = mid;
        ++out.iterations;
    }
    out.lambda_star = hi;
    out.bound_at_star = bound_at(hi);
    return out;
}

namespace {

struct LocalTrial {
    std::uint64_t signals = 0;
    bool truncated = false;
};

// One local process at a site holding `load` particles, all infected at start.
LocalTrial local_process(const BoundParameters& p, std::uint64_t load, double reinforcement, Rng& rng,
                         std::uint64_t max_events) {
    const bool sites = p.gamma < kInf;
    std::uint64_t infected = load;
    bool site = sites;
    LocalTrial out;
    for (std::uint64_t ev = 0; infected > 0 || site; ++ev) {
        if (ev == max_events) {
            out.truncated = true;
            break;
        }
        const auto i = static_cast<double>(infected);
        const double signal = i;
        const double recover = p.lambda * i;
        const double clear = site ? p.gamma : 0.0;
        const double u = rng.uniform() * (signal + reinforcement + recover + clear);
        if (u < signal) {
            ++out.signals;
        } else if (u < signal + reinforcement) {
            infected = load;
            site = sites;
        } else if (u < signal + reinforcement + recover || clear == 0.0) {
            if (infected > 0) --infected;
        } else {
            site = false;
        }
    }
    return out;
}

}  // namespace

OffspringEstimate maximal_load_offspring_mc(const BoundParameters& params, std::uint64_t trials, std::uint64_t seed,
                                            unsigned threads, std::uint64_t max_events_per_trial) {
    params.validate();
    if (trials < 1) throw std::invalid_argument("maximal_load_offspring_mc: trials must be >= 1");
    const auto load = static_cast<std::uint64_t>(params.m_bar) * l1_ball_size(params.d, params.k);
    const double reinforcement = 2.0 * params.d * static_cast<double>(load);

    std::vector<LocalTrial> results(trials);
    parallel_for(trials, threads, [&](std::size_t i) {
        Rng rng(derive_seed(seed, {i}));
        results[i] = local_process(params, load, reinforcement, rng, max_events_per_trial);
    });

    OffspringEstimate est;
    est.trials = trials;
    double sum = 0, sum_sq = 0;
    for (const LocalTrial& t : results) {
        const auto x = static_cast<double>(t.signals);
        sum += x;
        sum_sq += x * x;
        if (t.truncated) ++est.truncated_trials;
    }
    const auto n = static_cast<double>(trials);
    est.mean = sum / n;
    const double var = trials > 1 ? std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1)) : 0.0;
    est.std_error = std::sqrt(var / n);
    est.ci_low = est.mean - 1.96 * est.std_error;
    est.ci_high = est.mean + 1.96 * est.std_error;
    return est;
}

}  // namespace contagion
