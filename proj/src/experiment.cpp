#include "contagion/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "contagion/parallel.hpp"

namespace contagion {

namespace {

// Grid values are snapped to 1e-9 so that 1.5 - 64 * 0.01 prints as 0.86.
double snap(double x) { return std::round(x * 1e9) / 1e9; }

}  // namespace

void SearchConfig::validate() const {
    if (sims_per_block < 1) throw ConfigError("S must be >= 1");
    if (max_events < 1) throw ConfigError("K must be >= 1");
    if (!(lambda_step > 0)) throw ConfigError("lambda_step must be positive");
    if (!(lambda_init > lambda_step)) throw ConfigError("lambda_init must exceed lambda_step");
    if (refine_iterations < 0) throw ConfigError("refine_iterations must be >= 0");
    if (!(gamma_init > 0) || !std::isfinite(gamma_init)) throw ConfigError("gamma_init must be positive and finite");
    if (!(gamma_factor > 0 && gamma_factor < 1)) throw ConfigError("gamma_factor must lie in (0,1)");
    if (!(gamma_floor > 0)) throw ConfigError("gamma_floor must be positive");
    for (double l : lambda_grid) {
        if (!(l > 0) || !std::isfinite(l)) throw ConfigError("lambda grid values must be positive and finite");
    }
    replica_config(1.0, kInfinity, 0).validate();
}

EngineConfig SearchConfig::replica_config(double lambda, double gamma, std::uint64_t replica) const {
    EngineConfig c;
    c.lattice = TorusLattice(dim, side);
    c.k = k;
    c.norm = Norm::L1;
    c.lambda = lambda;
    c.gamma = gamma;
    c.load = load;
    c.mode = mode;
    c.max_events = max_events;
    c.seed = derive_seed(master_seed, {key_of(lambda), key_of(gamma), replica});
    return c;
}

TrialBlock survival_trial_block(double lambda, double gamma, const SearchConfig& search) {
    const unsigned batch = std::max(1u, search.threads);
    TrialBlock block;
    std::vector<RunResult> results;
    for (unsigned first = 0; first < search.sims_per_block; first += batch) {
        const unsigned count = std::min(batch, search.sims_per_block - first);
        results.assign(count, RunResult{});
        parallel_for(count, search.threads, [&](std::size_t i) {
            results[i] = run(search.replica_config(lambda, gamma, first + i));
        });
        for (const RunResult& r : results) {
            ++block.sims_used;
            block.events += r.events_executed;
            if (r.survived) {
                block.survived = true;
                return block;
            }
        }
    }
    return block;
}

LambdaSearch estimate_lambda_c_inf(const SearchConfig& search) {
    search.validate();
    LambdaSearch out;
    for (std::uint64_t i = 0;; ++i) {
        const double lambda = snap(search.lambda_init - static_cast<double>(i) * search.lambda_step);
        if (lambda < search.lambda_step * (1 - 1e-9)) break;
        const TrialBlock b = survival_trial_block(lambda, kInfinity, search);
        out.trace.push_back({lambda, b.survived, b.sims_used});
        out.events += b.events;
        if (b.survived) {
            out.resolved = true;
            out.lambda_c_inf_hat = lambda;
            break;
        }
    }
    if (!out.resolved || out.trace.size() < 2) return out;

    double lo = out.lambda_c_inf_hat;
    double hi = out.trace[out.trace.size() - 2].lambda;
    for (int it = 0; it < search.refine_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        const TrialBlock b = survival_trial_block(mid, kInfinity, search);
        out.trace.push_back({mid, b.survived, b.sims_used});
        out.events += b.events;
        if (b.survived) {
            lo = mid;
            out.lambda_c_inf_hat = mid;
        } else {
            hi = mid;
        }
    }
    return out;
}

PhaseBoundaryEstimate estimate_gamma_c(std::span<const double> lambda_grid, const SearchConfig& search,
                                       double lambda_c_inf_hat) {
    search.validate();
    PhaseBoundaryEstimate est;
    est.lambda_c_inf_hat = lambda_c_inf_hat;
    for (double lambda : lambda_grid) {
        if (!(lambda > 0) || !std::isfinite(lambda)) throw ConfigError("lambda grid values must be positive and finite");
        GammaPoint point;
        point.lambda = lambda;
        for (unsigned j = 0;; ++j) {
            const double gamma = search.gamma_init * std::pow(search.gamma_factor, static_cast<double>(j));
            if (gamma < search.gamma_floor) break;
            const TrialBlock b = survival_trial_block(lambda, gamma, search);
            point.gamma_c_hat = gamma;
            point.trials_used += b.sims_used;
            point.gamma_steps = j + 1;
            est.events += b.events;
            if (b.survived) {
                point.resolved = true;
                point.degenerate = j == 0;
                break;
            }
        }
        est.points.push_back(point);
    }
    return est;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double mean = (static_cast<double>(n) + 1.0) / 2.0;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace contagion
