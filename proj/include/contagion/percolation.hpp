#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "contagion/rng.hpp"

namespace contagion {

enum class Adjacency : std::uint8_t { four, eight };

enum class StartPolicy : std::uint8_t { at_center, at_farthest_corner, uniform };

/// How corner coverage is credited in a region trial.
///  - cumulative: every other corner is reached by the particle while it is infected,
///    at any time before the activating corner is cleared (the open-region condition).
///  - single_excursion: one excursion from the activating corner, without recovery and
///    without returning to it, covers all other corners.
enum class CornerCoverage : std::uint8_t { cumulative, single_excursion };

/// One particle in an L-infinity square region of radius k, with the activating corner
/// at offset (-k, -k) contaminated at time 0.
struct RegionTrialConfig {
    int k = 1;
    double lambda = 1.0;
    double gamma = 0.01;
    StartPolicy start = StartPolicy::at_farthest_corner;
    CornerCoverage coverage = CornerCoverage::cumulative;
    double max_sim_time = 0;  // 0 selects 1e4 / gamma
    std::uint64_t seed = 0;

    void validate() const;
    [[nodiscard]] double safeguard_time() const noexcept { return max_sim_time > 0 ? max_sim_time : 1e4 / gamma; }
};

struct RegionTrialOutcome {
    bool success = false;
    bool safeguard_tripped = false;
    std::uint64_t jumps = 0;
    double time = 0;  // success time, or the time the trial was abandoned
};

[[nodiscard]] RegionTrialOutcome region_open_trial(const RegionTrialConfig& config, Rng& rng);

struct OpennessEstimate {
    double p_tilde = 0;
    double ci_halfwidth = 0;
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;
    std::uint64_t safeguard_trips = 0;
    std::uint64_t jumps = 0;  // over all trials
    double p_m_ge_1 = 1;
    double p_open = 0;  // p_m_ge_1 * p_tilde
};

/// Builds the estimate from tallies; ci_halfwidth = 1.96 sqrt(p(1-p)/trials).
[[nodiscard]] OpennessEstimate summarize_openness(std::uint64_t successes, std::uint64_t trials,
                                                  std::uint64_t safeguard_trips, double p_m_ge_1);

/// Trial i runs on derive_seed(config.seed, {i}). Throws ConfigError if trials < 100.
[[nodiscard]] OpennessEstimate estimate_openness(const RegionTrialConfig& config, std::uint64_t trials,
                                                 double p_m_ge_1, unsigned threads = 1);

/// Same tally for an arbitrary trial function (trial index -> success).
[[nodiscard]] OpennessEstimate estimate_openness(const std::function<bool(std::uint64_t)>& trial,
                                                 std::uint64_t trials, double p_m_ge_1);

struct PercGridResult {
    int n = 0;
    Adjacency adjacency = Adjacency::four;
    double p = 0;
    bool spanning = false;  // an open cluster touches both the left and right columns
    std::uint64_t cluster_size_at_origin = 0;
    std::uint64_t open_sites = 0;
};

/// Site percolation on an n x n box (site (x, y) has index y * n + x). Site i is open
/// iff uniforms[i] < p, so realizations sharing uniforms are monotone in p.
[[nodiscard]] PercGridResult percolate_uniforms(int n, double p, Adjacency adjacency, std::span<const double> uniforms);

/// Draws n^2 uniforms from rng and calls percolate_uniforms.
[[nodiscard]] PercGridResult percolate(int n, double p, Adjacency adjacency, Rng& rng);

/// The two sites standing for the regions activated by the infected origin:
/// (n/2, n/2) and (n/2, n/2 - 1).
[[nodiscard]] std::array<std::uint32_t, 2> origin_sites(int n);

/// Union-find cluster labels: open sites get the smallest index in their cluster,
/// closed sites get UINT32_MAX.
[[nodiscard]] std::vector<std::uint32_t> label_clusters(int n, std::span<const std::uint8_t> open, Adjacency adjacency);

/// Smallest p at which this realization spans (sites added in order of their uniform).
[[nodiscard]] double spanning_threshold(int n, Adjacency adjacency, Rng& rng);

struct ThresholdEstimate {
    double p_c = 0;           // median of per-realization spanning thresholds
    double ci_halfwidth = 0;  // 95% order-statistic interval, half width
    std::uint64_t realizations = 0;
};

/// Realization r uses derive_seed(seed, {r}).
[[nodiscard]] ThresholdEstimate estimate_threshold(int n, Adjacency adjacency, std::uint64_t realizations,
                                                   std::uint64_t seed, unsigned threads = 1);

struct SpanningPoint {
    double p = 0;
    double spanning_fraction = 0;
};

/// Spanning fraction at each p; realization r draws one set of uniforms from
/// derive_seed(seed, {r}) and reuses it for every p.
[[nodiscard]] std::vector<SpanningPoint> spanning_sweep(int n, Adjacency adjacency, std::span<const double> p_values,
                                                        std::uint64_t realizations, std::uint64_t seed,
                                                        unsigned threads = 1);

/// Linear interpolation of the first crossing of 1/2; NaN if the sweep never crosses.
[[nodiscard]] double crossing_point(std::span<const SpanningPoint> sweep);

enum class Verdict : std::uint8_t { supercritical_evidence, inconclusive, subcritical_evidence };

struct SupercriticalityVerdict {
    OpennessEstimate openness;
    ThresholdEstimate threshold;
    double p_open_ci = 0;  // p_m_ge_1 * openness.ci_halfwidth
    double margin = 0;     // (p_open - p_open_ci) - (p_c + p_c_ci)
    Verdict verdict = Verdict::inconclusive;
};

/// Verdict from an openness estimate and a threshold estimate: supercritical evidence iff
/// p_open - p_open_ci > p_c + p_c_ci, subcritical evidence iff p_open + p_open_ci < p_c - p_c_ci.
[[nodiscard]] SupercriticalityVerdict judge(const OpennessEstimate& openness, const ThresholdEstimate& threshold);

/// Compares p_open = P(M >= 1) * p_tilde with a Monte Carlo estimate of the site
/// percolation threshold on the comparison grid.
[[nodiscard]] SupercriticalityVerdict supercriticality_check(const RegionTrialConfig& region, double p_m_ge_1,
                                                             std::uint64_t trials, int n, Adjacency adjacency,
                                                             std::uint64_t realizations, unsigned threads = 1);

[[nodiscard]] std::string_view to_string(Adjacency a) noexcept;
[[nodiscard]] std::string_view to_string(StartPolicy s) noexcept;
[[nodiscard]] std::string_view to_string(CornerCoverage c) noexcept;
[[nodiscard]] std::string_view to_string(Verdict v) noexcept;
[[nodiscard]] Adjacency parse_adjacency(std::string_view text);
[[nodiscard]] StartPolicy parse_start_policy(std::string_view text);
[[nodiscard]] CornerCoverage parse_coverage(std::string_view text);

}  // namespace contagion
