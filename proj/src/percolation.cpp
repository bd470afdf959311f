#include "contagion/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "contagion/lattice.hpp"
#include "contagion/parallel.hpp"

namespace contagion {

void RegionTrialConfig::validate() const {
    if (k < 1) throw ConfigError("region radius k must be >= 1");
    if (!(lambda > 0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive and finite");
    if (!(gamma > 0) || !std::isfinite(gamma)) throw ConfigError("region trials need a finite positive gamma");
    if (max_sim_time < 0) throw ConfigError("max_sim_time must be nonnegative");
}

RegionTrialOutcome region_open_trial(const RegionTrialConfig& config, Rng& rng) {
    const int k = config.k;
    const double clearance_time = rng.exponential(config.gamma);
    const double limit = config.safeguard_time();

    int x = 0, y = 0;
    switch (config.start) {
        case StartPolicy::at_center:
            break;
        case StartPolicy::at_farthest_corner:
            x = y = k;
            break;
        case StartPolicy::uniform:
            x = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * k + 1))) - k;
            y = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * k + 1))) - k;
            break;
    }

    auto at_activating = [&] { return x == -k && y == -k; };
    // Bit per non-activating corner: (k,-k), (-k,k), (k,k).
    auto corner_bit = [&]() -> unsigned {
        if (std::abs(x) != k || std::abs(y) != k) return 0;
        if (x == k && y == -k) return 1;
        if (x == -k && y == k) return 2;
        if (x == k && y == k) return 4;
        return 0;
    };

    const bool single = config.coverage == CornerCoverage::single_excursion;
    // A particle sitting on the corner when it is contaminated is infected with it.
    bool infected = at_activating();
    bool on_excursion = false;
    unsigned covered = 0;

    RegionTrialOutcome out;
    double t = 0;
    for (;;) {
        const double rate = infected ? 1.0 + config.lambda : 1.0;
        t += rng.exponential(rate);
        if (t >= clearance_time) {
            out.time = clearance_time;
            return out;
        }
        if (t >= limit) {
            out.safeguard_tripped = true;
            out.time = limit;
            return out;
        }
        if (infected && rng.uniform() * rate >= 1.0) {
            infected = false;
            on_excursion = false;
            if (single) covered = 0;
            continue;
        }

        int dirs[4][2];
        int count = 0;
        static constexpr int steps[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (const auto& s : steps) {
            if (std::abs(x + s[0]) <= k && std::abs(y + s[1]) <= k) {
                dirs[count][0] = s[0];
                dirs[count][1] = s[1];
                ++count;
            }
        }
        const auto pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(count)));
        if (single && infected && at_activating()) {
            on_excursion = true;
            covered = 0;
        }
        x += dirs[pick][0];
        y += dirs[pick][1];
        ++out.jumps;

        if (at_activating()) {
            infected = true;
            on_excursion = false;
        } else if (infected && (!single || on_excursion)) {
            covered |= corner_bit();
            if (covered == 7u) {
                out.success = true;
                out.time = t;
                return out;
            }
        }
    }
}

OpennessEstimate summarize_openness(std::uint64_t successes, std::uint64_t trials, std::uint64_t safeguard_trips,
                                    double p_m_ge_1) {
    if (trials == 0) throw ConfigError("openness estimate needs trials > 0");
    if (!(p_m_ge_1 >= 0 && p_m_ge_1 <= 1)) throw ConfigError("P(M >= 1) must lie in [0,1]");
    OpennessEstimate e;
    e.trials = trials;
    e.successes = successes;
    e.safeguard_trips = safeguard_trips;
    e.p_m_ge_1 = p_m_ge_1;
    e.p_tilde = static_cast<double>(successes) / static_cast<double>(trials);
    e.ci_halfwidth = 1.96 * std::sqrt(e.p_tilde * (1.0 - e.p_tilde) / static_cast<double>(trials));
    e.p_open = p_m_ge_1 * e.p_tilde;
    return e;
}

OpennessEstimate estimate_openness(const RegionTrialConfig& config, std::uint64_t trials, double p_m_ge_1,
                                   unsigned threads) {
    config.validate();
    if (trials < 100) throw ConfigError("estimate_openness needs at least 100 trials");
    std::vector<RegionTrialOutcome> outcomes(trials);
    parallel_for(trials, threads, [&](std::size_t i) {
        Rng rng(derive_seed(config.seed, {i}));
        outcomes[i] = region_open_trial(config, rng);
    });
    std::uint64_t wins = 0, trips = 0, jumps = 0;
    for (const auto& o : outcomes) {
        wins += o.success ? 1 : 0;
        trips += o.safeguard_tripped ? 1 : 0;
        jumps += o.jumps;
    }
    OpennessEstimate e = summarize_openness(wins, trials, trips, p_m_ge_1);
    e.jumps = jumps;
    return e;
}

OpennessEstimate estimate_openness(const std::function<bool(std::uint64_t)>& trial, std::uint64_t trials,
                                   double p_m_ge_1) {
    if (trials < 100) throw ConfigError("estimate_openness needs at least 100 trials");
    std::uint64_t wins = 0;
    for (std::uint64_t i = 0; i < trials; ++i) wins += trial(i) ? 1 : 0;
    return summarize_openness(wins, trials, 0, p_m_ge_1);
}

// ---------------------------------------------------------------------------
// Site percolation

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0u); }

    std::uint32_t find(std::uint32_t x) noexcept {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::uint32_t a, std::uint32_t b) noexcept {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> size_;
};

// Calls fn(j) for each in-box neighbor j of site i that precedes or follows it.
template <typename Fn>
void for_each_neighbor(int n, std::uint32_t i, Adjacency adjacency, Fn&& fn) {
    const int x = static_cast<int>(i) % n;
    const int y = static_cast<int>(i) / n;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (adjacency == Adjacency::four && dx != 0 && dy != 0) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= n || ny >= n) continue;
            fn(static_cast<std::uint32_t>(ny * n + nx));
        }
    }
}

void require_grid(int n) {
    if (n < 2) throw ConfigError("percolation grid side must be >= 2");
    if (n > 46340) throw ConfigError("percolation grid side too large");
}

}  // namespace

std::array<std::uint32_t, 2> origin_sites(int n) {
    const int c = n / 2;
    return {static_cast<std::uint32_t>(c * n + c), static_cast<std::uint32_t>((c - 1) * n + c)};
}

std::vector<std::uint32_t> label_clusters(int n, std::span<const std::uint8_t> open, Adjacency adjacency) {
    require_grid(n);
    const auto cells = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    if (open.size() != cells) throw std::invalid_argument("label_clusters: mask size mismatch");
    DisjointSets ds(cells);
    for (std::uint32_t i = 0; i < cells; ++i) {
        if (!open[i]) continue;
        for_each_neighbor(n, i, adjacency, [&](std::uint32_t j) {
            if (open[j]) ds.unite(i, j);
        });
    }
    constexpr auto none = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> root_label(cells, none), labels(cells, none);
    for (std::uint32_t i = 0; i < cells; ++i) {
        if (!open[i]) continue;
        const std::uint32_t r = ds.find(i);
        if (root_label[r] == none) root_label[r] = i;  // first visit is the minimum index
        labels[i] = root_label[r];
    }
    return labels;
}

PercGridResult percolate_uniforms(int n, double p, Adjacency adjacency, std::span<const double> uniforms) {
    require_grid(n);
    if (!(p >= 0 && p <= 1)) throw ConfigError("percolation probability must lie in [0,1]");
    const auto cells = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    if (uniforms.size() != cells) throw std::invalid_argument("percolate: uniforms size mismatch");

    std::vector<std::uint8_t> open(cells);
    std::uint64_t open_count = 0;
    for (std::size_t i = 0; i < cells; ++i) {
        open[i] = uniforms[i] < p ? 1 : 0;
        open_count += open[i];
    }
    DisjointSets ds(cells);
    for (std::uint32_t i = 0; i < cells; ++i) {
        if (!open[i]) continue;
        for_each_neighbor(n, i, adjacency, [&](std::uint32_t j) {
            if (j > i && open[j]) ds.unite(i, j);
        });
    }

    PercGridResult r;
    r.n = n;
    r.adjacency = adjacency;
    r.p = p;
    r.open_sites = open_count;

    // Bit 1: the cluster touches the left column; bit 2: the right column.
    std::vector<std::uint8_t> sides(cells, 0);
    for (int y = 0; y < n; ++y) {
        const auto l = static_cast<std::uint32_t>(y * n);
        const auto rt = static_cast<std::uint32_t>(y * n + n - 1);
        if (open[l]) sides[ds.find(l)] |= 1;
        if (open[rt]) sides[ds.find(rt)] |= 2;
    }
    r.spanning = std::any_of(sides.begin(), sides.end(), [](std::uint8_t s) { return s == 3; });

    constexpr auto none = std::numeric_limits<std::uint32_t>::max();
    std::array<std::uint32_t, 2> roots{none, none};
    const auto origins = origin_sites(n);
    for (std::size_t a = 0; a < 2; ++a) {
        if (open[origins[a]]) roots[a] = ds.find(origins[a]);
    }
    if (roots[1] == roots[0]) roots[1] = none;
    for (std::uint32_t i = 0; i < cells; ++i) {
        if (!open[i]) continue;
        const std::uint32_t r_i = ds.find(i);
        if (r_i == roots[0] || r_i == roots[1]) ++r.cluster_size_at_origin;
    }
    return r;
}

PercGridResult percolate(int n, double p, Adjacency adjacency, Rng& rng) {
    require_grid(n);
    std::vector<double> u(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (double& v : u) v = rng.uniform();
    return percolate_uniforms(n, p, adjacency, u);
}

double spanning_threshold(int n, Adjacency adjacency, Rng& rng) {
    require_grid(n);
    const auto cells = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    std::vector<double> u(cells);
    for (double& v : u) v = rng.uniform();
    std::vector<std::uint32_t> order(cells);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return u[a] < u[b]; });

    const auto left = static_cast<std::uint32_t>(cells);
    const auto right = static_cast<std::uint32_t>(cells + 1);
    DisjointSets ds(cells + 2);
    std::vector<std::uint8_t> open(cells, 0);
    for (std::uint32_t i : order) {
        open[i] = 1;
        const int x = static_cast<int>(i) % n;
        if (x == 0) ds.unite(i, left);
        if (x == n - 1) ds.unite(i, right);
        for_each_neighbor(n, i, adjacency, [&](std::uint32_t j) {
            if (open[j]) ds.unite(i, j);
        });
        // Open at p means u < p, so this realization spans for every p above u[i].
        if (ds.find(left) == ds.find(right)) return u[i];
    }
    return 1.0;
}

ThresholdEstimate estimate_threshold(int n, Adjacency adjacency, std::uint64_t realizations, std::uint64_t seed,
                                     unsigned threads) {
    if (realizations < 1) throw ConfigError("estimate_threshold needs at least one realization");
    std::vector<double> thresholds(realizations);
    parallel_for(realizations, threads, [&](std::size_t r) {
        Rng rng(derive_seed(seed, {r}));
        thresholds[r] = spanning_threshold(n, adjacency, rng);
    });
    std::sort(thresholds.begin(), thresholds.end());
    const auto count = static_cast<double>(realizations);
    auto at = [&](double rank) {
        const auto idx = static_cast<std::size_t>(std::clamp(rank, 0.0, count - 1.0));
        return thresholds[idx];
    };
    ThresholdEstimate est;
    est.realizations = realizations;
    const double mid = (count - 1.0) / 2.0;
    est.p_c = 0.5 * (at(std::floor(mid)) + at(std::ceil(mid)));
    // Distribution-free interval for the median: ranks n/2 -+ 1.96 sqrt(n)/2.
    const double spread = 1.96 * std::sqrt(count) / 2.0;
    est.ci_halfwidth = std::max(est.p_c - at(std::floor(mid - spread)), at(std::ceil(mid + spread)) - est.p_c);
    return est;
}

std::vector<SpanningPoint> spanning_sweep(int n, Adjacency adjacency, std::span<const double> p_values,
                                          std::uint64_t realizations, std::uint64_t seed, unsigned threads) {
    require_grid(n);
    if (realizations < 1) throw ConfigError("spanning_sweep needs at least one realization");
    const auto cells = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    std::vector<std::vector<std::uint8_t>> spans(realizations, std::vector<std::uint8_t>(p_values.size()));
    parallel_for(realizations, threads, [&](std::size_t r) {
        Rng rng(derive_seed(seed, {r}));
        std::vector<double> u(cells);
        for (double& v : u) v = rng.uniform();
        for (std::size_t j = 0; j < p_values.size(); ++j) {
            spans[r][j] = percolate_uniforms(n, p_values[j], adjacency, u).spanning ? 1 : 0;
        }
    });
    std::vector<SpanningPoint> out;
    for (std::size_t j = 0; j < p_values.size(); ++j) {
        std::uint64_t hits = 0;
        for (const auto& row : spans) hits += row[j];
        out.push_back({p_values[j], static_cast<double>(hits) / static_cast<double>(realizations)});
    }
    return out;
}

double crossing_point(std::span<const SpanningPoint> sweep) {
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        const SpanningPoint& a = sweep[i - 1];
        const SpanningPoint& b = sweep[i];
        if (a.spanning_fraction < 0.5 && b.spanning_fraction >= 0.5) {
            const double w = (0.5 - a.spanning_fraction) / (b.spanning_fraction - a.spanning_fraction);
            return a.p + w * (b.p - a.p);
        }
    }
    if (!sweep.empty() && sweep.front().spanning_fraction == 0.5) return sweep.front().p;
    return std::numeric_limits<double>::quiet_NaN();
}

SupercriticalityVerdict judge(const OpennessEstimate& openness, const ThresholdEstimate& threshold) {
    SupercriticalityVerdict v;
    v.openness = openness;
    v.threshold = threshold;
    v.p_open_ci = openness.p_m_ge_1 * openness.ci_halfwidth;
    const double lower = openness.p_open - v.p_open_ci;
    const double upper = openness.p_open + v.p_open_ci;
    v.margin = lower - (threshold.p_c + threshold.ci_halfwidth);
    if (lower > threshold.p_c + threshold.ci_halfwidth) {
        v.verdict = Verdict::supercritical_evidence;
    } else if (upper < threshold.p_c - threshold.ci_halfwidth) {
        v.verdict = Verdict::subcritical_evidence;
    } else {
        v.verdict = Verdict::inconclusive;
    }
    return v;
}

SupercriticalityVerdict supercriticality_check(const RegionTrialConfig& region, double p_m_ge_1, std::uint64_t trials,
                                               int n, Adjacency adjacency, std::uint64_t realizations,
                                               unsigned threads) {
    const OpennessEstimate openness = estimate_openness(region, trials, p_m_ge_1, threads);
    const ThresholdEstimate threshold = estimate_threshold(
        n, adjacency, realizations, derive_seed(region.seed, {0x70657263ULL, static_cast<std::uint64_t>(adjacency)}),
        threads);
    return judge(openness, threshold);
}

std::string_view to_string(Adjacency a) noexcept { return a == Adjacency::four ? "four" : "eight"; }

std::string_view to_string(StartPolicy s) noexcept {
    switch (s) {
        case StartPolicy::at_center: return "at_center";
        case StartPolicy::at_farthest_corner: return "at_farthest_corner";
        case StartPolicy::uniform: return "uniform";
    }
    return "?";
}

std::string_view to_string(CornerCoverage c) noexcept {
    return c == CornerCoverage::cumulative ? "cumulative" : "single_excursion";
}

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::supercritical_evidence: return "supercritical-evidence";
        case Verdict::inconclusive: return "inconclusive";
        case Verdict::subcritical_evidence: return "subcritical-evidence";
    }
    return "?";
}

Adjacency parse_adjacency(std::string_view text) {
    if (text == "four" || text == "4") return Adjacency::four;
    if (text == "eight" || text == "8") return Adjacency::eight;
    throw ConfigError("unknown adjacency '" + std::string(text) + "'");
}

StartPolicy parse_start_policy(std::string_view text) {
    if (text == "at_center" || text == "center") return StartPolicy::at_center;
    if (text == "at_farthest_corner" || text == "farthest") return StartPolicy::at_farthest_corner;
    if (text == "uniform") return StartPolicy::uniform;
    throw ConfigError("unknown start policy '" + std::string(text) + "'");
}

CornerCoverage parse_coverage(std::string_view text) {
    if (text == "cumulative") return CornerCoverage::cumulative;
    if (text == "single_excursion" || text == "single-excursion") return CornerCoverage::single_excursion;
    throw ConfigError("unknown corner coverage '" + std::string(text) + "'");
}

}  // namespace contagion
