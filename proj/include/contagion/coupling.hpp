#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "contagion/engine.hpp"

namespace contagion {

enum class PairKind : std::uint8_t { gamma_pair, lambda_pair };

/// Two processes that differ in one rate, driven by a single proposal stream.
/// For gamma_pair the strict process uses clearance rate `strict_rate` (gamma0) and the
/// lax process `lax_rate` (gamma1), both with base.lambda; for lambda_pair the rates are
/// recovery rates and both use base.gamma. Requires 0 < strict_rate <= lax_rate < inf.
struct CoupledConfig {
    EngineConfig base;
    PairKind kind = PairKind::gamma_pair;
    double strict_rate = 0.5;
    double lax_rate = 1.0;
    std::uint64_t shared_seed = 0;
    std::uint64_t check_interval = 1;  // events between full domination checks

    void validate() const;
    [[nodiscard]] EngineConfig strict_config() const;
    [[nodiscard]] EngineConfig lax_config() const;
};

struct DominationReport {
    std::uint64_t events_checked = 0;
    bool domination_held = true;
    std::optional<std::uint64_t> first_violation;
    bool survived_strict = false;
    bool survived_lax = false;
    std::uint64_t events_executed = 0;
    double final_time = 0;
    std::optional<double> strict_extinction_time;
    std::optional<double> lax_extinction_time;
};

/// Called after every coupled event with (strict, lax).
using CoupledObserver = std::function<void(const WorldState&, const WorldState&)>;

/// Runs the thinning coupling for K = base.max_events events or until both processes
/// are extinct, checking lax-infected ⊆ strict-infected and lax-contaminated ⊆
/// strict-contaminated. Violations are recorded, not thrown.
[[nodiscard]] DominationReport coupled_run(const CoupledConfig& config, const CoupledObserver& observer = {});

struct SurvivalPoint {
    double t;
    double survival_fraction;
};

/// Fraction of replicas with infection (particles or sites) present at each time in
/// `time_grid`. Replica r is seeded with derive_seed(config.seed, {r}). A replica
/// that hits max_events before the last grid time counts as present from then on,
/// which keeps every per-replica indicator non-increasing in t.
[[nodiscard]] std::vector<SurvivalPoint> survival_curve(const EngineConfig& config, std::span<const double> time_grid,
                                                        std::size_t replicas, unsigned threads = 1,
                                                        std::uint64_t* events = nullptr);

}  // namespace contagion
