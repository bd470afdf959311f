#include "contagion/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "contagion/parallel.hpp"

namespace contagion {

void CoupledConfig::validate() const {
    if (!(strict_rate > 0) || !(lax_rate < kInfinity) || strict_rate > lax_rate) {
        throw ConfigError("coupled rates must satisfy 0 < strict <= lax < inf");
    }
    if (check_interval < 1) throw ConfigError("check_interval must be >= 1");
    strict_config().validate();
    lax_config().validate();
}

EngineConfig CoupledConfig::strict_config() const {
    EngineConfig c = base;
    c.seed = shared_seed;
    (kind == PairKind::gamma_pair ? c.gamma : c.lambda) = strict_rate;
    return c;
}

EngineConfig CoupledConfig::lax_config() const {
    EngineConfig c = base;
    c.seed = shared_seed;
    (kind == PairKind::gamma_pair ? c.gamma : c.lambda) = lax_rate;
    return c;
}

DominationReport coupled_run(const CoupledConfig& config, const CoupledObserver& observer) {
    config.validate();
    const EngineConfig strict_cfg = config.strict_config();
    const EngineConfig lax_cfg = config.lax_config();
    // Same seed for both: identical particle placement.
    WorldState strict = init_world(strict_cfg);
    WorldState lax = init_world(lax_cfg);
    Rng rng(derive_seed(config.shared_seed, {0x636f75706c6564ULL}));

    const bool gamma_pair = config.kind == PairKind::gamma_pair;
    // Proposal rates, realized on the union of the two processes' infected sets.
    const double recovery_rate = gamma_pair ? config.base.lambda : config.lax_rate;
    const double clearance_rate =
        gamma_pair ? config.lax_rate : (config.base.contamination_enabled() ? config.base.gamma : 0.0);
    // Retention probability of a proposal in the strict process (rate strict/lax).
    const double retain = config.strict_rate / config.lax_rate;

    const std::size_t n_particles = strict.particle_count();
    IndexSet union_infected(n_particles);
    IndexSet union_contaminated(strict.lattice().site_count());
    auto sync_particle = [&](std::uint32_t p) {
        if (strict.particles()[p].infected || lax.particles()[p].infected) {
            union_infected.insert(p);
        } else {
            union_infected.erase(p);
        }
    };
    auto sync_site = [&](std::uint32_t s) {
        if (strict.contaminated(s) || lax.contaminated(s)) {
            union_contaminated.insert(s);
        } else {
            union_contaminated.erase(s);
        }
    };
    for (const WorldState* w : {&strict, &lax}) {
        for (std::uint32_t p : w->infected_set().members()) sync_particle(p);
        for (std::uint32_t s : w->contaminated_set().members()) sync_site(s);
    }

    auto dominated = [&] {
        for (std::uint32_t p : lax.infected_set().members()) {
            if (!strict.infected_set().contains(p)) return false;
        }
        for (std::uint32_t s : lax.contaminated_set().members()) {
            if (!strict.contaminated_set().contains(s)) return false;
        }
        return true;
    };

    DominationReport report;
    if (strict.extinct()) report.strict_extinction_time = 0.0;
    if (lax.extinct()) report.lax_extinction_time = 0.0;
    if (!dominated()) {
        report.domination_held = false;
        report.first_violation = 0;
    }

    std::uint64_t events = 0;
    const auto jump_rate = static_cast<double>(n_particles);
    while (events < config.base.max_events && !(strict.extinct() && lax.extinct())) {
        const double rec_total = recovery_rate * static_cast<double>(union_infected.size());
        const double clr_total = clearance_rate * static_cast<double>(union_contaminated.size());
        const double total = jump_rate + rec_total + clr_total;
        if (!(total > 0)) break;

        const double dt = rng.exponential(total);
        strict.advance_time(dt);
        lax.advance_time(dt);
        const double u = rng.uniform() * total;

        if (u < jump_rate || (union_infected.empty() && union_contaminated.empty())) {
            const auto p = static_cast<std::uint32_t>(rng.below(n_particles));
            const std::size_t move = static_cast<std::size_t>(rng.below(strict.move_count(p)));
            const EventRecord a = strict.apply_jump(p, move);
            const EventRecord b = lax.apply_jump(p, move);
            sync_particle(p);
            for (std::uint32_t q : a.newly_infected) sync_particle(q);
            for (std::uint32_t q : b.newly_infected) sync_particle(q);
            sync_site(a.to);
        } else if ((u < jump_rate + rec_total || union_contaminated.empty()) && !union_infected.empty()) {
            const std::uint32_t q = union_infected.sample(rng);
            const bool kept = rng.uniform() < retain;
            lax.apply_recovery(q);
            if (gamma_pair || kept) strict.apply_recovery(q);
            sync_particle(q);
        } else {
            const std::uint32_t s = union_contaminated.sample(rng);
            const bool kept = rng.uniform() < retain;
            lax.apply_clearance(s);
            if (!gamma_pair || kept) strict.apply_clearance(s);
            sync_site(s);
        }
        strict.count_event();
        lax.count_event();
        ++events;

        if (!report.strict_extinction_time && strict.extinct()) report.strict_extinction_time = strict.time();
        if (!report.lax_extinction_time && lax.extinct()) report.lax_extinction_time = lax.time();

        if (events % config.check_interval == 0) {
            ++report.events_checked;
            if (report.domination_held && !dominated()) {
                report.domination_held = false;
                report.first_violation = events;
            }
        }
        if (observer) observer(strict, lax);
    }

    auto survived = [&](const WorldState& w) {
        return w.infected_count() > 0 || (config.base.count_sites_as_survival && w.contaminated_count() > 0);
    };
    report.survived_strict = survived(strict);
    report.survived_lax = survived(lax);
    report.events_executed = events;
    report.final_time = strict.time();
    return report;
}

std::vector<SurvivalPoint> survival_curve(const EngineConfig& config, std::span<const double> time_grid,
                                          std::size_t replicas, unsigned threads, std::uint64_t* events) {
    if (replicas < 1) throw ConfigError("survival_curve needs at least one replica");
    std::vector<double> grid(time_grid.begin(), time_grid.end());
    std::sort(grid.begin(), grid.end());
    const double horizon = grid.empty() ? 0.0 : std::max(grid.back(), std::numeric_limits<double>::min());

    std::vector<std::optional<double>> extinction(replicas);
    std::vector<std::uint64_t> executed(replicas);
    parallel_for(replicas, threads, [&](std::size_t r) {
        EngineConfig cfg = config;
        cfg.seed = derive_seed(config.seed, {r});
        cfg.time_horizon = horizon;
        cfg.record_trajectory = false;
        const RunResult result = run(cfg);
        extinction[r] = result.extinction_time;
        executed[r] = result.events_executed;
    });
    if (events) *events = std::accumulate(executed.begin(), executed.end(), std::uint64_t{0});

    std::vector<SurvivalPoint> curve;
    curve.reserve(grid.size());
    for (double t : grid) {
        std::size_t present = 0;
        for (const auto& e : extinction) {
            if (!(e && *e <= t)) ++present;
        }
        curve.push_back({t, static_cast<double>(present) / static_cast<double>(replicas)});
    }
    return curve;
}

}  // namespace contagion
