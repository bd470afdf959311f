#include "contagion/engine.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace contagion {

namespace {

EventRecord make_record(EventKind kind, std::uint32_t entity, std::uint32_t from, std::uint32_t to) {
    EventRecord rec;
    rec.kind = kind;
    rec.entity = entity;
    rec.from = from;
    rec.to = to;
    return rec;
}

template <typename T>
T parse_number(std::string_view text, const char* what) {
    T value{};
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) throw ConfigError(std::string("cannot parse ") + what + ": '" + std::string(text) + "'");
    return value;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// LoadDistribution

LoadDistribution::LoadDistribution(std::vector<Atom> pmf) : pmf_(std::move(pmf)) {
    if (pmf_.empty()) throw ConfigError("load distribution has empty support");
    double total = 0;
    for (const Atom& a : pmf_) {
        if (!(a.probability >= 0.0 && a.probability <= 1.0)) throw ConfigError("load probabilities must lie in [0,1]");
        total += a.probability;
        if (a.probability > 0) max_value_ = std::max(max_value_, a.value);
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("load probabilities must sum to 1");
}

LoadDistribution LoadDistribution::parse(std::string_view text) {
    text = trim(text);
    if (text.find(':') == std::string_view::npos) return point_mass(parse_number<unsigned>(text, "load value"));
    std::vector<Atom> atoms;
    while (!text.empty()) {
        const auto comma = text.find(',');
        std::string_view item = trim(text.substr(0, comma));
        text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) throw ConfigError("load atom must be value:probability");
        atoms.push_back({parse_number<unsigned>(trim(item.substr(0, colon)), "load value"),
                         parse_number<double>(trim(item.substr(colon + 1)), "load probability")});
    }
    return LoadDistribution(std::move(atoms));
}

std::string LoadDistribution::to_string() const {
    if (pmf_.size() == 1) return std::to_string(pmf_.front().value);
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < pmf_.size(); ++i) {
        if (i) out << ',';
        out << pmf_[i].value << ':' << pmf_[i].probability;
    }
    return out.str();
}

unsigned LoadDistribution::sample(Rng& rng) const {
    if (pmf_.size() == 1) return pmf_.front().value;
    const double u = rng.uniform();
    double acc = 0;
    for (const Atom& a : pmf_) {
        acc += a.probability;
        if (u < acc) return a.value;
    }
    // Rounding left a sliver above the last partial sum.
    for (auto it = pmf_.rbegin(); it != pmf_.rend(); ++it) {
        if (it->probability > 0) return it->value;
    }
    return pmf_.back().value;
}

double LoadDistribution::probability_at_least(unsigned m) const noexcept {
    double p = 0;
    for (const Atom& a : pmf_) {
        if (a.value >= m) p += a.probability;
    }
    return std::min(p, 1.0);
}

// ---------------------------------------------------------------------------
// EngineConfig

void EngineConfig::validate() const {
    lattice.require_radius(k);
    if (!(lambda > 0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive and finite");
    if (!(gamma > 0)) throw ConfigError("gamma must be positive (or inf)");
    if (max_events < 1) throw ConfigError("max_events must be >= 1");
    if (trajectory_points < 2) throw ConfigError("trajectory_points must be >= 2");
    if (!(time_horizon > 0)) throw ConfigError("time_horizon must be positive");
}

// ---------------------------------------------------------------------------
// WorldState

WorldState::WorldState(const EngineConfig& config)
    : lattice_(config.lattice),
      geometry_(config.lattice.dim(), config.k, config.norm),
      mode_(config.mode),
      contamination_enabled_(config.contamination_enabled()),
      occupants_(config.lattice.site_count()),
      infected_here_(config.lattice.site_count(), 0),
      contaminated_(config.lattice.site_count(), 0),
      contaminated_set_(config.lattice.site_count()),
      rng_(config.seed) {}

void WorldState::infect(std::uint32_t particle) {
    Particle& p = particles_[particle];
    if (p.infected) return;
    p.infected = true;
    ++infected_here_[p.pos];
    infected_.insert(particle);
    scratch_.push_back(particle);
}

void WorldState::contaminate(std::uint32_t site) {
    contaminated_[site] = 1;
    contaminated_set_.insert(site);
}

void WorldState::relocate(std::uint32_t particle, std::uint32_t to) {
    Particle& p = particles_[particle];
    auto& here = occupants_[p.pos];
    const std::uint32_t slot = occupant_slot_[particle];
    const std::uint32_t last = here.back();
    here[slot] = last;
    occupant_slot_[last] = slot;
    here.pop_back();
    if (p.infected) --infected_here_[p.pos];

    p.pos = to;
    occupant_slot_[particle] = static_cast<std::uint32_t>(occupants_[to].size());
    occupants_[to].push_back(particle);
    if (p.infected) ++infected_here_[to];
}

EventRecord WorldState::apply_jump(std::uint32_t particle, std::size_t move_index) {
    scratch_.clear();
    Particle& p = particles_[particle];
    const RegionGeometry::Move move = geometry_.moves(p.offset)[move_index];
    const std::uint32_t from = p.pos;
    const std::uint32_t to = lattice_.neighbor(from, move.dir);

    EventRecord rec = make_record(EventKind::jump, particle, from, to);
    // Infected-particle presence at the destination is judged before the jumper arrives.
    const bool infected_present = infected_here_[to] > 0;
    relocate(particle, to);
    p.offset = move.target;

    if (p.infected) {
        if (contamination_enabled_ && !contaminated_[to]) {
            contaminate(to);
            rec.site_contaminated = true;
        }
        if (mode_ == TransmissionMode::standard) {
            for (std::uint32_t other : occupants_[to]) infect(other);
        }
    } else if (contaminated_[to] || (mode_ == TransmissionMode::standard && infected_present)) {
        infect(particle);
    }
    rec.newly_infected = scratch_;
    return rec;
}

EventRecord WorldState::apply_recovery(std::uint32_t particle) {
    scratch_.clear();
    EventRecord rec = make_record(EventKind::recovery, particle, 0, 0);
    Particle& p = particles_[particle];
    rec.from = rec.to = p.pos;
    if (p.infected) {
        p.infected = false;
        --infected_here_[p.pos];
        infected_.erase(particle);
        rec.changed = true;
    }
    return rec;
}

EventRecord WorldState::apply_clearance(std::uint32_t site) {
    scratch_.clear();
    EventRecord rec = make_record(EventKind::clearance, site, site, site);
    if (contaminated_[site]) {
        contaminated_[site] = 0;
        contaminated_set_.erase(site);
        rec.changed = true;
    }
    return rec;
}

WorldState init_world(const EngineConfig& config) {
    config.validate();
    WorldState world(config);
    const std::size_t sites = config.lattice.site_count();
    for (std::size_t site = 0; site < sites; ++site) {
        const unsigned m = config.load.sample(world.rng_);
        for (unsigned j = 0; j < m; ++j) {
            const auto id = static_cast<std::uint32_t>(world.particles_.size());
            world.particles_.push_back(Particle{static_cast<std::uint32_t>(site), static_cast<std::uint32_t>(site),
                                                world.geometry_.center(), false});
            world.occupant_slot_.push_back(static_cast<std::uint32_t>(world.occupants_[site].size()));
            world.occupants_[site].push_back(id);
        }
    }
    world.infected_ = IndexSet(world.particles_.size());

    const auto origin = static_cast<std::uint32_t>(config.lattice.center_index());
    if (config.contamination_enabled() && config.infect_origin_site) world.contaminate(origin);
    for (std::uint32_t id : world.occupants_[origin]) world.infect(id);
    world.scratch_.clear();
    return world;
}

// ---------------------------------------------------------------------------
// Dynamics

Rates total_rates(const WorldState& world, const EngineConfig& config) {
    Rates r;
    r.jump = static_cast<double>(world.particle_count());
    r.recovery = config.lambda * static_cast<double>(world.infected_count());
    r.clearance = config.contamination_enabled() ? config.gamma * static_cast<double>(world.contaminated_count()) : 0.0;
    return r;
}

double draw_holding_time(WorldState& world, const EngineConfig& config) {
    return world.rng().exponential(total_rates(world, config).total());
}

EventRecord step(WorldState& world, const EngineConfig& config) {
    const Rates rates = total_rates(world, config);
    const double total = rates.total();
    if (!(total > 0)) throw std::logic_error("step: no event can occur (empty world)");

    Rng& rng = world.rng();
    world.advance_time(rng.exponential(total));
    const double u = rng.uniform() * total;

    EventRecord rec;
    if (u < rates.jump || world.extinct()) {
        const auto p = static_cast<std::uint32_t>(rng.below(world.particle_count()));
        rec = world.apply_jump(p, static_cast<std::size_t>(rng.below(world.move_count(p))));
    } else if ((u < rates.jump + rates.recovery || rates.clearance == 0) && world.infected_count() > 0) {
        rec = world.apply_recovery(world.infected_set().sample(rng));
    } else if (world.contaminated_count() > 0) {
        rec = world.apply_clearance(world.contaminated_set().sample(rng));
    } else {
        rec = world.apply_recovery(world.infected_set().sample(rng));
    }
    world.count_event();
    rec.time = world.time();
    return rec;
}

namespace {

// Keeps at most `capacity` points by doubling the sampling stride whenever full.
class TrajectoryRecorder {
public:
    explicit TrajectoryRecorder(std::size_t capacity) : capacity_(capacity) {}

    void offer(std::uint64_t event, const WorldState& w) {
        if (event % stride_ != 0) return;
        if (points_.size() == capacity_) {
            std::size_t keep = 0;
            for (std::size_t i = 0; i < points_.size(); i += 2) points_[keep++] = points_[i];
            points_.resize(keep);
            stride_ *= 2;
            if (event % stride_ != 0) return;
        }
        points_.push_back({w.time(), w.infected_count(), w.contaminated_count()});
        last_event_ = event;
    }

    std::vector<TrajectoryPoint> finish(std::uint64_t event, const WorldState& w) {
        if (points_.empty() || last_event_ != event) {
            if (points_.size() == capacity_) points_.pop_back();
            points_.push_back({w.time(), w.infected_count(), w.contaminated_count()});
        }
        return std::move(points_);
    }

private:
    std::size_t capacity_;
    std::uint64_t stride_ = 1;
    std::uint64_t last_event_ = 0;
    std::vector<TrajectoryPoint> points_;
};

}  // namespace

RunResult run(const EngineConfig& config) {
    WorldState world = init_world(config);
    RunResult result;
    TrajectoryRecorder recorder(config.trajectory_points);
    if (config.record_trajectory) recorder.offer(0, world);

    result.peak_infected_particles = world.infected_count();
    if (world.extinct()) result.extinction_time = 0.0;

    while (!world.extinct() && world.event_count() < config.max_events && world.time() < config.time_horizon) {
        step(world, config);
        result.peak_infected_particles = std::max<std::uint64_t>(result.peak_infected_particles, world.infected_count());
        if (config.record_trajectory) recorder.offer(world.event_count(), world);
        if (world.extinct()) result.extinction_time = world.time();
    }

    result.events_executed = world.event_count();
    result.final_time = world.time();
    result.survived = world.infected_count() > 0 || (config.count_sites_as_survival && world.contaminated_count() > 0);
    if (config.record_trajectory) result.trajectory = recorder.finish(world.event_count(), world);
    return result;
}

std::vector<std::string> audit(const WorldState& world, const EngineConfig& config) {
    std::vector<std::string> problems;
    auto report = [&](std::string msg) {
        if (problems.size() < 32) problems.push_back(std::move(msg));
    };
    const std::size_t sites = world.lattice().site_count();
    const auto parts = world.particles();
    const RegionGeometry& geo = world.geometry();

    std::vector<std::uint32_t> seen(sites, 0), infected_seen(sites, 0);
    std::size_t infected_total = 0;
    for (std::size_t id = 0; id < parts.size(); ++id) {
        const Particle& p = parts[id];
        const auto uid = static_cast<std::uint32_t>(id);
        const int dist = torus_distance(world.lattice().site(p.pos), world.lattice().site(p.home), world.lattice(), config.norm);
        if (dist > config.k) report("particle " + std::to_string(id) + " outside its region");
        // The stored offset must be the actual displacement.
        const Site home = world.lattice().site(p.home);
        std::vector<int> shifted(home.coords);
        const auto off = geo.offset(p.offset);
        for (std::size_t a = 0; a < shifted.size(); ++a) shifted[a] += off[a];
        if (world.lattice().index(world.lattice().wrap(shifted)) != p.pos) report("particle " + std::to_string(id) + " offset mismatch");
        ++seen[p.pos];
        if (p.infected) {
            ++infected_seen[p.pos];
            ++infected_total;
        }
        if (p.infected != world.infected_set().contains(uid)) report("infected index mismatch for particle " + std::to_string(id));
        const auto occ = world.occupants(p.pos);
        if (std::find(occ.begin(), occ.end(), uid) == occ.end()) report("particle " + std::to_string(id) + " missing from occupants");
    }
    if (infected_total != world.infected_count()) report("infected count mismatch");

    std::size_t occupant_total = 0, contaminated_total = 0;
    for (std::size_t s = 0; s < sites; ++s) {
        occupant_total += world.occupants(s).size();
        if (world.occupants(s).size() != seen[s]) report("occupant list size mismatch at site " + std::to_string(s));
        if (world.infected_at(s) != infected_seen[s]) report("infected-at counter mismatch at site " + std::to_string(s));
        for (std::uint32_t id : world.occupants(s)) {
            if (parts[id].pos != s) report("stale occupant at site " + std::to_string(s));
        }
        if (world.contaminated(s)) ++contaminated_total;
        if (world.contaminated(s) != world.contaminated_set().contains(static_cast<std::uint32_t>(s))) {
            report("contamination index mismatch at site " + std::to_string(s));
        }
    }
    if (occupant_total != parts.size()) report("occupancy does not conserve particles");
    if (contaminated_total != world.contaminated_count()) report("contaminated count mismatch");
    if (!config.contamination_enabled() && contaminated_total != 0) report("contaminated site with gamma = inf");
    return problems;
}

std::string_view to_string(TransmissionMode mode) noexcept {
    return mode == TransmissionMode::standard ? "standard" : "site_only";
}

std::string_view to_string(Norm norm) noexcept { return norm == Norm::L1 ? "l1" : "linf"; }

TransmissionMode parse_mode(std::string_view text) {
    if (text == "standard") return TransmissionMode::standard;
    if (text == "site_only" || text == "site-only") return TransmissionMode::site_only;
    throw ConfigError("unknown transmission mode '" + std::string(text) + "'");
}

Norm parse_norm(std::string_view text) {
    if (text == "l1" || text == "L1") return Norm::L1;
    if (text == "linf" || text == "Linf") return Norm::Linf;
    throw ConfigError("unknown norm '" + std::string(text) + "'");
}

}  // namespace contagion
