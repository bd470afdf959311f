#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "contagion/index_set.hpp"
#include "contagion/lattice.hpp"
#include "contagion/rng.hpp"

namespace contagion {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class TransmissionMode : std::uint8_t {
    standard,   // particle-particle and particle-site transmission
    site_only,  // particles are infected only by jumping onto a contaminated site
};

enum class EventKind : std::uint8_t { jump, recovery, clearance };

/// Law of the initial number of particles per site, given as a finite pmf.
class LoadDistribution {
public:
    struct Atom {
        unsigned value;
        double probability;
    };

    /// Throws ConfigError unless probabilities lie in [0,1] and sum to 1 within 1e-12.
    explicit LoadDistribution(std::vector<Atom> pmf);

    static LoadDistribution point_mass(unsigned value) { return LoadDistribution({{value, 1.0}}); }

    /// Parses "3" (point mass) or "0:0.25,1:0.5,2:0.25".
    static LoadDistribution parse(std::string_view text);
    [[nodiscard]] std::string to_string() const;

    [[nodiscard]] unsigned sample(Rng& rng) const;
    [[nodiscard]] unsigned max_value() const noexcept { return max_value_; }
    [[nodiscard]] double probability_at_least(unsigned m) const noexcept;
    [[nodiscard]] std::span<const Atom> pmf() const noexcept { return pmf_; }

private:
    std::vector<Atom> pmf_;
    unsigned max_value_ = 0;
};

struct EngineConfig {
    TorusLattice lattice{2, 30};
    int k = 1;
    Norm norm = Norm::L1;
    double lambda = 1.0;           // particle recovery rate; jump rate is fixed at 1
    double gamma = kInfinity;      // site clearance rate; infinity disables contamination
    LoadDistribution load = LoadDistribution::point_mass(1);
    TransmissionMode mode = TransmissionMode::standard;
    std::uint64_t max_events = 100000;  // K
    std::uint64_t seed = 0;
    bool record_trajectory = false;
    std::size_t trajectory_points = 4096;
    bool count_sites_as_survival = false;
    bool infect_origin_site = true;
    double time_horizon = kInfinity;  // run() also stops once time reaches this

    [[nodiscard]] bool contamination_enabled() const noexcept { return gamma < kInfinity; }

    /// Throws ConfigError on any violated invariant.
    void validate() const;
};

struct Particle {
    std::uint32_t home;
    std::uint32_t pos;
    std::uint32_t offset;  // index into RegionGeometry: displacement of pos from home
    bool infected;
};

struct Rates {
    double jump = 0;
    double recovery = 0;
    double clearance = 0;

    [[nodiscard]] double total() const noexcept { return jump + recovery + clearance; }
};

/// What one event changed. `newly_infected` views engine scratch storage and is
/// valid until the next mutation of the world.
struct EventRecord {
    EventKind kind = EventKind::jump;
    std::uint32_t entity = 0;  // particle id for jump/recovery, site index for clearance
    std::uint32_t from = 0;
    std::uint32_t to = 0;
    bool site_contaminated = false;  // jump made `to` contaminated
    bool changed = false;            // recovery/clearance actually flipped a flag
    std::span<const std::uint32_t> newly_infected;
    double time = 0;
};

struct TrajectoryPoint {
    double t;
    std::uint64_t infected_particles;
    std::uint64_t contaminated_sites;

    friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct RunResult {
    bool survived = false;
    std::uint64_t events_executed = 0;
    double final_time = 0;
    std::optional<double> extinction_time;
    std::uint64_t peak_infected_particles = 0;
    std::vector<TrajectoryPoint> trajectory;

    friend bool operator==(const RunResult&, const RunResult&) = default;
};

/// Full mutable state of one simulation. Single owner; not thread-safe.
///
/// The three mutation primitives apply the transmission rules of the model and keep
/// the rate index (infected particles, contaminated sites) and the per-site occupancy
/// lists consistent. They are shared by the plain engine and the coupled executor.
class WorldState {
public:
    [[nodiscard]] const TorusLattice& lattice() const noexcept { return lattice_; }
    [[nodiscard]] const RegionGeometry& geometry() const noexcept { return geometry_; }

    [[nodiscard]] double time() const noexcept { return time_; }
    [[nodiscard]] std::uint64_t event_count() const noexcept { return events_; }

    [[nodiscard]] std::size_t particle_count() const noexcept { return particles_.size(); }
    [[nodiscard]] std::span<const Particle> particles() const noexcept { return particles_; }
    [[nodiscard]] std::size_t infected_count() const noexcept { return infected_.size(); }
    [[nodiscard]] std::size_t contaminated_count() const noexcept { return contaminated_set_.size(); }
    [[nodiscard]] const IndexSet& infected_set() const noexcept { return infected_; }
    [[nodiscard]] const IndexSet& contaminated_set() const noexcept { return contaminated_set_; }

    [[nodiscard]] bool contaminated(std::size_t site) const noexcept { return contaminated_[site] != 0; }
    [[nodiscard]] std::span<const std::uint32_t> occupants(std::size_t site) const noexcept { return occupants_[site]; }
    [[nodiscard]] std::uint32_t infected_at(std::size_t site) const noexcept { return infected_here_[site]; }

    /// Infection extinct: no infected particle and no contaminated site. Absorbing.
    [[nodiscard]] bool extinct() const noexcept { return infected_.empty() && contaminated_set_.empty(); }

    [[nodiscard]] std::size_t move_count(std::uint32_t particle) const noexcept {
        return geometry_.moves(particles_[particle].offset).size();
    }

    /// Moves `particle` along its `move_index`-th admissible move and applies infection.
    EventRecord apply_jump(std::uint32_t particle, std::size_t move_index);
    /// Heals an infected particle (no-op if healthy). No re-infection from its site.
    EventRecord apply_recovery(std::uint32_t particle);
    /// Cleans a contaminated site (no-op if clean). No re-contamination by occupants.
    EventRecord apply_clearance(std::uint32_t site);

    void advance_time(double dt) noexcept { time_ += dt; }
    void count_event() noexcept { ++events_; }
    Rng& rng() noexcept { return rng_; }

private:
    friend WorldState init_world(const EngineConfig& config);

    explicit WorldState(const EngineConfig& config);

    void infect(std::uint32_t particle);
    void contaminate(std::uint32_t site);
    void relocate(std::uint32_t particle, std::uint32_t to);

    TorusLattice lattice_;
    RegionGeometry geometry_;
    TransmissionMode mode_;
    bool contamination_enabled_;

    std::vector<Particle> particles_;
    std::vector<std::uint32_t> occupant_slot_;
    std::vector<std::vector<std::uint32_t>> occupants_;
    std::vector<std::uint32_t> infected_here_;
    std::vector<std::uint8_t> contaminated_;
    IndexSet infected_;
    IndexSet contaminated_set_;
    std::vector<std::uint32_t> scratch_;

    double time_ = 0;
    std::uint64_t events_ = 0;
    Rng rng_;
};

/// Places M_x ~ load particles at every site (all healthy, at home), then infects the
/// center site's particles and, when contamination is enabled, the site itself.
[[nodiscard]] WorldState init_world(const EngineConfig& config);

[[nodiscard]] Rates total_rates(const WorldState& world, const EngineConfig& config);

/// Exp(total rate) holding time drawn from the world's stream. `step` uses the same draw.
[[nodiscard]] double draw_holding_time(WorldState& world, const EngineConfig& config);

/// Executes one event (jump, recovery or clearance) of the continuous-time chain.
/// Throws std::logic_error when the total rate is zero (empty world).
EventRecord step(WorldState& world, const EngineConfig& config);

/// init_world, then step until K events, extinction, or the time horizon.
[[nodiscard]] RunResult run(const EngineConfig& config);

/// Full consistency audit; returns one message per violated invariant (empty if clean).
[[nodiscard]] std::vector<std::string> audit(const WorldState& world, const EngineConfig& config);

[[nodiscard]] std::string_view to_string(TransmissionMode mode) noexcept;
[[nodiscard]] std::string_view to_string(Norm norm) noexcept;
[[nodiscard]] TransmissionMode parse_mode(std::string_view text);
[[nodiscard]] Norm parse_norm(std::string_view text);

}  // namespace contagion
