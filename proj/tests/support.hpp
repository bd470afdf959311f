#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "contagion/engine.hpp"
#include "contagion/rng.hpp"

namespace support {

using namespace contagion;

/// Move index that takes `particle` to `target`; throws if no admissible move does.
inline std::size_t move_to(const WorldState& w, std::uint32_t particle, std::uint32_t target) {
    const Particle& p = w.particles()[particle];
    const auto moves = w.geometry().moves(p.offset);
    for (std::size_t i = 0; i < moves.size(); ++i) {
        if (w.lattice().neighbor(p.pos, moves[i].dir) == target) return i;
    }
    throw std::logic_error("no admissible move to target");
}

struct Snapshot {
    std::vector<std::uint8_t> infected;
    std::vector<std::uint8_t> contaminated;
    std::vector<std::uint32_t> pos;
    bool extinct = false;

    static Snapshot of(const WorldState& w) {
        Snapshot s;
        for (const Particle& p : w.particles()) {
            s.infected.push_back(p.infected ? 1 : 0);
            s.pos.push_back(p.pos);
        }
        for (std::size_t site = 0; site < w.lattice().site_count(); ++site) {
            s.contaminated.push_back(w.contaminated(site) ? 1 : 0);
        }
        s.extinct = w.extinct();
        return s;
    }
};

/// Violations of transition locality, absorption and the no-contamination mode for one event.
inline std::vector<std::string> check_transition(const Snapshot& before, const Snapshot& after, const EventRecord& rec,
                                                 const EngineConfig& cfg) {
    std::vector<std::string> bad;
    const bool jump = rec.kind == EventKind::jump;
    if (before.pos.size() != after.pos.size()) bad.push_back("particle count changed");
    const bool jumper_infected = jump && after.infected[rec.entity];
    for (std::size_t i = 0; i < before.infected.size(); ++i) {
        if (i != rec.entity || !jump) {
            if (before.pos[i] != after.pos[i]) bad.push_back("particle moved without its own jump");
        }
        if (before.infected[i] && !after.infected[i]) {
            if (!(rec.kind == EventKind::recovery && rec.entity == i)) bad.push_back("healing outside own recovery");
        }
        if (!before.infected[i] && after.infected[i]) {
            const bool own = jump && rec.entity == i;
            const bool by_arrival = jump && cfg.mode == TransmissionMode::standard && jumper_infected &&
                                    before.infected[rec.entity] && after.pos[i] == rec.to;
            if (!own && !by_arrival) bad.push_back("infection outside a jump");
        }
    }
    for (std::size_t s = 0; s < before.contaminated.size(); ++s) {
        if (before.contaminated[s] && !after.contaminated[s]) {
            if (!(rec.kind == EventKind::clearance && rec.entity == s)) bad.push_back("cleaning outside own clearance");
        }
        if (!before.contaminated[s] && after.contaminated[s]) {
            if (!(jump && s == rec.to && before.infected[rec.entity])) bad.push_back("contamination without infected arrival");
        }
        if (!cfg.contamination_enabled() && after.contaminated[s]) bad.push_back("contamination with gamma = inf");
    }
    if (before.extinct && !after.extinct) bad.push_back("left the absorbing state");
    return bad;
}

/// sqrt(n) * sup |F_n - F| against Exp(rate).
inline double ks_exponential(std::vector<double> x, double rate) {
    std::sort(x.begin(), x.end());
    const auto n = static_cast<double>(x.size());
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = 1.0 - std::exp(-rate * x[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return std::sqrt(n) * d;
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        const double t = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= t) ++i;
        while (j < b.size() && b[j] <= t) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                                 static_cast<double>(j) / static_cast<double>(b.size())));
    }
    return d;
}

/// Small random engine configuration for property tests.
inline EngineConfig random_config(Rng& rng, int max_dim = 2, int max_side = 10, int max_k = 2) {
    EngineConfig c;
    const int dim = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_dim)));
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_k)));
    const int min_side = 2 * k + 2;
    const int side = min_side + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, max_side - min_side + 1))));
    c.lattice = TorusLattice(dim, side);
    c.k = k;
    c.norm = rng.bernoulli(0.5) ? Norm::L1 : Norm::Linf;
    c.lambda = std::exp(rng.uniform() * 4.0 - 2.0);
    c.gamma = rng.bernoulli(0.25) ? kInfinity : std::exp(rng.uniform() * 4.0 - 2.0);
    switch (rng.below(3)) {
        case 0: c.load = LoadDistribution::point_mass(1); break;
        case 1: c.load = LoadDistribution::parse("0:0.3,1:0.4,2:0.3"); break;
        default: c.load = LoadDistribution::point_mass(2); break;
    }
    c.mode = rng.bernoulli(0.8) ? TransmissionMode::standard : TransmissionMode::site_only;
    c.seed = rng();
    return c;
}

// Checks the subset of JSON Schema used by the manifest schema.
inline bool conforms(const nlohmann::json& doc, const nlohmann::json& schema, std::string& why) {
    if (schema.contains("type")) {
        const std::string t = schema["type"];
        const bool ok = (t == "object" && doc.is_object()) || (t == "array" && doc.is_array()) ||
                        (t == "string" && doc.is_string()) || (t == "integer" && doc.is_number_integer()) ||
                        (t == "number" && doc.is_number()) || (t == "boolean" && doc.is_boolean());
        if (!ok) {
            why = "type " + t + " expected for " + doc.dump();
            return false;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& v : schema["enum"]) found = found || v == doc;
        if (!found) {
            why = "value not in enum: " + doc.dump();
            return false;
        }
    }
    if (schema.contains("minimum") && doc.is_number() && doc.get<double>() < schema["minimum"].get<double>()) {
        why = "below minimum: " + doc.dump();
        return false;
    }
    if (doc.is_object()) {
        if (schema.contains("required")) {
            for (const auto& key : schema["required"]) {
                if (!doc.contains(key.get<std::string>())) {
                    why = "missing " + key.get<std::string>();
                    return false;
                }
            }
        }
        for (const auto& [key, value] : doc.items()) {
            if (schema.contains("properties") && schema["properties"].contains(key)) {
                if (!conforms(value, schema["properties"][key], why)) return false;
            } else if (schema.contains("additionalProperties")) {
                const nlohmann::json& extra = schema["additionalProperties"];
                if (extra.is_boolean() && !extra.get<bool>()) {
                    why = "unexpected property " + key;
                    return false;
                }
                if (extra.is_object() && !conforms(value, extra, why)) return false;
            }
        }
    }
    if (doc.is_array() && schema.contains("items")) {
        for (const auto& item : doc) {
            if (!conforms(item, schema["items"], why)) return false;
        }
    }
    return true;
}

}  // namespace support
