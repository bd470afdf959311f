#include "contagion/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace contagion {

using nlohmann::json;

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

std::string csv_field(std::string_view text) {
    if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw std::invalid_argument("csv header must not be empty");
}

CsvTable& CsvTable::add_row(std::vector<std::string> fields) {
    if (fields.size() != header_.size()) throw std::invalid_argument("csv row width differs from header");
    rows_.push_back(std::move(fields));
    return *this;
}

std::string CsvTable::str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += csv_field(fields[i]);
        }
        out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"' && field.empty()) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
            field_started = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            record.push_back(std::move(field));
            field.clear();
            records.push_back(std::move(record));
            record.clear();
            field_started = false;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw std::invalid_argument("parse_csv: unterminated quoted field");
    if (field_started || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    return records;
}

CsvTable trajectory_table(std::span<const TrajectoryPoint> trajectory) {
    CsvTable t({"t", "infected_particles", "contaminated_sites"});
    for (const auto& p : trajectory) {
        t.add_row({format_double(p.t), std::to_string(p.infected_particles), std::to_string(p.contaminated_sites)});
    }
    return t;
}

CsvTable survival_table(std::span<const SurvivalPoint> curve) {
    CsvTable t({"t", "survival_fraction"});
    for (const auto& p : curve) t.add_row({format_double(p.t), format_double(p.survival_fraction)});
    return t;
}

CsvTable bounds_table(std::span<const BoundRow> rows) {
    CsvTable t({"lambda", "gamma", "v_k", "p_part_star", "p_site_star", "offspring_bound", "subcritical"});
    for (const auto& r : rows) {
        t.add_row({format_double(r.params.lambda), format_double(r.params.gamma), std::to_string(r.result.v_k),
                   format_double(r.result.p_part_star), format_double(r.result.p_site_star),
                   format_double(r.result.offspring_bound), csv_bool(r.result.subcritical)});
    }
    return t;
}

CsvTable openness_table(std::span<const OpennessRow> rows) {
    CsvTable t({"lambda", "gamma", "k", "trials", "p_tilde", "ci", "p_open"});
    for (const auto& r : rows) {
        t.add_row({format_double(r.lambda), format_double(r.gamma), std::to_string(r.k),
                   std::to_string(r.estimate.trials), format_double(r.estimate.p_tilde),
                   format_double(r.estimate.ci_halfwidth), format_double(r.estimate.p_open)});
    }
    return t;
}

CsvTable percolation_table(int n, Adjacency adjacency, std::span<const SpanningPoint> sweep) {
    CsvTable t({"n", "adjacency", "p", "spanning_fraction"});
    for (const auto& s : sweep) {
        t.add_row({std::to_string(n), std::string(to_string(adjacency)), format_double(s.p),
                   format_double(s.spanning_fraction)});
    }
    return t;
}

CsvTable phase_boundary_table(const PhaseBoundaryEstimate& estimate) {
    CsvTable t({"lambda", "gamma_c_hat", "resolved", "trials_used"});
    for (const auto& p : estimate.points) {
        t.add_row({format_double(p.lambda), format_double(p.gamma_c_hat), csv_bool(p.resolved),
                   std::to_string(p.trials_used)});
    }
    return t;
}

CsvTable lambda_search_table(const LambdaSearch& search) {
    CsvTable t({"lambda", "survived", "sims_used"});
    for (const auto& s : search.trace) {
        t.add_row({format_double(s.lambda), csv_bool(s.survived), std::to_string(s.sims_used)});
    }
    return t;
}

json json_number(double value) {
    if (std::isfinite(value)) return value;
    return format_double(value);
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json_number(*v) : json(nullptr); }

}  // namespace

json to_json(const RunResult& result) {
    json traj = json::array();
    for (const auto& p : result.trajectory) {
        traj.push_back({{"t", json_number(p.t)},
                        {"infected_particles", p.infected_particles},
                        {"contaminated_sites", p.contaminated_sites}});
    }
    return {{"survived", result.survived},
            {"events_executed", result.events_executed},
            {"final_time", json_number(result.final_time)},
            {"extinction_time", optional_number(result.extinction_time)},
            {"peak_infected_particles", result.peak_infected_particles},
            {"trajectory", std::move(traj)}};
}

json to_json(const DominationReport& report) {
    return {{"events_checked", report.events_checked},
            {"domination_held", report.domination_held},
            {"first_violation", report.first_violation ? json(*report.first_violation) : json(nullptr)},
            {"survived_strict", report.survived_strict},
            {"survived_lax", report.survived_lax},
            {"events_executed", report.events_executed},
            {"final_time", json_number(report.final_time)},
            {"strict_extinction_time", optional_number(report.strict_extinction_time)},
            {"lax_extinction_time", optional_number(report.lax_extinction_time)}};
}

json to_json(const BoundParameters& params) {
    return {{"d", params.d},
            {"k", params.k},
            {"m_bar", params.m_bar},
            {"lambda", json_number(params.lambda)},
            {"gamma", json_number(params.gamma)}};
}

json to_json(const BoundResult& result) {
    return {{"v_k", result.v_k},
            {"n", json_number(result.load)},
            {"mu", json_number(result.signal_hazard)},
            {"reinforcement_rate", json_number(result.reinforcement_rate)},
            {"p_part_star", json_number(result.p_part_star)},
            {"p_site_star", json_number(result.p_site_star)},
            {"failure_product", json_number(result.failure_product)},
            {"offspring_bound", json_number(result.offspring_bound)},
            {"subcritical", result.subcritical}};
}

json to_json(const OffspringEstimate& estimate) {
    return {{"mean", json_number(estimate.mean)},
            {"std_error", json_number(estimate.std_error)},
            {"ci_low", json_number(estimate.ci_low)},
            {"ci_high", json_number(estimate.ci_high)},
            {"trials", estimate.trials},
            {"truncated_trials", estimate.truncated_trials}};
}

json to_json(const OpennessEstimate& estimate) {
    return {{"p_tilde", json_number(estimate.p_tilde)},
            {"ci_halfwidth", json_number(estimate.ci_halfwidth)},
            {"trials", estimate.trials},
            {"successes", estimate.successes},
            {"safeguard_trips", estimate.safeguard_trips},
            {"p_m_ge_1", json_number(estimate.p_m_ge_1)},
            {"p_open", json_number(estimate.p_open)}};
}

json to_json(const ThresholdEstimate& estimate) {
    return {{"p_c", json_number(estimate.p_c)},
            {"ci_halfwidth", json_number(estimate.ci_halfwidth)},
            {"realizations", estimate.realizations}};
}

json to_json(const SupercriticalityVerdict& verdict) {
    return {{"openness", to_json(verdict.openness)},
            {"threshold", to_json(verdict.threshold)},
            {"p_open", json_number(verdict.openness.p_open)},
            {"p_open_ci", json_number(verdict.p_open_ci)},
            {"p_c_hat", json_number(verdict.threshold.p_c)},
            {"margin", json_number(verdict.margin)},
            {"verdict", std::string(to_string(verdict.verdict))}};
}

json to_json(const LambdaSearch& search) {
    json trace = json::array();
    for (const auto& s : search.trace) {
        trace.push_back({{"lambda", json_number(s.lambda)}, {"survived", s.survived}, {"sims_used", s.sims_used}});
    }
    return {{"resolved", search.resolved},
            {"lambda_c_inf_hat", json_number(search.lambda_c_inf_hat)},
            {"trace", std::move(trace)},
            {"events", search.events}};
}

json to_json(const PhaseBoundaryEstimate& estimate) {
    json points = json::array();
    for (const auto& p : estimate.points) {
        points.push_back({{"lambda", json_number(p.lambda)},
                          {"gamma_c_hat", json_number(p.gamma_c_hat)},
                          {"resolved", p.resolved},
                          {"degenerate", p.degenerate},
                          {"trials_used", p.trials_used},
                          {"gamma_steps", p.gamma_steps}});
    }
    return {{"lambda_c_inf_hat", json_number(estimate.lambda_c_inf_hat)},
            {"points", std::move(points)},
            {"events", estimate.events}};
}

json to_json(const Manifest& m) {
    return {{"command", m.command},
            {"version", m.version},
            {"seed_scheme", m.seed_scheme},
            {"master_seed", m.master_seed},
            {"config", m.config},
            {"outputs", m.outputs},
            {"wall_clock_seconds", m.wall_clock_seconds},
            {"events", m.events},
            {"events_per_second", m.events_per_second},
            {"threads", m.threads},
            {"exit_code", m.exit_code}};
}

const json& manifest_schema() {
    static const json schema = json::parse(R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "contagion run manifest",
  "type": "object",
  "required": ["command", "version", "seed_scheme", "master_seed", "config", "outputs",
               "wall_clock_seconds", "events", "events_per_second", "threads", "exit_code"],
  "additionalProperties": false,
  "properties": {
    "command": {"type": "string", "enum": ["simulate", "sweep", "phase", "couple", "bounds", "perc"]},
    "version": {"type": "string"},
    "seed_scheme": {"type": "string"},
    "master_seed": {"type": "integer", "minimum": 0},
    "config": {"type": "object", "additionalProperties": {"type": "string"}},
    "outputs": {"type": "array", "items": {"type": "string"}},
    "wall_clock_seconds": {"type": "number", "minimum": 0},
    "events": {"type": "integer", "minimum": 0},
    "events_per_second": {"type": "number", "minimum": 0},
    "threads": {"type": "integer", "minimum": 1},
    "exit_code": {"type": "integer", "enum": [0, 2, 3, 4]}
  }
})");
    return schema;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.close();
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void prepare_output_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create output directory '" + dir.string() + "'");
    }
    const auto probe = dir / ".write_probe";
    {
        std::ofstream out(probe, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("output directory '" + dir.string() + "' is not writable");
    }
    std::filesystem::remove(probe, ec);
}

}  // namespace contagion
