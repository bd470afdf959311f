#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "contagion/bounds.hpp"
#include "contagion/coupling.hpp"
#include "contagion/engine.hpp"
#include "contagion/experiment.hpp"
#include "contagion/percolation.hpp"

namespace contagion {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form ("inf", "-inf" and "nan" for non-finite values).
[[nodiscard]] std::string format_double(double value);

/// RFC 4180 table with LF line endings. Fields holding a comma, quote, CR or LF are quoted.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    CsvTable& add_row(std::vector<std::string> fields);
    [[nodiscard]] const std::vector<std::string>& header() const noexcept { return header_; }
    [[nodiscard]] std::size_t row_count() const noexcept { return rows_.size(); }
    [[nodiscard]] std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

[[nodiscard]] std::string csv_field(std::string_view text);
/// Splits RFC 4180 text into records of unquoted fields.
[[nodiscard]] std::vector<std::vector<std::string>> parse_csv(std::string_view text);

inline std::string csv_bool(bool b) { return b ? "true" : "false"; }

[[nodiscard]] CsvTable trajectory_table(std::span<const TrajectoryPoint> trajectory);
[[nodiscard]] CsvTable survival_table(std::span<const SurvivalPoint> curve);

struct BoundRow {
    BoundParameters params;
    BoundResult result;
};
[[nodiscard]] CsvTable bounds_table(std::span<const BoundRow> rows);

struct OpennessRow {
    double lambda = 0;
    double gamma = 0;
    int k = 1;
    OpennessEstimate estimate;
};
[[nodiscard]] CsvTable openness_table(std::span<const OpennessRow> rows);
[[nodiscard]] CsvTable percolation_table(int n, Adjacency adjacency, std::span<const SpanningPoint> sweep);
[[nodiscard]] CsvTable phase_boundary_table(const PhaseBoundaryEstimate& estimate);
[[nodiscard]] CsvTable lambda_search_table(const LambdaSearch& search);

[[nodiscard]] nlohmann::json to_json(const RunResult& result);
[[nodiscard]] nlohmann::json to_json(const DominationReport& report);
[[nodiscard]] nlohmann::json to_json(const BoundParameters& params);
[[nodiscard]] nlohmann::json to_json(const BoundResult& result);
[[nodiscard]] nlohmann::json to_json(const OffspringEstimate& estimate);
[[nodiscard]] nlohmann::json to_json(const OpennessEstimate& estimate);
[[nodiscard]] nlohmann::json to_json(const ThresholdEstimate& estimate);
[[nodiscard]] nlohmann::json to_json(const SupercriticalityVerdict& verdict);
[[nodiscard]] nlohmann::json to_json(const LambdaSearch& search);
[[nodiscard]] nlohmann::json to_json(const PhaseBoundaryEstimate& estimate);

/// JSON number, or the strings "inf", "-inf", "nan" for non-finite values.
[[nodiscard]] nlohmann::json json_number(double value);

/// Record of one CLI invocation.
struct Manifest {
    std::string command;
    std::string version;
    std::string seed_scheme;
    std::uint64_t master_seed = 0;
    std::map<std::string, std::string> config;  // effective options, as given to --config
    std::vector<std::string> outputs;           // file names relative to the output directory
    double wall_clock_seconds = 0;
    std::uint64_t events = 0;
    double events_per_second = 0;
    unsigned threads = 1;
    int exit_code = 0;
};

[[nodiscard]] nlohmann::json to_json(const Manifest& manifest);
/// JSON Schema (draft 2020-12) of the manifest document.
[[nodiscard]] const nlohmann::json& manifest_schema();

/// Writes `text` to `path` (binary, so LF stays LF). Throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view text);
[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);
/// Creates `dir` if needed and checks that it is a writable directory. Throws IoError.
void prepare_output_dir(const std::filesystem::path& dir);

}  // namespace contagion
