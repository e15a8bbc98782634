#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "regimecons/model.hpp"
#include "regimecons/ode.hpp"
#include "regimecons/simulation.hpp"
#include "regimecons/strategies.hpp"

namespace regimecons {

struct OutputSettings {
    std::string directory = ".";
    std::string format = "csv";
};

struct RunConfig {
    ModelParams model;
    SolverSettings solver;
    McSettings mc;
    OutputSettings output;
};

/// Malformed or missing configuration entry; `field()` is the JSON path.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Reads
///   {"T", "gamma", "x0", "initial_state", "regimes": [{"r", "alpha", "sigma", "rho"}, ...],
///    "generator": [[...]], "solver": {"n_steps"}, "mc": {"n_paths", "seed", "n_substeps"},
///    "output": {"directory", "format"}}
/// "initial_state", "solver", "mc" and "output" are optional. Does not
/// validate model invariants; call validate() on the result.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// 17 significant digits, independent of the C++ locale.
std::string format_number(double v);
double parse_number(const std::string& text);

std::vector<std::string> gtable_columns(std::size_t n_regimes, std::size_t n_rates);
void write_gtable_csv(const GTable& table, std::ostream& os);
/// Reads a table written by write_gtable_csv. The pre-commitment rates are not
/// stored in the file and must be supplied.
GTable read_gtable_csv(std::istream& is, std::vector<double> ghat_rates);

std::vector<std::string> consumption_columns(std::size_t n_regimes, std::size_t n_rates);
/// Writes `comment` lines first, each prefixed with "# ", when non-empty.
void write_consumption_csv(const ConsumptionCurve& curve, std::ostream& os,
                           const std::vector<std::string>& comments = {});

/// Columns: path, time, state, wealth, consumption.
void write_wealth_paths_csv(const std::vector<WealthPath>& paths, std::ostream& os);

}  // namespace regimecons
