#include "regimecons/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace regimecons {

namespace {

using nlohmann::json;

const json& require(const json& obj, const std::string& key, const std::string& path) {
    const std::string field = path.empty() ? key : path + "." + key;
    if (!obj.is_object() || !obj.contains(key)) throw ConfigError(field, "missing required field");
    return obj.at(key);
}

double number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ConfigError(field, "expected a number");
    return v.get<double>();
}

std::uint64_t count(const json& v, const std::string& field) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(field, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

void write_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) os << ',';
        os << cells[k];
    }
    os << '\n';
}

}  // namespace

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");
    RunConfig cfg;
    auto& m = cfg.model;
    m.T = number(require(doc, "T", ""), "T");
    m.gamma = number(require(doc, "gamma", ""), "gamma");
    m.x0 = number(require(doc, "x0", ""), "x0");
    if (doc.contains("initial_state")) m.initial_state = count(doc.at("initial_state"), "initial_state");

    const auto& regimes = require(doc, "regimes", "");
    if (!regimes.is_array() || regimes.empty()) throw ConfigError("regimes", "expected a non-empty array");
    for (std::size_t i = 0; i < regimes.size(); ++i) {
        const std::string path = "regimes[" + std::to_string(i) + "]";
        const auto& r = regimes[i];
        RegimeCoefficients c;
        c.r = number(require(r, "r", path), path + ".r");
        c.alpha = number(require(r, "alpha", path), path + ".alpha");
        c.sigma = number(require(r, "sigma", path), path + ".sigma");
        c.rho = number(require(r, "rho", path), path + ".rho");
        m.regimes.push_back(c);
    }

    const auto& gen = require(doc, "generator", "");
    if (!gen.is_array()) throw ConfigError("generator", "expected an array of rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < gen.size(); ++i) {
        const std::string path = "generator[" + std::to_string(i) + "]";
        if (!gen[i].is_array() || gen[i].size() != gen.size()) throw ConfigError(path, "generator must be square");
        std::vector<double> row;
        for (std::size_t j = 0; j < gen[i].size(); ++j)
            row.push_back(number(gen[i][j], path + "[" + std::to_string(j) + "]"));
        rows.push_back(std::move(row));
    }
    m.generator = GeneratorMatrix(rows);

    if (doc.contains("solver")) {
        const auto& s = doc.at("solver");
        if (s.contains("n_steps")) cfg.solver.n_steps = count(s.at("n_steps"), "solver.n_steps");
        if (s.contains("richardson_check")) cfg.solver.richardson_check = s.at("richardson_check").get<bool>();
    }
    if (doc.contains("mc")) {
        const auto& s = doc.at("mc");
        if (s.contains("n_paths")) cfg.mc.n_paths = count(s.at("n_paths"), "mc.n_paths");
        if (s.contains("seed")) cfg.mc.seed = count(s.at("seed"), "mc.seed");
        if (s.contains("n_substeps")) cfg.mc.n_substeps = count(s.at("n_substeps"), "mc.n_substeps");
        if (s.contains("n_workers")) cfg.mc.n_workers = count(s.at("n_workers"), "mc.n_workers");
    }
    if (doc.contains("output")) {
        const auto& s = doc.at("output");
        if (s.contains("directory")) cfg.output.directory = s.at("directory").get<std::string>();
        if (s.contains("format")) cfg.output.format = s.at("format").get<std::string>();
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

json to_json(const RunConfig& cfg) {
    json regimes = json::array();
    for (const auto& c : cfg.model.regimes)
        regimes.push_back({{"r", c.r}, {"alpha", c.alpha}, {"sigma", c.sigma}, {"rho", c.rho}});
    return {{"T", cfg.model.T},
            {"gamma", cfg.model.gamma},
            {"x0", cfg.model.x0},
            {"initial_state", cfg.model.initial_state},
            {"regimes", regimes},
            {"generator", cfg.model.generator.rows()},
            {"solver", {{"n_steps", cfg.solver.n_steps}, {"richardson_check", cfg.solver.richardson_check}}},
            {"mc",
             {{"n_paths", cfg.mc.n_paths},
              {"seed", cfg.mc.seed},
              {"n_substeps", cfg.mc.n_substeps},
              {"n_workers", cfg.mc.n_workers}}},
            {"output", {{"directory", cfg.output.directory}, {"format", cfg.output.format}}}};
}

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_number(const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw std::invalid_argument("not a number: '" + text + "'");
    return v;
}

std::vector<std::string> gtable_columns(std::size_t n, std::size_t n_rates) {
    std::vector<std::string> cols{"t"};
    for (std::size_t i = 0; i < n; ++i) cols.push_back("g_" + std::to_string(i));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i) continue;
            cols.push_back(n == 2 ? "gbar_" + std::to_string(i) : "gbar_" + std::to_string(i) + "_" + std::to_string(k));
        }
    }
    for (std::size_t k = 0; k < n_rates; ++k)
        for (std::size_t i = 0; i < n; ++i) cols.push_back("ghat" + std::to_string(k + 1) + "_" + std::to_string(i));
    return cols;
}

void write_gtable_csv(const GTable& table, std::ostream& os) {
    const std::size_t n = table.n_regimes();
    const std::size_t n_rates = table.ghat_rates().size();
    write_row(os, gtable_columns(n, n_rates));
    std::vector<std::span<const double>> series;
    for (std::size_t i = 0; i < n; ++i) series.push_back(table.values(Series::g(), i));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            if (k != i) series.push_back(table.values(Series::gbar(k), i));
    for (std::size_t k = 0; k < n_rates; ++k)
        for (std::size_t i = 0; i < n; ++i) series.push_back(table.values(Series::ghat(k), i));

    std::vector<std::string> row;
    for (std::size_t m = 0; m < table.grid().size(); ++m) {
        row.assign(1, format_number(table.grid()[m]));
        for (const auto& s : series) row.push_back(format_number(s[m]));
        write_row(os, row);
    }
}

GTable read_gtable_csv(std::istream& is, std::vector<double> ghat_rates) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("gtable: empty file");
    const auto header = split_csv_line(line);
    std::size_t n = 0;
    while (n + 1 < header.size() && header[n + 1] == "g_" + std::to_string(n)) ++n;
    if (n == 0) throw std::invalid_argument("gtable: header has no g_ columns");
    if (header != gtable_columns(n, ghat_rates.size()))
        throw std::invalid_argument("gtable: header does not match " + std::to_string(n) + " regimes and " +
                                    std::to_string(ghat_rates.size()) + " pre-commitment rates");

    std::vector<std::vector<double>> cols(header.size());
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::invalid_argument("gtable: line " + std::to_string(line_no) + " has wrong column count");
        for (std::size_t c = 0; c < cells.size(); ++c) cols[c].push_back(parse_number(cells[c]));
    }

    std::size_t c = 0;
    std::vector<double> grid = std::move(cols[c++]);
    std::vector<std::vector<double>> coupled(n * n);
    for (std::size_t i = 0; i < n; ++i) coupled[i * n + i] = std::move(cols[c++]);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            if (k != i) coupled[i * n + k] = std::move(cols[c++]);
    std::vector<std::vector<std::vector<double>>> ghat(ghat_rates.size(), std::vector<std::vector<double>>(n));
    for (auto& per_rate : ghat)
        for (auto& curve : per_rate) curve = std::move(cols[c++]);
    return GTable(std::move(grid), n, std::move(coupled), std::move(ghat_rates), std::move(ghat));
}

std::vector<std::string> consumption_columns(std::size_t n, std::size_t n_rates) {
    std::vector<std::string> cols{"t"};
    for (std::size_t i = 0; i < n; ++i) cols.push_back("Cbar_" + std::to_string(i));
    for (std::size_t k = 0; k < n_rates; ++k)
        for (std::size_t i = 0; i < n; ++i) cols.push_back("Chat" + std::to_string(k + 1) + "_" + std::to_string(i));
    return cols;
}

void write_consumption_csv(const ConsumptionCurve& curve, std::ostream& os, const std::vector<std::string>& comments) {
    for (const auto& c : comments) os << "# " << c << '\n';
    write_row(os, consumption_columns(curve.cbar.size(), curve.chat.size()));
    std::vector<std::string> row;
    for (std::size_t m = 0; m < curve.times.size(); ++m) {
        row.assign(1, format_number(curve.times[m]));
        for (const auto& s : curve.cbar) row.push_back(format_number(s[m]));
        for (const auto& per_rate : curve.chat)
            for (const auto& s : per_rate) row.push_back(format_number(s[m]));
        write_row(os, row);
    }
}

void write_wealth_paths_csv(const std::vector<WealthPath>& paths, std::ostream& os) {
    os << "path,time,state,wealth,consumption\n";
    for (std::size_t p = 0; p < paths.size(); ++p) {
        const auto& w = paths[p];
        for (std::size_t k = 0; k < w.times.size(); ++k) {
            os << p << ',' << format_number(w.times[k]) << ',' << w.states[k] << ',' << format_number(w.wealth[k])
               << ',' << format_number(w.consumption[k]) << '\n';
        }
    }
}

}  // namespace regimecons
