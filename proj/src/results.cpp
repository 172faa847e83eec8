#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "pdeform/errors.hpp"
#include "pdeform/harness.hpp"

namespace pdeform {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string number_text(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

ordered_json number_json(double x)
{
    if (std::isfinite(x))
        return x;
    return number_text(x);
}

double number_from_json(const ordered_json& j)
{
    if (j.is_number())
        return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf")
            return std::numeric_limits<double>::infinity();
        if (s == "-inf")
            return -std::numeric_limits<double>::infinity();
        if (s == "nan")
            return std::numeric_limits<double>::quiet_NaN();
    }
    throw ValidationError("results: expected a number, got " + j.dump());
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

void ScenarioResult::add_row(std::vector<double> values, bool satisfied, std::string note)
{
    add_row(std::move(values), std::string(satisfied ? "satisfied" : "violated"), std::move(note));
}

void ScenarioResult::add_row(std::vector<double> values, std::string verdict, std::string note)
{
    if (values.size() != columns.size())
        throw ConsistencyError("ScenarioResult: row has " + std::to_string(values.size()) + " values for " +
                               std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(values));
    verdicts.push_back(std::move(verdict));
    notes.push_back(std::move(note));
}

bool ScenarioResult::all_satisfied() const
{
    for (const auto& v : verdicts)
        if (v.rfind("violated", 0) == 0)
            return false;
    return true;
}

std::vector<double> ScenarioResult::column(const std::string& name) const
{
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] != name)
            continue;
        std::vector<double> out;
        for (const auto& r : rows)
            out.push_back(r[c]);
        return out;
    }
    throw ValidationError("ScenarioResult: no column '" + name + "'");
}

OutputFormat parse_format(const std::string& text)
{
    if (text == "csv")
        return OutputFormat::Csv;
    if (text == "json")
        return OutputFormat::Json;
    throw ValidationError("unknown output format '" + text + "' (expected csv or json)");
}

std::string results_to_csv(const ScenarioResult& r)
{
    std::ostringstream os;
    for (const auto& c : r.columns)
        os << csv_field(c) << ',';
    os << "verdict,note\n";
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        for (double x : r.rows[i])
            os << number_text(x) << ',';
        os << csv_field(r.verdicts[i]) << ',' << csv_field(r.notes[i]) << '\n';
    }
    return os.str();
}

std::string results_to_json(const ScenarioResult& r)
{
    ordered_json j;
    j["schema_version"] = kResultSchemaVersion;
    j["scenario"] = r.scenario;
    ordered_json meta = ordered_json::object();
    for (const auto& [k, v] : r.metadata)
        meta[k] = v;
    j["metadata"] = meta;
    ordered_json summary = ordered_json::object();
    for (const auto& [k, v] : r.summary)
        summary[k] = number_json(v);
    j["summary"] = summary;
    j["columns"] = r.columns;
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        ordered_json vals = ordered_json::array();
        for (double x : r.rows[i])
            vals.push_back(number_json(x));
        rows.push_back({{"values", vals}, {"verdict", r.verdicts[i]}, {"note", r.notes[i]}});
    }
    j["rows"] = rows;
    return j.dump(2) + "\n";
}

ScenarioResult results_from_json(const std::string& text)
{
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("results: ") + e.what());
    }
    if (j.value("schema_version", 0) != kResultSchemaVersion)
        throw ValidationError("results: unsupported schema_version");
    ScenarioResult r;
    r.scenario = j.at("scenario").get<std::string>();
    for (const auto& [k, v] : j.at("metadata").items())
        r.metadata[k] = v.get<std::string>();
    for (const auto& [k, v] : j.at("summary").items())
        r.summary[k] = number_from_json(v);
    r.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& row : j.at("rows")) {
        std::vector<double> vals;
        for (const auto& x : row.at("values"))
            vals.push_back(number_from_json(x));
        r.add_row(std::move(vals), row.at("verdict").get<std::string>(), row.at("note").get<std::string>());
    }
    return r;
}

void emit_results(const ScenarioResult& r, OutputFormat format, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ResourceError("cannot write '" + path + "'");
    out << (format == OutputFormat::Csv ? results_to_csv(r) : results_to_json(r));
    if (!out)
        throw ResourceError("write to '" + path + "' failed");
}

} // namespace pdeform
