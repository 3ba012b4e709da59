#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "lhy/errors.hpp"
#include "lhy/scattering.hpp"

namespace lhy::io {

inline constexpr const char* version = "0.1.0";

// Shortest round-trip form, '.' decimal separator regardless of locale.
inline std::string format_double(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    if (res.ec != std::errc())
        throw error("could not format a number");
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), columns_(header.size())
    {
        row_strings(header);
    }

    void row(const std::vector<double>& values)
    {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values)
            cells.push_back(format_double(v));
        row_strings(cells);
    }

    void row_strings(const std::vector<std::string>& cells)
    {
        if (cells.size() != columns_)
            throw error("CSV row has the wrong number of columns");
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ostream& out_;
    std::size_t columns_;
};

// {"kind": "square", "v0": 2, "range": 1}
// {"kind": "square", "a": 1, "range": 2}          (depth chosen for the length)
// {"kind": "tabulated", "r": [...], "v": [...]}
struct PotentialSpec {
    std::string kind = "square";
    double v0 = NAN;
    double a = NAN;
    double range = NAN;
    std::vector<double> r, v;

    RadialPotential build() const
    {
        if (kind == "square") {
            if (!(range > 0.0))
                throw domain_error("range: a square well needs range > 0");
            if (std::isnan(v0) == std::isnan(a))
                throw domain_error("v0: a square well needs exactly one of v0 or a");
            return RadialPotential::square_well(std::isnan(v0) ? square_well_depth_for(a, range) : v0, range);
        }
        if (kind == "tabulated")
            return RadialPotential::tabulated(r, v);
        throw domain_error("kind: expected 'square' or 'tabulated', got '" + kind + "'");
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j{{"kind", kind}};
        if (kind == "square") {
            if (!std::isnan(v0))
                j["v0"] = v0;
            if (!std::isnan(a))
                j["a"] = a;
            j["range"] = range;
        } else {
            j["r"] = r;
            j["v"] = v;
        }
        return j;
    }
};

inline PotentialSpec potential_from_json(const nlohmann::json& j)
{
    PotentialSpec p;
    try {
        p.kind = j.value("kind", std::string("square"));
        if (j.contains("v0"))
            p.v0 = j.at("v0").get<double>();
        if (j.contains("a"))
            p.a = j.at("a").get<double>();
        if (j.contains("range"))
            p.range = j.at("range").get<double>();
        if (j.contains("r"))
            p.r = j.at("r").get<std::vector<double>>();
        if (j.contains("v"))
            p.v = j.at("v").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw domain_error(std::string("potential: ") + e.what());
    }
    return p;
}

} // namespace lhy::io
