#pragma once

// Run configuration for the command-line tool, read from a small TOML subset:
// [table] and [table.sub] headers, key = value with basic or literal strings,
// integers, floats, booleans and (nested, possibly multi-line) arrays.
// Inline tables, dotted keys, dates and multi-line strings are rejected.

#include "qf/cr_structure.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qf {

/// Parses the TOML subset into a JSON object; throws sym::ConfigError with
/// the line number on malformed input.
nlohmann::json parse_toml(const std::string& text);
nlohmann::json load_toml(const std::string& path);

struct SampleSpec {
    std::size_t count = 5;
    std::uint64_t seed = 1;  // always present, so random runs are reproducible
    double box = 1.0;
    double margin = 0.2;
    std::vector<Point4> points;  // explicit points override random sampling
};

struct StructureSource {
    std::string builtin = "heisenberg";
    // coordinate presentations read from a file
    std::optional<std::array<std::string, 3>> mu, lambda, d1;
    std::array<std::string, 3> coordinates{"x1", "x2", "x3"};
    std::string name;
};

struct RunConfig {
    StructureSource structure;
    std::optional<std::string> gauge_tau, gauge_theta;
    bool fefferman = false;
    std::optional<std::string> P, a, s, x, H, psi;
    SampleSpec samples;
    std::optional<double> tolerance;
    std::string format = "text";
    std::optional<std::string> out;
};

StructureSource builtin_source(const std::string& spec);

/// Applies a parsed config document on top of cfg; unknown keys are errors.
void apply_config(RunConfig& cfg, const nlohmann::json& doc);
/// Reads a structure description ([structure] table or top-level keys).
StructureSource read_structure_source(const nlohmann::json& table);
StructurePtr make_structure(const StructureSource& src);

std::vector<Point4> resolve_samples(const SampleSpec& s);

}  // namespace qf
