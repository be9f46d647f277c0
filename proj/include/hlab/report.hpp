#pragma once

#include <chrono>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace hlab {

/// Machine-readable record of one verified identity. pass <=> defect <= tolerance.
struct DefectReport {
    std::string check;
    std::string system;
    std::size_t depth = 0;
    nlohmann::json params = nlohmann::json::object();
    double defect = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    double wall_time = 0.0;  // seconds
    nlohmann::json details = nlohmann::json::object();

    static DefectReport make(std::string check, std::string system, std::size_t depth, double defect, double tolerance,
                             nlohmann::json params = nlohmann::json::object()) {
        DefectReport r;
        r.check = std::move(check);
        r.system = std::move(system);
        r.depth = depth;
        r.params = std::move(params);
        r.defect = defect;
        r.tolerance = tolerance;
        r.pass = std::isfinite(defect) && defect <= tolerance;
        return r;
    }
};

// Non-finite defects serialise as null so the output stays valid JSON.
inline void to_json(nlohmann::json& j, const DefectReport& r) {
    j = nlohmann::json{{"check", r.check},
                       {"system", r.system},
                       {"depth", r.depth},
                       {"params", r.params},
                       {"defect", std::isfinite(r.defect) ? nlohmann::json(r.defect) : nlohmann::json(nullptr)},
                       {"tolerance", r.tolerance},
                       {"pass", r.pass},
                       {"wall_time", r.wall_time}};
    if (!r.details.empty()) j["details"] = r.details;
}

inline void from_json(const nlohmann::json& j, DefectReport& r) {
    try {
        r.check = j.at("check").get<std::string>();
        r.system = j.at("system").get<std::string>();
        r.depth = j.at("depth").get<std::size_t>();
        r.params = j.value("params", nlohmann::json::object());
        r.defect = j.at("defect").is_null() ? std::nan("") : j.at("defect").get<double>();
        r.tolerance = j.at("tolerance").get<double>();
        r.pass = j.at("pass").get<bool>();
        r.wall_time = j.value("wall_time", 0.0);
        r.details = j.value("details", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed defect report: ") + e.what());
    }
    if (r.pass != (std::isfinite(r.defect) && r.defect <= r.tolerance)) {
        throw InputError("defect report '" + r.check + "' has a pass flag inconsistent with its defect");
    }
}

/// JSON schema for a single report line.
inline nlohmann::json defect_report_schema() {
    return nlohmann::json::parse(R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "DefectReport",
  "type": "object",
  "required": ["check", "system", "depth", "params", "defect", "tolerance", "pass", "wall_time"],
  "properties": {
    "check": {"type": "string"},
    "system": {"type": "string"},
    "depth": {"type": "integer", "minimum": 0},
    "params": {"type": "object"},
    "defect": {"type": ["number", "null"]},
    "tolerance": {"type": "number"},
    "pass": {"type": "boolean"},
    "wall_time": {"type": "number", "minimum": 0},
    "details": {"type": "object"}
  }
})");
}

/// Times `fn` and stores the elapsed seconds in the returned report.
template <class Fn>
DefectReport timed(Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    DefectReport r = fn();
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace hlab
