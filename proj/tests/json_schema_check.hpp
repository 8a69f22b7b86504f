#pragma once

// Validator for the JSON Schema keywords used by docs/report.schema.json:
// type, required, properties, additionalProperties, items, minItems, minimum, maximum, local $ref.

#include <json.hpp>

#include <string>
#include <vector>

namespace schema_check {

using nlohmann::json;

inline bool has_type(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "number") return v.is_number();
    if (t == "integer") return v.is_number_integer();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    return false;
}

inline void check(const json& v, const json& s, const json& root, const std::string& at,
                  std::vector<std::string>& errs) {
    if (s.contains("$ref")) {
        const auto ref = s["$ref"].get<std::string>();
        check(v, root.at(json::json_pointer(ref.substr(1))), root, at, errs);
        return;
    }
    if (s.contains("type")) {
        bool ok = false;
        if (s["type"].is_array()) {
            for (const auto& t : s["type"]) ok = ok || has_type(v, t.get<std::string>());
        } else {
            ok = has_type(v, s["type"].get<std::string>());
        }
        if (!ok) {
            errs.push_back(at + ": wrong type");
            return;
        }
    }
    if (v.is_number()) {
        if (s.contains("minimum") && v.get<double>() < s["minimum"].get<double>()) errs.push_back(at + ": below minimum");
        if (s.contains("maximum") && v.get<double>() > s["maximum"].get<double>()) errs.push_back(at + ": above maximum");
    }
    if (v.is_object()) {
        for (const auto& r : s.value("required", json::array())) {
            if (!v.contains(r.get<std::string>())) errs.push_back(at + ": missing " + r.get<std::string>());
        }
        const json props = s.value("properties", json::object());
        for (const auto& [k, item] : v.items()) {
            if (props.contains(k)) {
                check(item, props[k], root, at + "/" + k, errs);
            } else if (s.contains("additionalProperties")) {
                const json& extra = s["additionalProperties"];
                if (extra.is_boolean()) {
                    if (!extra.get<bool>()) errs.push_back(at + ": unexpected " + k);
                } else {
                    check(item, extra, root, at + "/" + k, errs);
                }
            }
        }
    }
    if (v.is_array()) {
        if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) errs.push_back(at + ": too few items");
        if (s.contains("items")) {
            for (std::size_t i = 0; i < v.size(); ++i) check(v[i], s["items"], root, at + "/" + std::to_string(i), errs);
        }
    }
}

inline std::vector<std::string> errors(const json& value, const json& schema) {
    std::vector<std::string> errs;
    check(value, schema, schema, "", errs);
    return errs;
}

} // namespace schema_check
