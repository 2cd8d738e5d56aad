#pragma once

// Minimal JSON Schema checker covering the keywords used by schemas/:
// type, enum, required, properties, additionalProperties, items, minItems,
// minimum, maximum, pattern, oneOf and $ref (local definitions or sibling files).

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <regex>
#include <string>
#include <vector>

namespace schema {

using Json = nlohmann::json;

class Validator {
public:
    explicit Validator(std::filesystem::path dir) : dir_(std::move(dir)) {}

    /// Returns one message per violation; empty when `doc` conforms.
    std::vector<std::string> validate(const Json& doc, const std::string& schema_file) const
    {
        std::vector<std::string> errors;
        const Json root = load(schema_file);
        check(doc, root, root, "$", errors);
        return errors;
    }

private:
    std::filesystem::path dir_;

    Json load(const std::string& file) const
    {
        std::ifstream in(dir_ / file);
        if (!in)
            throw std::runtime_error("schema not found: " + file);
        return Json::parse(in);
    }

    static bool has_type(const Json& v, const std::string& t)
    {
        if (t == "object")
            return v.is_object();
        if (t == "array")
            return v.is_array();
        if (t == "string")
            return v.is_string();
        if (t == "integer")
            return v.is_number_integer();
        if (t == "number")
            return v.is_number();
        if (t == "boolean")
            return v.is_boolean();
        if (t == "null")
            return v.is_null();
        return false;
    }

    void check(const Json& v, const Json& s, const Json& root, const std::string& path,
               std::vector<std::string>& errors) const
    {
        if (s.contains("$ref")) {
            const std::string ref = s["$ref"];
            if (ref.rfind("#/definitions/", 0) == 0) {
                check(v, root.at("definitions").at(ref.substr(14)), root, path, errors);
            } else {
                const Json other = load(ref);
                check(v, other, other, path, errors);
            }
            return;
        }
        if (s.contains("oneOf")) {
            int matches = 0;
            for (const auto& alt : s["oneOf"]) {
                std::vector<std::string> sub;
                check(v, alt, root, path, sub);
                matches += sub.empty();
            }
            if (matches != 1)
                errors.push_back(path + ": matches " + std::to_string(matches) + " oneOf alternatives");
            return;
        }
        if (s.contains("type")) {
            const Json& t = s["type"];
            bool ok = false;
            if (t.is_string())
                ok = has_type(v, t);
            else
                for (const auto& x : t)
                    ok = ok || has_type(v, x);
            if (!ok) {
                errors.push_back(path + ": expected type " + t.dump());
                return;
            }
        }
        if (s.contains("enum")) {
            bool found = false;
            for (const auto& e : s["enum"])
                found = found || e == v;
            if (!found)
                errors.push_back(path + ": value " + v.dump() + " not in enum");
        }
        if (v.is_number()) {
            if (s.contains("minimum") && v.get<double>() < s["minimum"].get<double>())
                errors.push_back(path + ": below minimum");
            if (s.contains("maximum") && v.get<double>() > s["maximum"].get<double>())
                errors.push_back(path + ": above maximum");
        }
        if (v.is_string() && s.contains("pattern") &&
            !std::regex_search(v.get<std::string>(), std::regex(s["pattern"].get<std::string>())))
            errors.push_back(path + ": does not match pattern");
        if (v.is_array()) {
            if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>())
                errors.push_back(path + ": fewer than minItems");
            if (s.contains("items"))
                for (std::size_t i = 0; i < v.size(); ++i)
                    check(v[i], s["items"], root, path + "[" + std::to_string(i) + "]", errors);
        }
        if (v.is_object()) {
            if (s.contains("required"))
                for (const auto& key : s["required"])
                    if (!v.contains(key.get<std::string>()))
                        errors.push_back(path + ": missing required '" + key.get<std::string>() + "'");
            const Json props = s.value("properties", Json::object());
            for (const auto& [key, value] : v.items()) {
                if (props.contains(key)) {
                    check(value, props[key], root, path + "." + key, errors);
                } else if (s.contains("additionalProperties")) {
                    const Json& extra = s["additionalProperties"];
                    if (extra.is_boolean()) {
                        if (!extra.get<bool>())
                            errors.push_back(path + ": unexpected property '" + key + "'");
                    } else {
                        check(value, extra, root, path + "." + key, errors);
                    }
                }
            }
        }
    }
};

} // namespace schema
