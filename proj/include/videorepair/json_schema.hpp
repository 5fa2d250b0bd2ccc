// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Validator for the subset of JSON Schema used by the shipped v1 protocol and config
// schemas: type, enum, const, properties, required, additionalProperties, items,
// minItems/maxItems, minLength, minimum/maximum, exclusiveMinimum, oneOf, anyOf and
// local "#/$defs/..." references.

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace videorepair::schema {

using nlohmann::json;

class Validator {
public:
    explicit Validator(json document) : root_(std::move(document)) {}

    /// Empty result means valid.
    std::vector<std::string> validate(const json& instance) const {
        std::vector<std::string> errors;
        check(root_, instance, "", errors);
        return errors;
    }

    /// Validate against one definition of the document, e.g. "#/$defs/vqa_request".
    std::vector<std::string> validate(const json& instance, const std::string& ref) const {
        std::vector<std::string> errors;
        check(json{{"$ref", ref}}, instance, "", errors);
        return errors;
    }

    bool is_valid(const json& instance) const { return validate(instance).empty(); }

    const json& document() const noexcept { return root_; }

private:
    json root_;

    const json& resolve(const json& node) const {
        if (!node.is_object() || !node.contains("$ref")) return node;
        const std::string ref = node["$ref"].get<std::string>();
        if (ref.rfind("#/", 0) != 0) throw std::invalid_argument("only local schema refs are supported: " + ref);
        return resolve(root_.at(json::json_pointer(ref.substr(1))));
    }

    static bool type_matches(const std::string& type, const json& v) {
        if (type == "object") return v.is_object();
        if (type == "array") return v.is_array();
        if (type == "string") return v.is_string();
        if (type == "boolean") return v.is_boolean();
        if (type == "null") return v.is_null();
        if (type == "integer") return v.is_number_integer();
        if (type == "number") return v.is_number();
        return false;
    }

    void check(const json& raw_schema, const json& v, const std::string& path, std::vector<std::string>& errors) const {
        const json& s = resolve(raw_schema);
        if (s.is_boolean()) {
            if (!s.get<bool>()) errors.push_back(at(path) + "no value allowed");
            return;
        }
        if (auto it = s.find("type"); it != s.end()) {
            bool ok = false;
            if (it->is_string()) {
                ok = type_matches(it->get<std::string>(), v);
            } else {
                for (const auto& t : *it) ok = ok || type_matches(t.get<std::string>(), v);
            }
            if (!ok) {
                errors.push_back(at(path) + "expected type " + it->dump() + ", got " + v.type_name());
                return;
            }
        }
        if (auto it = s.find("const"); it != s.end() && *it != v) {
            errors.push_back(at(path) + "expected constant " + it->dump());
        }
        if (auto it = s.find("enum"); it != s.end()) {
            bool found = false;
            for (const auto& e : *it) found = found || e == v;
            if (!found) errors.push_back(at(path) + "value " + v.dump() + " not in " + it->dump());
        }
        if (v.is_string()) {
            if (auto it = s.find("minLength"); it != s.end() && v.get<std::string>().size() < it->get<std::size_t>()) {
                errors.push_back(at(path) + "string shorter than " + it->dump());
            }
        }
        if (v.is_number()) {
            const double x = v.get<double>();
            if (auto it = s.find("minimum"); it != s.end() && x < it->get<double>()) {
                errors.push_back(at(path) + "value below minimum " + it->dump());
            }
            if (auto it = s.find("maximum"); it != s.end() && x > it->get<double>()) {
                errors.push_back(at(path) + "value above maximum " + it->dump());
            }
            if (auto it = s.find("exclusiveMinimum"); it != s.end() && x <= it->get<double>()) {
                errors.push_back(at(path) + "value not above " + it->dump());
            }
        }
        if (v.is_array()) {
            if (auto it = s.find("minItems"); it != s.end() && v.size() < it->get<std::size_t>()) {
                errors.push_back(at(path) + "fewer than " + it->dump() + " items");
            }
            if (auto it = s.find("maxItems"); it != s.end() && v.size() > it->get<std::size_t>()) {
                errors.push_back(at(path) + "more than " + it->dump() + " items");
            }
            if (auto it = s.find("items"); it != s.end()) {
                for (std::size_t i = 0; i < v.size(); ++i) check(*it, v[i], path + "/" + std::to_string(i), errors);
            }
        }
        if (v.is_object()) {
            if (auto it = s.find("required"); it != s.end()) {
                for (const auto& key : *it) {
                    if (!v.contains(key.get<std::string>())) {
                        errors.push_back(at(path) + "missing required property '" + key.get<std::string>() + "'");
                    }
                }
            }
            const json* props = s.contains("properties") ? &s["properties"] : nullptr;
            const json* extra = s.contains("additionalProperties") ? &s["additionalProperties"] : nullptr;
            for (const auto& [key, value] : v.items()) {
                const std::string child = path + "/" + key;
                if (props && props->contains(key)) {
                    check((*props)[key], value, child, errors);
                } else if (extra) {
                    check(*extra, value, child, errors);
                }
            }
        }
        if (auto it = s.find("oneOf"); it != s.end()) {
            int matched = 0;
            for (const auto& branch : *it) {
                std::vector<std::string> sub;
                check(branch, v, path, sub);
                matched += sub.empty() ? 1 : 0;
            }
            if (matched != 1) {
                errors.push_back(at(path) + "expected exactly one oneOf branch to match, " + std::to_string(matched) + " did");
            }
        }
        if (auto it = s.find("anyOf"); it != s.end()) {
            bool any = false;
            for (const auto& branch : *it) {
                std::vector<std::string> sub;
                check(branch, v, path, sub);
                any = any || sub.empty();
            }
            if (!any) errors.push_back(at(path) + "no anyOf branch matched");
        }
    }

    static std::string at(const std::string& path) { return (path.empty() ? std::string("/") : path) + ": "; }
};

}  // namespace videorepair::schema
