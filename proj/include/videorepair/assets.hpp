// Copyright (C) 2026 The VideoRepair Engine Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "videorepair/errors.hpp"
#include "videorepair/json_schema.hpp"

#ifndef VIDEOREPAIR_DEFAULT_DATA_DIR
#define VIDEOREPAIR_DEFAULT_DATA_DIR "share/videorepair"
#endif

namespace videorepair::assets {

namespace fs = std::filesystem;

/// Data directory: explicit override, then $VIDEOREPAIR_DATA_DIR, then the build-time default.
inline fs::path data_dir(const std::string& override_dir = {}) {
    if (!override_dir.empty()) return override_dir;
    if (const char* env = std::getenv("VIDEOREPAIR_DATA_DIR"); env && *env) return env;
    return VIDEOREPAIR_DEFAULT_DATA_DIR;
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("unable to read asset " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline nlohmann::json read_json(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// Prompt templates. Leading "# " lines are metadata and are stripped; `{name}`
/// placeholders are substituted by `render`.
class TemplateSet {
public:
    static constexpr const char* kNames[] = {"question_generation", "vqa_count",  "vqa_attribute",
                                             "key_object_selection", "refinement_prompt", "paraphrase"};

    static TemplateSet load(const fs::path& root, const std::string& version = "v1") {
        TemplateSet set;
        for (const char* name : kNames) {
            const std::string text = read_text(root / "templates" / version / (std::string(name) + ".txt"));
            std::istringstream lines(text);
            std::string line, body;
            bool header = true;
            while (std::getline(lines, line)) {
                if (header && line.rfind("# ", 0) == 0) continue;
                header = false;
                body += line;
                body += '\n';
            }
            set.templates_[name] = body;
        }
        return set;
    }

    const std::string& get(const std::string& name) const {
        auto it = templates_.find(name);
        if (it == templates_.end()) throw ConfigError("unknown prompt template " + name);
        return it->second;
    }

    std::string render(const std::string& name, const std::map<std::string, std::string>& values) const {
        std::string out = get(name);
        for (const auto& [key, value] : values) {
            const std::string token = "{" + key + "}";
            for (std::size_t pos = out.find(token); pos != std::string::npos; pos = out.find(token, pos + value.size())) {
                out.replace(pos, token.size(), value);
            }
        }
        return out;
    }

private:
    std::map<std::string, std::string> templates_;
};

/// The versioned protocol, config and scenario schemas.
class SchemaRegistry {
public:
    static std::shared_ptr<const SchemaRegistry> load(const fs::path& root, const std::string& version = "v1") {
        auto reg = std::make_shared<SchemaRegistry>();
        const fs::path dir = root / "schemas" / version;
        reg->protocol_ = std::make_unique<schema::Validator>(read_json(dir / "protocol.schema.json"));
        reg->config_ = std::make_unique<schema::Validator>(read_json(dir / "config.schema.json"));
        reg->scenario_ = std::make_unique<schema::Validator>(read_json(dir / "scenario.schema.json"));
        return reg;
    }

    /// Errors of `instance` against protocol definition `def` (e.g. "vqa_request").
    std::vector<std::string> check(const std::string& def, const nlohmann::json& instance) const {
        return protocol_->validate(instance, "#/$defs/" + def);
    }
    const schema::Validator& config() const { return *config_; }
    const schema::Validator& scenario() const { return *scenario_; }

private:
    std::unique_ptr<schema::Validator> protocol_;
    std::unique_ptr<schema::Validator> config_;
    std::unique_ptr<schema::Validator> scenario_;
};

inline std::string join_errors(const std::vector<std::string>& errors) {
    std::string out;
    for (const auto& e : errors) {
        if (!out.empty()) out += "; ";
        out += e;
    }
    return out;
}

}  // namespace videorepair::assets
