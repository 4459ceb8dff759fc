#include "fcforge/catalog.hpp"

#include <set>

namespace fcforge {

const char* to_string(DataType t) {
    switch (t) {
    case DataType::String: return "string";
    case DataType::Integer: return "integer";
    case DataType::Number: return "number";
    case DataType::Boolean: return "boolean";
    case DataType::Array: return "array";
    case DataType::Object: return "object";
    }
    return "string";
}

std::optional<DataType> parse_data_type(std::string_view s) {
    if (s == "string") return DataType::String;
    if (s == "integer") return DataType::Integer;
    if (s == "number" || s == "float") return DataType::Number;
    if (s == "boolean") return DataType::Boolean;
    if (s == "array") return DataType::Array;
    if (s == "object" || s == "dict") return DataType::Object;
    return std::nullopt;
}

bool literal_matches_type(const Literal& v, DataType t) {
    switch (t) {
    case DataType::String: return v.is_string();
    case DataType::Integer: return v.is_int();
    case DataType::Number: return v.is_number();
    case DataType::Boolean: return v.is_bool();
    case DataType::Array: return v.is_list();
    case DataType::Object: return v.is_map();
    }
    return false;
}

const ParamSpec* ToolSpec::find_param(std::string_view param_name) const {
    for (const auto& p : params) {
        if (p.name == param_name) return &p;
    }
    return nullptr;
}

const ToolSpec* Catalog::find_tool(std::string_view tool_name) const {
    for (const auto& t : tools) {
        if (t.name == tool_name) return &t;
    }
    return nullptr;
}

std::vector<std::string> Catalog::tool_names() const {
    std::vector<std::string> names;
    names.reserve(tools.size());
    for (const auto& t : tools) names.push_back(t.name);
    return names;
}

namespace {

std::string get_string(const json& j, const char* key, const std::string& where, bool required) {
    if (!j.contains(key)) {
        if (required) throw CatalogError(where + ": missing \"" + key + "\"");
        return {};
    }
    if (!j.at(key).is_string()) throw CatalogError(where + ": \"" + key + "\" must be a string");
    return j.at(key).get<std::string>();
}

json leftover(const json& j, std::initializer_list<const char*> known) {
    json extra = json::object();
    for (const auto& [k, v] : j.items()) {
        bool is_known = false;
        for (const char* kk : known) is_known = is_known || k == kk;
        if (!is_known) extra[k] = v;
    }
    return extra;
}

ParamSpec param_from_json(const json& j, const std::string& tool, const std::string& fallback_name,
                          std::optional<bool> required_override) {
    if (!j.is_object()) throw CatalogError("tool " + tool + ": parameter entry must be an object");
    ParamSpec p;
    p.name = j.contains("name") ? get_string(j, "name", "tool " + tool, true) : fallback_name;
    std::string where = "tool " + tool + ", param " + (p.name.empty() ? "<unnamed>" : p.name);
    p.description = get_string(j, "description", where, false);
    std::string type = get_string(j, "type", where, true);
    auto dt = parse_data_type(type);
    if (!dt) throw CatalogError(where + ": unknown type \"" + type + "\"");
    p.type = *dt;
    if (required_override) {
        p.required = *required_override;
    } else if (j.contains("required")) {
        if (!j.at("required").is_boolean()) throw CatalogError(where + ": \"required\" must be a boolean");
        p.required = j.at("required").get<bool>();
    }
    if (j.contains("default")) p.default_value = literal_from_json(j.at("default"));
    if (j.contains("examples")) {
        if (!j.at("examples").is_array()) throw CatalogError(where + ": \"examples\" must be an array");
        std::vector<Literal> ex;
        for (const auto& e : j.at("examples")) ex.push_back(literal_from_json(e));
        p.examples = std::move(ex);
    }
    if (required_override) {
        p.extra = leftover(j, {"description", "type", "default", "examples"});
    } else {
        p.extra = leftover(j, {"name", "description", "type", "required", "default", "examples"});
    }
    return p;
}

}  // namespace

ToolSpec tool_from_json(const json& j) {
    if (!j.is_object()) throw CatalogError("tool entry must be an object");
    ToolSpec t;
    t.name = get_string(j, "name", "tool", true);
    t.description = get_string(j, "description", "tool " + t.name, false);
    if (j.contains("parameters")) {
        const auto& params = j.at("parameters");
        if (params.is_array()) {
            for (const auto& pj : params) t.params.push_back(param_from_json(pj, t.name, {}, std::nullopt));
        } else if (params.is_object()) {
            // OpenAI / JSON-schema shape.
            std::set<std::string> required;
            if (params.contains("required")) {
                for (const auto& r : params.at("required")) required.insert(r.get<std::string>());
            }
            if (params.contains("properties")) {
                for (const auto& [name, pj] : params.at("properties").items()) {
                    t.params.push_back(param_from_json(pj, t.name, name, required.count(name) > 0));
                }
            }
        } else {
            throw CatalogError("tool " + t.name + ": \"parameters\" must be a list or an object");
        }
    }
    t.extra = leftover(j, {"name", "description", "parameters"});
    return t;
}

void check_catalog(const Catalog& c) {
    std::set<std::string> tool_names;
    for (const auto& t : c.tools) {
        if (t.name.empty()) throw CatalogError("tool with empty name");
        if (!tool_names.insert(t.name).second) throw CatalogError("duplicate tool name \"" + t.name + "\"");
        std::set<std::string> param_names;
        for (const auto& p : t.params) {
            if (p.name.empty()) throw CatalogError("tool " + t.name + ": parameter with empty name");
            if (!param_names.insert(p.name).second) {
                throw CatalogError("tool " + t.name + ": duplicate parameter \"" + p.name + "\"");
            }
            if (p.default_value && !literal_matches_type(*p.default_value, p.type)) {
                throw CatalogError("tool " + t.name + ", param " + p.name + ": default is a " +
                                   kind_name(p.default_value->kind()) + ", expected " + to_string(p.type));
            }
        }
    }
}

Catalog catalog_from_json(const json& j) {
    if (!j.is_object()) throw CatalogError("catalog must be a JSON object");
    Catalog c;
    c.scenario = get_string(j, "scenario", "catalog", false);
    if (j.contains("tools")) {
        if (!j.at("tools").is_array()) throw CatalogError("\"tools\" must be an array");
        for (const auto& tj : j.at("tools")) c.tools.push_back(tool_from_json(tj));
    }
    c.extra = leftover(j, {"scenario", "tools"});
    check_catalog(c);
    return c;
}

json param_to_json(const ParamSpec& p) {
    json j = json::object();
    j["name"] = p.name;
    j["description"] = p.description;
    j["type"] = to_string(p.type);
    j["required"] = p.required;
    if (p.default_value) j["default"] = literal_to_json(*p.default_value);
    if (p.examples) {
        json ex = json::array();
        for (const auto& e : *p.examples) ex.push_back(literal_to_json(e));
        j["examples"] = std::move(ex);
    }
    for (const auto& [k, v] : p.extra.items()) j[k] = v;
    return j;
}

json tool_to_json(const ToolSpec& t) {
    json j = json::object();
    j["name"] = t.name;
    j["description"] = t.description;
    json params = json::array();
    for (const auto& p : t.params) params.push_back(param_to_json(p));
    j["parameters"] = std::move(params);
    for (const auto& [k, v] : t.extra.items()) j[k] = v;
    return j;
}

json catalog_to_json(const Catalog& c) {
    json j = json::object();
    j["scenario"] = c.scenario;
    json tools = json::array();
    for (const auto& t : c.tools) tools.push_back(tool_to_json(t));
    j["tools"] = std::move(tools);
    for (const auto& [k, v] : c.extra.items()) j[k] = v;
    return j;
}

Catalog load_catalog(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw CatalogError(path.string() + ": " + e.what());
    }
    return catalog_from_json(j);
}

void save_catalog(const Catalog& c, const std::filesystem::path& path) {
    write_file(path, catalog_to_json(c).dump(2) + "\n");
}

const char* to_string(IssueKind k) {
    switch (k) {
    case IssueKind::EmptyDescription: return "EmptyDescription";
    case IssueKind::ShortDescription: return "ShortDescription";
    case IssueKind::ParamUndocumented: return "ParamUndocumented";
    case IssueKind::MissingExamples: return "MissingExamples";
    }
    return "?";
}

std::vector<Issue> validate_catalog(const Catalog& c, const LintOptions& opts) {
    std::vector<Issue> issues;
    for (const auto& t : c.tools) {
        auto desc = trim_ascii(t.description);
        if (desc.empty()) {
            issues.push_back({IssueKind::EmptyDescription, t.name, {}, "tool has no description"});
        } else if (utf8_length(desc) < opts.min_description_length) {
            issues.push_back({IssueKind::ShortDescription, t.name, {},
                              "description shorter than " + std::to_string(opts.min_description_length) +
                                  " characters"});
        }
        for (const auto& p : t.params) {
            if (trim_ascii(p.description).empty()) {
                issues.push_back({IssueKind::ParamUndocumented, t.name, p.name, "parameter has no description"});
            }
            if (p.required && (!p.examples || p.examples->empty())) {
                issues.push_back({IssueKind::MissingExamples, t.name, p.name, "required parameter has no examples"});
            }
        }
    }
    return issues;
}

std::optional<DescriptionVariant> parse_description_variant(std::string_view s) {
    if (s == "long") return DescriptionVariant::Long;
    if (s == "short") return DescriptionVariant::Short;
    if (s == "none") return DescriptionVariant::None;
    return std::nullopt;
}

Catalog description_variant(const Catalog& c, DescriptionVariant variant,
                            const std::map<std::string, std::string>& overrides) {
    Catalog out = c;
    switch (variant) {
    case DescriptionVariant::Long: break;
    case DescriptionVariant::Short:
        for (auto& t : out.tools) {
            auto it = overrides.find(t.name);
            if (it == overrides.end()) throw CatalogError("no short description override for tool \"" + t.name + "\"");
            t.description = it->second;
        }
        break;
    case DescriptionVariant::None:
        for (auto& t : out.tools) t.description.clear();
        break;
    }
    return out;
}

}  // namespace fcforge
