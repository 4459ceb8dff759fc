#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fcforge/literal.hpp"
#include "fcforge/util.hpp"

namespace fcforge {

enum class DataType { String, Integer, Number, Boolean, Array, Object };

const char* to_string(DataType t);
std::optional<DataType> parse_data_type(std::string_view s);
/// Whether `value` is an acceptable runtime value for `type`. Integers are
/// accepted for `number`.
bool literal_matches_type(const Literal& value, DataType type);

struct ParamSpec {
    std::string name;
    std::string description;
    DataType type = DataType::String;
    bool required = false;
    std::optional<Literal> default_value;
    std::optional<std::vector<Literal>> examples;
    json extra = json::object();  // unknown keys, preserved on save

    bool operator==(const ParamSpec& o) const {
        return name == o.name && description == o.description && type == o.type && required == o.required &&
               default_value == o.default_value && examples == o.examples && extra == o.extra;
    }
};

struct ToolSpec {
    std::string name;
    std::string description;
    std::vector<ParamSpec> params;
    json extra = json::object();

    const ParamSpec* find_param(std::string_view param_name) const;
    bool operator==(const ToolSpec&) const = default;
};

struct Catalog {
    std::string scenario;
    std::vector<ToolSpec> tools;
    json extra = json::object();

    const ToolSpec* find_tool(std::string_view tool_name) const;
    std::vector<std::string> tool_names() const;
    bool operator==(const Catalog&) const = default;
};

class CatalogError : public Error {
public:
    using Error::Error;
};

/// Parses the catalog schema. Parameters may be given either as the canonical
/// list or as an OpenAI-style `{"type":"object","properties":{..},"required":[..]}`
/// object; both load into the same representation.
Catalog catalog_from_json(const json& j);
json catalog_to_json(const Catalog& c);
json param_to_json(const ParamSpec& p);
json tool_to_json(const ToolSpec& t);
ToolSpec tool_from_json(const json& j);

Catalog load_catalog(const std::filesystem::path& path);
void save_catalog(const Catalog& c, const std::filesystem::path& path);

/// Throws CatalogError naming the first offending tool or parameter.
void check_catalog(const Catalog& c);

enum class IssueKind { EmptyDescription, ShortDescription, ParamUndocumented, MissingExamples };
const char* to_string(IssueKind k);

struct Issue {
    IssueKind kind;
    std::string tool;
    std::string param;  // empty for tool-level lints
    std::string message;
};

struct LintOptions {
    std::size_t min_description_length = 10;
};

/// Quality lints; never fails.
std::vector<Issue> validate_catalog(const Catalog& c, const LintOptions& opts = {});

enum class DescriptionVariant { Long, Short, None };
std::optional<DescriptionVariant> parse_description_variant(std::string_view s);

/// Rewrites tool descriptions. `Short` needs an override for every tool;
/// names, parameters and order are never touched.
Catalog description_variant(const Catalog& c, DescriptionVariant variant,
                            const std::map<std::string, std::string>& overrides = {});

}  // namespace fcforge
