#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace fcforge {

using json = nlohmann::ordered_json;

/// A literal argument value as it appears in a function call.
///
/// Integers and reals are distinct kinds: `3` and `3.0` are different
/// literals here. Cross-kind numeric comparison is left to the evaluator.
class Literal {
public:
    struct Null {
        bool operator==(const Null&) const = default;
    };
    using List = std::vector<Literal>;
    using Map = std::map<std::string, Literal>;
    using Storage = std::variant<Null, bool, std::int64_t, double, std::string, List, Map>;

    enum class Kind { Null, Boolean, Integer, Real, String, List, Map };

    Literal() = default;
    Literal(std::nullptr_t) {}
    Literal(bool v) : value_(v) {}
    Literal(int v) : value_(static_cast<std::int64_t>(v)) {}
    Literal(std::int64_t v) : value_(v) {}
    Literal(double v) : value_(v) {}
    Literal(const char* v) : value_(std::string(v)) {}
    Literal(std::string v) : value_(std::move(v)) {}
    Literal(List v) : value_(std::move(v)) {}
    Literal(Map v) : value_(std::move(v)) {}

    Kind kind() const { return static_cast<Kind>(value_.index()); }

    bool is_null() const { return kind() == Kind::Null; }
    bool is_bool() const { return kind() == Kind::Boolean; }
    bool is_int() const { return kind() == Kind::Integer; }
    bool is_real() const { return kind() == Kind::Real; }
    bool is_number() const { return is_int() || is_real(); }
    bool is_string() const { return kind() == Kind::String; }
    bool is_list() const { return kind() == Kind::List; }
    bool is_map() const { return kind() == Kind::Map; }

    bool as_bool() const { return std::get<bool>(value_); }
    std::int64_t as_int() const { return std::get<std::int64_t>(value_); }
    double as_real() const { return std::get<double>(value_); }
    double as_number() const { return is_int() ? static_cast<double>(as_int()) : as_real(); }
    const std::string& as_string() const { return std::get<std::string>(value_); }
    const List& as_list() const { return std::get<List>(value_); }
    const Map& as_map() const { return std::get<Map>(value_); }

    const Storage& storage() const { return value_; }

    /// Structural equality; kinds must match exactly (no int/real coercion).
    bool operator==(const Literal& other) const { return value_ == other.value_; }

private:
    Storage value_;
};

const char* kind_name(Literal::Kind kind);

/// Converts JSON to a literal. Unsigned and signed JSON integers both map to
/// Integer; values above INT64_MAX become Real.
Literal literal_from_json(const json& j);
json literal_to_json(const Literal& lit);

/// A parsed function call: tool name plus keyword arguments.
struct CallInstruction {
    std::string tool_name;
    std::map<std::string, Literal> arguments;

    bool operator==(const CallInstruction&) const = default;
};

json call_to_json(const CallInstruction& call);
CallInstruction call_from_json(const json& j);

}  // namespace fcforge
