#include "fcforge/literal.hpp"

#include <limits>
#include <stdexcept>

namespace fcforge {

const char* kind_name(Literal::Kind kind) {
    switch (kind) {
    case Literal::Kind::Null: return "null";
    case Literal::Kind::Boolean: return "boolean";
    case Literal::Kind::Integer: return "integer";
    case Literal::Kind::Real: return "real";
    case Literal::Kind::String: return "string";
    case Literal::Kind::List: return "list";
    case Literal::Kind::Map: return "map";
    }
    return "unknown";
}

Literal literal_from_json(const json& j) {
    switch (j.type()) {
    case json::value_t::null: return Literal{};
    case json::value_t::boolean: return Literal{j.get<bool>()};
    case json::value_t::number_integer: return Literal{j.get<std::int64_t>()};
    case json::value_t::number_unsigned: {
        auto u = j.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            return Literal{static_cast<double>(u)};
        }
        return Literal{static_cast<std::int64_t>(u)};
    }
    case json::value_t::number_float: return Literal{j.get<double>()};
    case json::value_t::string: return Literal{j.get<std::string>()};
    case json::value_t::array: {
        Literal::List items;
        items.reserve(j.size());
        for (const auto& e : j) items.push_back(literal_from_json(e));
        return Literal{std::move(items)};
    }
    case json::value_t::object: {
        Literal::Map m;
        for (const auto& [k, v] : j.items()) m[k] = literal_from_json(v);
        return Literal{std::move(m)};
    }
    default: break;
    }
    throw std::invalid_argument("unsupported JSON value for a literal");
}

json literal_to_json(const Literal& lit) {
    switch (lit.kind()) {
    case Literal::Kind::Null: return nullptr;
    case Literal::Kind::Boolean: return lit.as_bool();
    case Literal::Kind::Integer: return lit.as_int();
    case Literal::Kind::Real: return lit.as_real();
    case Literal::Kind::String: return lit.as_string();
    case Literal::Kind::List: {
        json arr = json::array();
        for (const auto& e : lit.as_list()) arr.push_back(literal_to_json(e));
        return arr;
    }
    case Literal::Kind::Map: {
        json obj = json::object();
        for (const auto& [k, v] : lit.as_map()) obj[k] = literal_to_json(v);
        return obj;
    }
    }
    return nullptr;
}

json call_to_json(const CallInstruction& call) {
    json args = json::object();
    for (const auto& [k, v] : call.arguments) args[k] = literal_to_json(v);
    return json{{"tool_name", call.tool_name}, {"arguments", std::move(args)}};
}

CallInstruction call_from_json(const json& j) {
    CallInstruction call;
    call.tool_name = j.at("tool_name").get<std::string>();
    if (j.contains("arguments")) {
        const auto& args = j.at("arguments");
        if (!args.is_object()) throw std::invalid_argument("call arguments must be an object");
        for (const auto& [k, v] : args.items()) call.arguments[k] = literal_from_json(v);
    }
    return call;
}

}  // namespace fcforge
