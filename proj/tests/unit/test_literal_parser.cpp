#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "fcforge/call_parser.hpp"

using namespace fcforge;

namespace {

CallInstruction sample_call() {
    return CallInstruction{"get_info",
                           {{"name", Literal("Li Wei")},
                            {"year", Literal(2023)},
                            {"ratio", Literal(0.5)},
                            {"tags", Literal(Literal::List{Literal("a"), Literal(true), Literal(nullptr)})}}};
}

Literal random_literal(std::mt19937_64& g, int depth) {
    const int kind = std::uniform_int_distribution<int>(0, depth > 0 ? 6 : 4)(g);
    switch (kind) {
        case 0: return Literal(nullptr);
        case 1: return Literal(g() % 2 == 0);
        case 2: return Literal(static_cast<std::int64_t>(g()));
        case 3: {
            double v;
            do {
                const std::uint64_t bits = g();
                std::memcpy(&v, &bits, sizeof v);
            } while (!std::isfinite(v));
            return Literal(v);
        }
        case 4: {
            static const char* const atoms[] = {"x", " ", "\"", "\\", "\n", "'", "ü", "工资", "\x7f", "}", "("};
            std::string s;
            for (int i = std::uniform_int_distribution<int>(0, 8)(g); i > 0; --i) s += atoms[g() % std::size(atoms)];
            return Literal(s);
        }
        case 5: {
            Literal::List l;
            for (int i = std::uniform_int_distribution<int>(0, 3)(g); i > 0; --i) l.push_back(random_literal(g, depth - 1));
            return Literal(l);
        }
        default: {
            Literal::Map m;
            for (int i = std::uniform_int_distribution<int>(0, 3)(g); i > 0; --i) {
                m["key" + std::to_string(g() % 20)] = random_literal(g, depth - 1);
            }
            return Literal(m);
        }
    }
}

}  // namespace

TEST_CASE("serializes canonically in both syntaxes") {
    const auto c = sample_call();
    CHECK(serialize_call(c, CallSyntaxForm::Pythonic) ==
          R"([get_info(name="Li Wei", ratio=0.5, tags=["a", true, null], year=2023)])");
    CHECK(serialize_call(c, CallSyntaxForm::JsonObject) ==
          R"({"name":"get_info","arguments":{"name":"Li Wei","ratio":0.5,"tags":["a",true,null],"year":2023}})");
    const auto arr = serialize_calls({c, c}, CallSyntaxForm::JsonArray);
    const auto back = parse_call(arr);
    REQUIRE(back.ok());
    CHECK(back.form == CallSyntaxForm::JsonArray);
    CHECK(back.calls == std::vector<CallInstruction>{c, c});
}

TEST_CASE("integers and reals stay distinct") {
    auto a = parse_call("f(x=1)");
    auto b = parse_call("f(x=1.0)");
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK(a.calls[0].arguments.at("x").is_int());
    CHECK(b.calls[0].arguments.at("x").is_real());
    CHECK_FALSE(a.calls[0] == b.calls[0]);
}

TEST_CASE("accepts Python spellings and fences") {
    auto o = parse_call("f(a=True, b=None, c=-1e3, d={'k': 'v'})");
    REQUIRE(o.ok());
    const auto& args = o.calls[0].arguments;
    CHECK(args.at("a") == Literal(true));
    CHECK(args.at("b").is_null());
    CHECK(args.at("c") == Literal(-1000.0));
    CHECK(args.at("d") == Literal(Literal::Map{{"k", Literal("v")}}));

    auto fenced = parse_call("```python\n[f(a=1)]\n```");
    REQUIRE(fenced.ok());
    CHECK(fenced.calls[0].tool_name == "f");

    auto stringly = parse_call(R"({"name": "f", "arguments": "{\"a\": 1}"})");
    REQUIRE(stringly.ok());
    CHECK(stringly.form == CallSyntaxForm::JsonObject);
    CHECK(stringly.calls[0].arguments.at("a") == Literal(1));
}

TEST_CASE("reports failures with reason and position") {
    struct Case {
        const char* text;
        ParseReason reason;
        std::size_t position;
    };
    const Case cases[] = {
        {"f(1)", ParseReason::PositionalArg, 2},
        {"f(a=1, a=2)", ParseReason::DuplicateArg, 7},
        {"f(a=\"x", ParseReason::UnterminatedString, 4},
        {"f(a=1) junk", ParseReason::TrailingInput, 7},
        {"", ParseReason::NoCallFound, 0},
        {"[]", ParseReason::EmptyCallList, 0},
    };
    for (const auto& c : cases) {
        INFO(c.text);
        auto o = parse_call(c.text);
        REQUIRE_FALSE(o.ok());
        CHECK(o.failure->reason == c.reason);
        CHECK(o.failure->position == c.position);
        CHECK_FALSE(o.failure->message.empty());
    }
    std::string deep = "f(a=" + std::string(200, '[') + "1" + std::string(200, ']') + ")";
    auto o = parse_call(deep);
    REQUIRE_FALSE(o.ok());
    CHECK(o.failure->reason == ParseReason::NestingTooDeep);
}

TEST_CASE("non-finite reals cannot be serialized") {
    CallInstruction c{"f", {{"x", Literal(std::numeric_limits<double>::infinity())}}};
    CHECK_THROWS_AS(serialize_call(c, CallSyntaxForm::Pythonic), SerializeError);
    c.arguments["x"] = Literal(std::nan(""));
    CHECK_THROWS_AS(serialize_call(c, CallSyntaxForm::JsonObject), SerializeError);
}

TEST_CASE("round trip holds for random nested calls") {
    std::mt19937_64 g(GENERATE(1u, 2u, 3u));
    for (int i = 0; i < 300; ++i) {
        CallInstruction c;
        c.tool_name = "t" + std::to_string(g() % 7);
        for (int a = std::uniform_int_distribution<int>(0, 4)(g); a > 0; --a) {
            c.arguments["p" + std::to_string(g() % 9)] = random_literal(g, 3);
        }
        for (auto form : {CallSyntaxForm::Pythonic, CallSyntaxForm::JsonObject, CallSyntaxForm::JsonArray}) {
            const std::string text = serialize_call(c, form);
            const auto back = parse_call(text);
            INFO(text);
            REQUIRE(back.ok());
            REQUIRE(back.calls.size() == 1);
            CHECK(back.calls[0] == c);
            // Canonical text is a fixed point.
            CHECK(serialize_call(back.calls[0], form) == text);
        }
    }
}

TEST_CASE("mutated valid inputs never crash the parser") {
    std::mt19937_64 g(99);
    const std::string base = serialize_call(sample_call(), CallSyntaxForm::Pythonic);
    for (int i = 0; i < 5000; ++i) {
        std::string s = base;
        for (int m = std::uniform_int_distribution<int>(1, 4)(g); m > 0; --m) {
            const std::size_t pos = g() % s.size();
            switch (g() % 3) {
                case 0: s[pos] = static_cast<char>(g() & 0xff); break;
                case 1: s.erase(pos, 1); break;
                default: s.insert(pos, 1, "()[]{}=,\"'\\"[g() % 11]); break;
            }
            if (s.empty()) s = "x";
        }
        const auto o = parse_call(s);
        if (o.ok()) {
            CHECK_FALSE(o.calls.empty());
        } else {
            CHECK(o.failure->position <= s.size());
        }
    }
}

TEST_CASE("literal json conversion") {
    CHECK(literal_from_json(json::parse("18446744073709551615")).is_real());
    CHECK(literal_from_json(json::parse("-5")) == Literal(-5));
    const Literal nested(Literal::Map{{"a", Literal(Literal::List{Literal(1.5), Literal("x")})}});
    CHECK(literal_from_json(literal_to_json(nested)) == nested);
    const auto call = sample_call();
    CHECK(call_from_json(call_to_json(call)) == call);
}
