#include "fcforge/call_parser.hpp"

#include <charconv>
#include <cmath>
#include <set>

namespace fcforge {

const char* to_string(CallSyntaxForm form) {
    switch (form) {
    case CallSyntaxForm::Pythonic: return "pythonic";
    case CallSyntaxForm::JsonObject: return "json_object";
    case CallSyntaxForm::JsonArray: return "json_array";
    }
    return "?";
}

const char* to_string(ParseReason reason) {
    switch (reason) {
    case ParseReason::NoCallFound: return "NoCallFound";
    case ParseReason::UnexpectedChar: return "UnexpectedChar";
    case ParseReason::UnexpectedEnd: return "UnexpectedEnd";
    case ParseReason::UnterminatedString: return "UnterminatedString";
    case ParseReason::InvalidEscape: return "InvalidEscape";
    case ParseReason::InvalidNumber: return "InvalidNumber";
    case ParseReason::PositionalArg: return "PositionalArg";
    case ParseReason::DuplicateArg: return "DuplicateArg";
    case ParseReason::DuplicateKey: return "DuplicateKey";
    case ParseReason::MissingName: return "MissingName";
    case ParseReason::BadArguments: return "BadArguments";
    case ParseReason::EmptyCallList: return "EmptyCallList";
    case ParseReason::NestingTooDeep: return "NestingTooDeep";
    case ParseReason::TrailingInput: return "TrailingInput";
    }
    return "?";
}

namespace {

constexpr int kMaxDepth = 64;

struct Fail {
    std::size_t position;
    ParseReason reason;
    std::string message;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Recursive-descent parser over text[begin, end). Positions are offsets into
// the full text so failures point into the caller's original input.
class Parser {
public:
    Parser(std::string_view text, std::size_t begin, std::size_t end) : text_(text), pos_(begin), end_(end) {}

    std::size_t pos() const { return pos_; }
    void reset(std::size_t pos) { pos_ = pos; }

    [[noreturn]] void fail(ParseReason reason, std::string message) const { fail_at(pos_, reason, std::move(message)); }
    [[noreturn]] static void fail_at(std::size_t pos, ParseReason reason, std::string message) {
        throw Fail{pos, reason, std::move(message)};
    }

    bool at_end() const { return pos_ >= end_; }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }

    void skip_ws() {
        while (!at_end() && is_space(text_[pos_])) ++pos_;
    }

    void expect(char c) {
        if (at_end()) fail(ParseReason::UnexpectedEnd, std::string("expected '") + c + "'");
        if (text_[pos_] != c) fail(ParseReason::UnexpectedChar, std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string identifier(bool allow_dots) {
        std::size_t start = pos_;
        if (!is_ident_start(peek())) fail(ParseReason::UnexpectedChar, "expected identifier");
        while (!at_end() && (is_ident_char(text_[pos_]) || (allow_dots && text_[pos_] == '.' && pos_ + 1 < end_ &&
                                                            is_ident_start(text_[pos_ + 1])))) {
            ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    // ---- literals -------------------------------------------------------

    Literal literal(int depth) {
        if (depth > kMaxDepth) fail(ParseReason::NestingTooDeep, "literal nested too deeply");
        skip_ws();
        if (at_end()) fail(ParseReason::UnexpectedEnd, "expected a value");
        char c = peek();
        if (c == '"' || c == '\'') return Literal{string_literal()};
        if (c == '[') return list_literal(depth);
        if (c == '{') return map_literal(depth);
        if (c == '-' || is_digit(c)) return number_literal();
        if (is_ident_start(c)) {
            std::size_t start = pos_;
            std::string word = identifier(false);
            if (word == "true" || word == "True") return Literal{true};
            if (word == "false" || word == "False") return Literal{false};
            if (word == "null" || word == "None") return Literal{};
            fail_at(start, ParseReason::UnexpectedChar, "unknown bare word '" + word + "'");
        }
        fail(ParseReason::UnexpectedChar, "expected a value");
    }

    std::string string_literal() {
        std::size_t open = pos_;
        char quote = text_[pos_++];
        std::string out;
        while (true) {
            if (at_end()) fail_at(open, ParseReason::UnterminatedString, "string is not terminated");
            char c = text_[pos_];
            if (c == quote) {
                ++pos_;
                return out;
            }
            if (c != '\\') {
                out += c;
                ++pos_;
                continue;
            }
            std::size_t esc = pos_;
            ++pos_;
            if (at_end()) fail_at(open, ParseReason::UnterminatedString, "string is not terminated");
            char e = text_[pos_++];
            switch (e) {
            case '\\': out += '\\'; break;
            case '"': out += '"'; break;
            case '\'': out += '\''; break;
            case '/': out += '/'; break;
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            case 'b': out += '\b'; break;
            case 'f': out += '\f'; break;
            case 'u': {
                char32_t cp = hex4(esc);
                if (cp >= 0xD800 && cp <= 0xDBFF) {
                    if (pos_ + 1 < end_ && text_[pos_] == '\\' && text_[pos_ + 1] == 'u') {
                        pos_ += 2;
                        char32_t lo = hex4(esc);
                        if (lo < 0xDC00 || lo > 0xDFFF) fail_at(esc, ParseReason::InvalidEscape, "unpaired surrogate");
                        cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
                    } else {
                        fail_at(esc, ParseReason::InvalidEscape, "unpaired surrogate");
                    }
                } else if (cp >= 0xDC00 && cp <= 0xDFFF) {
                    fail_at(esc, ParseReason::InvalidEscape, "unpaired surrogate");
                }
                append_utf8(out, cp);
                break;
            }
            default: fail_at(esc, ParseReason::InvalidEscape, std::string("unknown escape '\\") + e + "'");
            }
        }
    }

    char32_t hex4(std::size_t esc) {
        if (pos_ + 4 > end_) fail_at(esc, ParseReason::InvalidEscape, "truncated \\u escape");
        char32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            char h = text_[pos_++];
            v <<= 4;
            if (h >= '0' && h <= '9') v |= static_cast<char32_t>(h - '0');
            else if (h >= 'a' && h <= 'f') v |= static_cast<char32_t>(h - 'a' + 10);
            else if (h >= 'A' && h <= 'F') v |= static_cast<char32_t>(h - 'A' + 10);
            else fail_at(esc, ParseReason::InvalidEscape, "bad hex digit in \\u escape");
        }
        return v;
    }

    Literal number_literal() {
        std::size_t start = pos_;
        if (peek() == '-') ++pos_;
        if (!is_digit(peek())) fail_at(start, ParseReason::InvalidNumber, "expected digits");
        while (is_digit(peek())) ++pos_;
        bool real = false;
        if (peek() == '.') {
            real = true;
            ++pos_;
            while (is_digit(peek())) ++pos_;
        }
        if (peek() == 'e' || peek() == 'E') {
            real = true;
            ++pos_;
            if (peek() == '+' || peek() == '-') ++pos_;
            if (!is_digit(peek())) fail_at(start, ParseReason::InvalidNumber, "malformed exponent");
            while (is_digit(peek())) ++pos_;
        }
        const char* first = text_.data() + start;
        const char* last = text_.data() + pos_;
        if (real) {
            double v = 0;
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
                fail_at(start, ParseReason::InvalidNumber, "real out of range");
            }
            return Literal{v};
        }
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last) fail_at(start, ParseReason::InvalidNumber, "integer out of range");
        return Literal{v};
    }

    Literal list_literal(int depth) {
        expect('[');
        Literal::List items;
        skip_ws();
        if (peek() == ']') {
            ++pos_;
            return Literal{std::move(items)};
        }
        while (true) {
            items.push_back(literal(depth + 1));
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                skip_ws();
                if (peek() == ']') {
                    ++pos_;
                    break;
                }
                continue;
            }
            expect(']');
            break;
        }
        return Literal{std::move(items)};
    }

    Literal map_literal(int depth) {
        expect('{');
        Literal::Map m;
        skip_ws();
        if (peek() == '}') {
            ++pos_;
            return Literal{std::move(m)};
        }
        while (true) {
            skip_ws();
            if (peek() != '"' && peek() != '\'') {
                if (at_end()) fail(ParseReason::UnexpectedEnd, "expected a string key");
                fail(ParseReason::UnexpectedChar, "expected a string key");
            }
            std::size_t key_pos = pos_;
            std::string key = string_literal();
            skip_ws();
            expect(':');
            Literal value = literal(depth + 1);
            if (!m.emplace(std::move(key), std::move(value)).second) {
                fail_at(key_pos, ParseReason::DuplicateKey, "duplicate key in map");
            }
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                skip_ws();
                if (peek() == '}') {
                    ++pos_;
                    break;
                }
                continue;
            }
            expect('}');
            break;
        }
        return Literal{std::move(m)};
    }

    // ---- pythonic calls -------------------------------------------------

    CallInstruction pythonic_call() {
        CallInstruction call;
        call.tool_name = identifier(true);
        skip_ws();
        expect('(');
        std::set<std::string> seen;
        skip_ws();
        if (peek() == ')') {
            ++pos_;
            return call;
        }
        while (true) {
            skip_ws();
            std::size_t arg_pos = pos_;
            if (!is_ident_start(peek())) {
                if (at_end()) fail(ParseReason::UnexpectedEnd, "expected keyword argument");
                fail(ParseReason::PositionalArg, "positional arguments are not accepted");
            }
            std::string name = identifier(false);
            skip_ws();
            if (peek() != '=') {
                if (at_end()) fail(ParseReason::UnexpectedEnd, "expected '='");
                fail_at(arg_pos, ParseReason::PositionalArg, "positional arguments are not accepted");
            }
            ++pos_;
            Literal value = literal(1);
            if (!seen.insert(name).second) fail_at(arg_pos, ParseReason::DuplicateArg, "duplicate argument '" + name + "'");
            call.arguments.emplace(std::move(name), std::move(value));
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                skip_ws();
                if (peek() == ')') {
                    ++pos_;
                    break;
                }
                continue;
            }
            expect(')');
            break;
        }
        return call;
    }

    std::vector<CallInstruction> pythonic_list() {
        std::size_t open = pos_;
        expect('[');
        std::vector<CallInstruction> calls;
        skip_ws();
        if (peek() == ']') fail_at(open, ParseReason::EmptyCallList, "empty call list");
        while (true) {
            skip_ws();
            calls.push_back(pythonic_call());
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                skip_ws();
                if (peek() == ']') {
                    ++pos_;
                    break;
                }
                continue;
            }
            expect(']');
            break;
        }
        return calls;
    }

    // ---- JSON calls -----------------------------------------------------

    CallInstruction json_call() {
        std::size_t obj_pos = pos_;
        Literal obj = map_literal(0);
        const Literal::Map* m = &obj.as_map();
        // OpenAI tool_call shape: {"type":"function","function":{...}}
        if (auto fn = m->find("function"); fn != m->end() && fn->second.is_map() && !m->count("name")) {
            m = &fn->second.as_map();
        }
        auto name_it = m->find("name");
        if (name_it == m->end() || !name_it->second.is_string() || name_it->second.as_string().empty()) {
            fail_at(obj_pos, ParseReason::MissingName, "call object has no \"name\" string");
        }
        CallInstruction call;
        call.tool_name = name_it->second.as_string();
        auto args_it = m->find("arguments");
        if (args_it == m->end()) args_it = m->find("parameters");
        if (args_it == m->end()) return call;
        const Literal& args = args_it->second;
        if (args.is_map()) {
            call.arguments = args.as_map();
        } else if (args.is_string()) {
            const std::string& embedded = args.as_string();
            Parser sub(embedded, 0, embedded.size());
            try {
                sub.skip_ws();
                if (sub.peek() != '{') throw Fail{0, ParseReason::BadArguments, "not an object"};
                Literal inner = sub.map_literal(0);
                sub.skip_ws();
                if (!sub.at_end()) throw Fail{sub.pos(), ParseReason::TrailingInput, "trailing input"};
                call.arguments = inner.as_map();
            } catch (const Fail& f) {
                fail_at(obj_pos, f.reason == ParseReason::DuplicateKey ? ParseReason::DuplicateArg : ParseReason::BadArguments,
                        "embedded arguments string: " + f.message);
            }
        } else if (!args.is_null()) {
            fail_at(obj_pos, ParseReason::BadArguments, "\"arguments\" must be an object or a JSON string");
        }
        return call;
    }

    std::vector<CallInstruction> json_array() {
        std::size_t open = pos_;
        expect('[');
        std::vector<CallInstruction> calls;
        skip_ws();
        if (peek() == ']') fail_at(open, ParseReason::EmptyCallList, "empty call list");
        while (true) {
            skip_ws();
            if (peek() != '{') {
                if (at_end()) fail(ParseReason::UnexpectedEnd, "expected a call object");
                fail(ParseReason::UnexpectedChar, "expected a call object");
            }
            calls.push_back(json_call());
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            expect(']');
            break;
        }
        return calls;
    }

private:
    std::string_view text_;
    std::size_t pos_;
    std::size_t end_;
};

// Narrows [begin, end) to the payload: trims whitespace and strips a
// surrounding ``` fence (with optional language tag).
std::pair<std::size_t, std::size_t> payload_region(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    if (e - b >= 3 && text.substr(b, 3) == "```") {
        std::size_t nl = text.find('\n', b);
        if (nl != std::string_view::npos && nl < e) {
            std::size_t inner_b = nl + 1;
            std::size_t inner_e = e;
            if (inner_e - inner_b >= 3 && text.substr(inner_e - 3, 3) == "```") inner_e -= 3;
            b = inner_b;
            e = inner_e;
            while (b < e && is_space(text[b])) ++b;
            while (e > b && is_space(text[e - 1])) --e;
        }
    }
    return {b, e};
}

}  // namespace

ParseOutcome parse_call(std::string_view text) {
    ParseOutcome out;
    auto [b, e] = payload_region(text);
    auto failed = [&](const Fail& f) {
        out.calls.clear();
        out.failure = ParseFailure{std::min(f.position, text.size()), f.reason, f.message};
        return out;
    };
    if (b >= e) return failed(Fail{b, ParseReason::NoCallFound, "empty output"});

    Parser p(text, b, e);
    auto finish = [&](std::vector<CallInstruction> calls, CallSyntaxForm form) {
        p.skip_ws();
        if (!p.at_end()) Parser::fail_at(p.pos(), ParseReason::TrailingInput, "unexpected text after call");
        out.calls = std::move(calls);
        out.form = form;
        return out;
    };

    char c = text[b];
    try {
        if (c == '[') {
            try {
                return finish(p.pythonic_list(), CallSyntaxForm::Pythonic);
            } catch (const Fail& pythonic_fail) {
                p.reset(b);
                try {
                    return finish(p.json_array(), CallSyntaxForm::JsonArray);
                } catch (const Fail& json_fail) {
                    // Report whichever interpretation got further.
                    throw json_fail.position > pythonic_fail.position ? json_fail : pythonic_fail;
                }
            }
        }
        if (c == '{') {
            std::vector<CallInstruction> calls;
            calls.push_back(p.json_call());
            return finish(std::move(calls), CallSyntaxForm::JsonObject);
        }
        if (is_ident_start(c)) {
            p.identifier(true);
            p.skip_ws();
            if (p.peek() != '(') return failed(Fail{b, ParseReason::NoCallFound, "no function call in output"});
            p.reset(b);
            std::vector<CallInstruction> calls;
            calls.push_back(p.pythonic_call());
            return finish(std::move(calls), CallSyntaxForm::Pythonic);
        }
        return failed(Fail{b, ParseReason::NoCallFound, "no function call in output"});
    } catch (const Fail& f) {
        return failed(f);
    }
}

// ---------------------------------------------------------------------------
// Serialization

std::string quote_string(std::string_view s) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(s.size() + 2);
    out += '"';
    for (char ch : s) {
        auto c = static_cast<unsigned char>(ch);
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (c < 0x20 || c == 0x7F) {
                out += "\\u00";
                out += kHex[c >> 4];
                out += kHex[c & 0xF];
            } else {
                out += ch;
            }
        }
    }
    out += '"';
    return out;
}

namespace {

std::string format_real(double v) {
    if (!std::isfinite(v)) throw SerializeError("non-finite real cannot be serialized");
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, ptr);
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

void format_into(std::string& out, const Literal& v, bool pythonic) {
    const char* item_sep = pythonic ? ", " : ",";
    const char* kv_sep = pythonic ? ": " : ":";
    switch (v.kind()) {
    case Literal::Kind::Null: out += "null"; break;
    case Literal::Kind::Boolean: out += v.as_bool() ? "true" : "false"; break;
    case Literal::Kind::Integer: out += std::to_string(v.as_int()); break;
    case Literal::Kind::Real: out += format_real(v.as_real()); break;
    case Literal::Kind::String: out += quote_string(v.as_string()); break;
    case Literal::Kind::List: {
        out += '[';
        bool first = true;
        for (const auto& e : v.as_list()) {
            if (!first) out += item_sep;
            format_into(out, e, pythonic);
            first = false;
        }
        out += ']';
        break;
    }
    case Literal::Kind::Map: {
        out += '{';
        bool first = true;
        for (const auto& [k, e] : v.as_map()) {
            if (!first) out += item_sep;
            out += quote_string(k);
            out += kv_sep;
            format_into(out, e, pythonic);
            first = false;
        }
        out += '}';
        break;
    }
    }
}

void check_name(const CallInstruction& call) {
    if (call.tool_name.empty()) throw SerializeError("call has an empty tool name");
}

bool is_identifier(std::string_view s, bool allow_dots) {
    if (s.empty() || !is_ident_start(s.front())) return false;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (is_ident_char(s[i])) continue;
        if (allow_dots && s[i] == '.' && i + 1 < s.size() && is_ident_start(s[i + 1])) continue;
        return false;
    }
    return true;
}

std::string pythonic_body(const CallInstruction& call) {
    check_name(call);
    if (!is_identifier(call.tool_name, true)) {
        throw SerializeError("tool name '" + call.tool_name + "' is not representable in pythonic form");
    }
    std::string out = call.tool_name + "(";
    bool first = true;
    for (const auto& [name, value] : call.arguments) {
        if (!is_identifier(name, false)) {
            throw SerializeError("argument name '" + name + "' is not representable in pythonic form");
        }
        if (!first) out += ", ";
        out += name;
        out += '=';
        format_into(out, value, true);
        first = false;
    }
    out += ')';
    return out;
}

std::string json_body(const CallInstruction& call) {
    check_name(call);
    std::string out = "{\"name\":" + quote_string(call.tool_name) + ",\"arguments\":{";
    bool first = true;
    for (const auto& [name, value] : call.arguments) {
        if (!first) out += ',';
        out += quote_string(name);
        out += ':';
        format_into(out, value, false);
        first = false;
    }
    out += "}}";
    return out;
}

}  // namespace

std::string format_literal(const Literal& value, bool pythonic) {
    std::string out;
    format_into(out, value, pythonic);
    return out;
}

std::string serialize_call(const CallInstruction& call, CallSyntaxForm form) {
    return serialize_calls({call}, form);
}

std::string serialize_calls(const std::vector<CallInstruction>& calls, CallSyntaxForm form) {
    if (calls.empty()) throw SerializeError("no calls to serialize");
    switch (form) {
    case CallSyntaxForm::Pythonic: {
        std::string out = "[";
        for (std::size_t i = 0; i < calls.size(); ++i) {
            if (i) out += ", ";
            out += pythonic_body(calls[i]);
        }
        return out + "]";
    }
    case CallSyntaxForm::JsonObject:
        if (calls.size() != 1) throw SerializeError("json_object form holds exactly one call");
        return json_body(calls.front());
    case CallSyntaxForm::JsonArray: {
        std::string out = "[";
        for (std::size_t i = 0; i < calls.size(); ++i) {
            if (i) out += ',';
            out += json_body(calls[i]);
        }
        return out + "]";
    }
    }
    return {};
}

}  // namespace fcforge
