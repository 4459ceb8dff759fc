#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fcforge/literal.hpp"
#include "fcforge/util.hpp"

namespace fcforge {

enum class CallSyntaxForm {
    Pythonic,    // [name(k=v, ...)] or bare name(k=v, ...)
    JsonObject,  // {"name": ..., "arguments": {...}}
    JsonArray,   // [{"name": ..., "arguments": {...}}, ...]
};

const char* to_string(CallSyntaxForm form);

enum class ParseReason {
    NoCallFound,
    UnexpectedChar,
    UnexpectedEnd,
    UnterminatedString,
    InvalidEscape,
    InvalidNumber,
    PositionalArg,
    DuplicateArg,
    DuplicateKey,
    MissingName,
    BadArguments,
    EmptyCallList,
    NestingTooDeep,
    TrailingInput,
};

const char* to_string(ParseReason reason);

struct ParseFailure {
    std::size_t position = 0;  // byte offset into the original input
    ParseReason reason = ParseReason::NoCallFound;
    std::string message;
};

struct ParseOutcome {
    std::vector<CallInstruction> calls;  // nonempty on success
    CallSyntaxForm form = CallSyntaxForm::Pythonic;
    std::optional<ParseFailure> failure;

    bool ok() const { return !failure.has_value(); }
};

/// Parses model output into calls. Never throws; every problem becomes a
/// ParseFailure. Surrounding whitespace and a markdown code fence are ignored.
ParseOutcome parse_call(std::string_view text);

class SerializeError : public Error {
public:
    using Error::Error;
};

/// Canonical text: arguments in name order, strings double-quoted with minimal
/// escaping, reals in shortest round-trip form. Throws SerializeError for
/// non-finite reals.
std::string serialize_call(const CallInstruction& call, CallSyntaxForm form);
std::string serialize_calls(const std::vector<CallInstruction>& calls, CallSyntaxForm form);

/// Literal rendering shared by both syntaxes. `pythonic` adds a space after
/// separators.
std::string format_literal(const Literal& value, bool pythonic);
std::string quote_string(std::string_view s);

}  // namespace fcforge
