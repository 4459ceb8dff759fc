#include "fcforge/evaluator.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "fcforge/call_parser.hpp"

namespace fcforge {

const char* to_string(VerdictTag tag) {
    switch (tag) {
    case VerdictTag::Pass: return "Pass";
    case VerdictTag::StructureError: return "StructureError";
    case VerdictTag::ToolError: return "ToolError";
    case VerdictTag::ParamError: return "ParamError";
    }
    return "?";
}

std::optional<VerdictTag> parse_verdict_tag(std::string_view s) {
    if (s == "Pass") return VerdictTag::Pass;
    if (s == "StructureError") return VerdictTag::StructureError;
    if (s == "ToolError") return VerdictTag::ToolError;
    if (s == "ParamError") return VerdictTag::ParamError;
    return std::nullopt;
}

namespace {

std::string canonical_string(std::string_view s, bool fold) {
    std::string n = normalize_text(s);
    return fold ? casefold(n) : n;
}

bool int_equals_real(std::int64_t i, double r) {
    if (!std::isfinite(r) || std::trunc(r) != r) return false;
    if (r < -9.2233720368547758e18 || r >= 9.2233720368547758e18) return false;
    return static_cast<std::int64_t>(r) == i;
}

bool is_omit_marker(const Literal& v) { return v.is_string() && v.as_string().empty(); }

}  // namespace

bool values_match(const Literal& expected, const Literal& actual, bool fold) {
    if (expected.is_number() && actual.is_number()) {
        if (expected.is_int() && actual.is_int()) return expected.as_int() == actual.as_int();
        if (expected.is_real() && actual.is_real()) return expected.as_real() == actual.as_real();
        if (expected.is_int()) return int_equals_real(expected.as_int(), actual.as_real());
        return int_equals_real(actual.as_int(), expected.as_real());
    }
    if (expected.kind() != actual.kind()) return false;
    switch (expected.kind()) {
    case Literal::Kind::String:
        return canonical_string(expected.as_string(), fold) == canonical_string(actual.as_string(), fold);
    case Literal::Kind::List: {
        const auto& a = expected.as_list();
        const auto& b = actual.as_list();
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!values_match(a[i], b[i], fold)) return false;
        }
        return true;
    }
    case Literal::Kind::Map: {
        const auto& a = expected.as_map();
        const auto& b = actual.as_map();
        if (a.size() != b.size()) return false;
        for (const auto& [k, v] : a) {
            auto it = b.find(k);
            if (it == b.end() || !values_match(v, it->second, fold)) return false;
        }
        return true;
    }
    default: return expected == actual;
    }
}

Verdict judge(const EvalCase& c, const JudgePolicy& policy) {
    ParseOutcome parsed = parse_call(c.raw_output);
    if (!parsed.ok()) {
        const auto& f = *parsed.failure;
        return {VerdictTag::StructureError,
                std::string(to_string(f.reason)) + " at byte " + std::to_string(f.position) + ": " + f.message,
                std::nullopt};
    }
    const CallInstruction& call = parsed.calls.front();
    std::string note;
    if (parsed.calls.size() > 1) note = " (" + std::to_string(parsed.calls.size() - 1) + " extra call(s) ignored)";

    bool same_tool = policy.casefold_tool_names
                         ? canonical_string(call.tool_name, true) == canonical_string(c.expected.tool_name, true)
                         : call.tool_name == c.expected.tool_name;
    if (!same_tool) {
        return {VerdictTag::ToolError, "expected tool " + c.expected.tool_name + ", got " + call.tool_name + note,
                call.tool_name};
    }

    auto param_error = [&](std::string why) { return Verdict{VerdictTag::ParamError, why + note, call.tool_name}; };
    const auto& expected = c.expected.arguments;
    const ToolSpec* schema = c.schema ? &*c.schema : nullptr;

    auto accepted_for = [&](const std::string& p) -> const std::vector<Literal>* {
        if (!c.accepted_values) return nullptr;
        auto it = c.accepted_values->find(p);
        return it == c.accepted_values->end() ? nullptr : &it->second;
    };

    for (const auto& [name, value] : call.arguments) {
        bool known = schema ? schema->find_param(name) != nullptr
                            : (expected.count(name) > 0 || accepted_for(name) != nullptr);
        if (!known) return param_error("unexpected argument '" + name + "'");
    }

    std::set<std::string> to_check;
    for (const auto& [k, v] : expected) to_check.insert(k);
    if (c.accepted_values) {
        for (const auto& [k, v] : *c.accepted_values) to_check.insert(k);
    }
    if (schema) {
        for (const auto& p : schema->params) to_check.insert(p.name);
    }

    for (const auto& name : to_check) {
        const ParamSpec* spec = schema ? schema->find_param(name) : nullptr;
        const std::vector<Literal>* accepted = accepted_for(name);
        bool omittable = false;
        if (accepted) {
            for (const auto& a : *accepted) omittable = omittable || is_omit_marker(a);
        }
        auto exp_it = expected.find(name);
        const Literal* exp_value = exp_it == expected.end() ? nullptr : &exp_it->second;
        bool required = schema ? (spec && spec->required) : exp_value != nullptr;
        const Literal* default_value = spec && spec->default_value ? &*spec->default_value : nullptr;

        auto act_it = call.arguments.find(name);
        if (act_it == call.arguments.end()) {
            if (omittable) continue;
            if (required) return param_error("missing required argument '" + name + "'");
            if (exp_value && !(default_value && values_match(*default_value, *exp_value, policy.casefold_values))) {
                return param_error("missing argument '" + name + "'");
            }
            continue;
        }
        const Literal& actual = act_it->second;
        bool ok = false;
        if (accepted) {
            for (const auto& a : *accepted) {
                if (is_omit_marker(a) && !(actual.is_string() && actual.as_string().empty())) continue;
                if (values_match(a, actual, policy.casefold_values)) {
                    ok = true;
                    break;
                }
            }
        } else if (exp_value) {
            ok = values_match(*exp_value, actual, policy.casefold_values);
        } else {
            ok = default_value && values_match(*default_value, actual, policy.casefold_values);
        }
        if (!ok) return param_error("wrong value for '" + name + "': " + format_literal(actual, true));
    }
    return {VerdictTag::Pass, "ok" + note, call.tool_name};
}

StageMetrics metrics_from_counts(std::int64_t se, std::int64_t te, std::int64_t pe, std::int64_t pass) {
    if (se < 0 || te < 0 || pe < 0 || pass < 0) throw EvalError("negative verdict count");
    StageMetrics m;
    m.n_se = se;
    m.n_te = te;
    m.n_pe = pe;
    m.n_pass = pass;
    m.n_total = se + te + pe + pass;
    if (m.n_total == 0) throw EvalError("cannot aggregate an empty verdict set");
    const std::int64_t n = m.n_total;
    m.structural_completeness_rate = Rational(n - se, n);
    if (n - se > 0) m.tool_selection_acc = Rational(n - se - te, n - se);
    if (n - se - te > 0) m.param_filling_acc = Rational(pass, n - se - te);
    m.overall_acc = Rational(pass, n);
    return m;
}

StageMetrics aggregate(std::span<const Verdict> verdicts) {
    std::int64_t counts[4] = {0, 0, 0, 0};
    for (const auto& v : verdicts) ++counts[static_cast<int>(v.tag)];
    return metrics_from_counts(counts[static_cast<int>(VerdictTag::StructureError)],
                               counts[static_cast<int>(VerdictTag::ToolError)],
                               counts[static_cast<int>(VerdictTag::ParamError)],
                               counts[static_cast<int>(VerdictTag::Pass)]);
}

std::string format_percent(const Rational& rate, int decimals) {
    std::int64_t scale = 100;
    for (int i = 0; i < decimals; ++i) scale *= 10;
    // Work in unsigned 128-bit to keep num * scale exact.
    bool negative = rate < 0;
    unsigned __int128 num = static_cast<unsigned __int128>(negative ? -rate.numerator() : rate.numerator());
    unsigned __int128 den = static_cast<unsigned __int128>(rate.denominator());
    unsigned __int128 scaled = (2 * num * static_cast<unsigned __int128>(scale) + den) / (2 * den);
    std::string digits;
    if (scaled == 0) digits = "0";
    while (scaled > 0) {
        digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(scaled % 10)));
        scaled /= 10;
    }
    if (decimals > 0) {
        while (static_cast<int>(digits.size()) <= decimals) digits.insert(digits.begin(), '0');
        digits.insert(digits.end() - decimals, '.');
    }
    return negative ? "-" + digits : digits;
}

json metrics_to_json(const StageMetrics& m) {
    json j = json::object();
    j["n_total"] = m.n_total;
    j["n_se"] = m.n_se;
    j["n_te"] = m.n_te;
    j["n_pe"] = m.n_pe;
    j["n_pass"] = m.n_pass;
    json undefined = json::array();
    auto put = [&](const char* key, const std::optional<Rational>& r) {
        if (r) {
            j[key] = boost::rational_cast<double>(*r);
            j[std::string(key) + "_pct"] = format_percent(*r);
        } else {
            j[key] = nullptr;
            j[std::string(key) + "_pct"] = nullptr;
            undefined.push_back(key);
        }
    };
    put("structural_completeness_rate", m.structural_completeness_rate);
    put("tool_selection_acc", m.tool_selection_acc);
    put("param_filling_acc", m.param_filling_acc);
    put("overall_acc", m.overall_acc);
    j["undefined"] = std::move(undefined);
    return j;
}

RateConsistency check_reported_rates(std::array<double, 4> reported, int decimals) {
    const double half = 0.5 * std::pow(10.0, -decimals);
    auto lo = [&](double v) { return std::max(0.0, v - half); };
    auto hi = [&](double v) { return std::min(100.0, v + half); };
    double prod_lo = lo(reported[0]) * lo(reported[1]) * lo(reported[2]) / 1e4;
    double prod_hi = hi(reported[0]) * hi(reported[1]) * hi(reported[2]) / 1e4;
    RateConsistency r;
    r.product_percent = reported[0] * reported[1] * reported[2] / 1e4;
    r.consistent = prod_hi >= lo(reported[3]) && prod_lo <= hi(reported[3]);
    char buf[256];
    std::snprintf(buf, sizeof buf, "stage product %.*f%% (interval %.3f..%.3f) vs reported overall %.*f%%: %s",
                  decimals, r.product_percent, prod_lo, prod_hi, decimals, reported[3],
                  r.consistent ? "consistent" : "INCONSISTENT");
    r.explanation = buf;
    return r;
}

std::vector<StageCounts> counts_matching_rates(std::int64_t n, std::array<double, 4> reported, int decimals) {
    std::array<std::string, 4> want;
    for (std::size_t i = 0; i < 4; ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", decimals, reported[i]);
        want[i] = buf;
    }
    std::vector<StageCounts> out;
    for (std::int64_t se = 0; se <= n; ++se) {
        if (format_percent(Rational(n - se, n), decimals) != want[0]) continue;
        for (std::int64_t te = 0; te <= n - se; ++te) {
            if (n - se == 0 || format_percent(Rational(n - se - te, n - se), decimals) != want[1]) continue;
            for (std::int64_t pe = 0; pe <= n - se - te; ++pe) {
                std::int64_t pass = n - se - te - pe;
                if (n - se - te == 0) continue;
                if (format_percent(Rational(pass, n - se - te), decimals) != want[2]) continue;
                if (format_percent(Rational(pass, n), decimals) != want[3]) continue;
                out.push_back({se, te, pe, pass});
            }
        }
    }
    return out;
}

EvalCase eval_case_from_bfcl(const json& record) {
    EvalCase c;
    c.id = record.at("id").get<std::string>();
    const auto& turns = record.at("question");
    if (!turns.is_array() || turns.empty() || !turns[0].is_array()) {
        throw EvalError("bfcl record " + c.id + ": \"question\" must be a list of turns");
    }
    for (const auto& msg : turns[0]) {
        if (msg.value("role", "") == "user") c.question = msg.value("content", "");
    }
    const auto& gt = record.at("ground_truth");
    if (!gt.is_array() || gt.empty() || !gt[0].is_object() || gt[0].size() != 1) {
        throw EvalError("bfcl record " + c.id + ": \"ground_truth\" must hold one call");
    }
    const auto& [name, params] = *gt[0].items().begin();
    c.expected.tool_name = name;
    std::map<std::string, std::vector<Literal>> accepted;
    for (const auto& [pname, alts] : params.items()) {
        if (!alts.is_array()) throw EvalError("bfcl record " + c.id + ": accepted values must be lists");
        std::vector<Literal> values;
        for (const auto& a : alts) values.push_back(literal_from_json(a));
        for (const auto& v : values) {
            if (!is_omit_marker(v)) {
                c.expected.arguments[pname] = v;
                break;
            }
        }
        accepted[pname] = std::move(values);
    }
    c.accepted_values = std::move(accepted);
    if (record.contains("function")) {
        for (const auto& fn : record.at("function")) {
            if (fn.value("name", "") != name) continue;
            try {
                c.schema = tool_from_json(fn);
            } catch (const CatalogError&) {
                c.schema.reset();
            }
        }
    }
    return c;
}

json verdict_to_json(const std::string& id, const Verdict& v) {
    json j = json::object();
    j["id"] = id;
    j["tag"] = to_string(v.tag);
    j["detail"] = v.detail;
    if (v.predicted_tool) j["predicted_tool"] = *v.predicted_tool;
    return j;
}

Verdict verdict_from_json(const json& j) {
    Verdict v;
    const auto tag = parse_verdict_tag(j.value("tag", std::string()));
    if (!tag) throw EvalError("verdict record lacks a valid tag");
    v.tag = *tag;
    v.detail = j.value("detail", std::string());
    if (j.contains("predicted_tool") && j["predicted_tool"].is_string()) v.predicted_tool = j["predicted_tool"].get<std::string>();
    return v;
}

}  // namespace fcforge
