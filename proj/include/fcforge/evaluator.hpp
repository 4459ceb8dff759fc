#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "fcforge/catalog.hpp"
#include "fcforge/literal.hpp"

namespace fcforge {

using Rational = boost::rational<std::int64_t>;

struct EvalCase {
    std::string id;
    std::string question;
    CallInstruction expected;
    /// Per-parameter alternatives (BFCL ground-truth shape). An empty string
    /// among the alternatives marks the parameter as omittable.
    std::optional<std::map<std::string, std::vector<Literal>>> accepted_values;
    std::string raw_output;
    /// Schema of the expected tool; supplies required flags and defaults.
    std::optional<ToolSpec> schema;
};

enum class VerdictTag { Pass, StructureError, ToolError, ParamError };
const char* to_string(VerdictTag tag);
std::optional<VerdictTag> parse_verdict_tag(std::string_view s);

struct Verdict {
    VerdictTag tag = VerdictTag::Pass;
    std::string detail;
    std::optional<std::string> predicted_tool;
};

struct JudgePolicy {
    bool casefold_values = false;
    bool casefold_tool_names = true;
};

/// Cascading judgment: structure, then tool, then parameters.
Verdict judge(const EvalCase& c, const JudgePolicy& policy = {});

/// Value equality used by the judge: strings compared after NFKC + trim
/// (optionally case-folded), integers equal to reals of the same value,
/// lists element-wise, maps key-wise.
bool values_match(const Literal& expected, const Literal& actual, bool casefold_strings);

struct StageMetrics {
    std::int64_t n_total = 0;
    std::int64_t n_se = 0;
    std::int64_t n_te = 0;
    std::int64_t n_pe = 0;
    std::int64_t n_pass = 0;
    // nullopt marks a 0/0 stage.
    std::optional<Rational> structural_completeness_rate;
    std::optional<Rational> tool_selection_acc;
    std::optional<Rational> param_filling_acc;
    Rational overall_acc;
};

class EvalError : public Error {
public:
    using Error::Error;
};

StageMetrics aggregate(std::span<const Verdict> verdicts);
StageMetrics metrics_from_counts(std::int64_t se, std::int64_t te, std::int64_t pe, std::int64_t pass);

/// Percentage rounded half-up to `decimals` places, computed exactly.
std::string format_percent(const Rational& rate, int decimals = 1);
json metrics_to_json(const StageMetrics& m);

/// Checks whether four reported percentages (structural, tool, param,
/// overall) can come from one verdict multiset. Each value is treated as an
/// interval of +-half a unit in its last printed decimal.
struct RateConsistency {
    bool consistent = false;
    double product_percent = 0;  // structural * tool * param, in percent
    std::string explanation;
};
RateConsistency check_reported_rates(std::array<double, 4> reported_percent, int decimals = 1);

struct StageCounts {
    std::int64_t se, te, pe, pass;
};
/// All count tuples over `n_total` cases whose rates round to the reported
/// percentages at `decimals` places.
std::vector<StageCounts> counts_matching_rates(std::int64_t n_total, std::array<double, 4> reported_percent,
                                               int decimals = 1);

// BFCL v3 interop -----------------------------------------------------------

/// Builds an EvalCase from a bfcl_v3 record; `raw_output` is filled separately.
EvalCase eval_case_from_bfcl(const json& record);
json verdict_to_json(const std::string& id, const Verdict& v);
Verdict verdict_from_json(const json& j);

}  // namespace fcforge
