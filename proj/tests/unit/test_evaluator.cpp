#include <catch_amalgamated.hpp>

#include <random>

#include "fcforge/dataset.hpp"
#include "fcforge/evaluator.hpp"
#include "pipeline.hpp"

using namespace fcforge;

namespace {

EvalCase make_case(std::string output) {
    EvalCase c;
    c.id = "c1";
    c.question = "Basic information for Li Wei in 2023";
    c.expected = CallInstruction{"Staff_Basic_Information_Inquiry", {{"employee_name", "Li Wei"}, {"year", "2023"}}};
    c.raw_output = std::move(output);
    return c;
}

}  // namespace

TEST_CASE("cascade: structure, then tool, then parameters") {
    CHECK(judge(make_case("not a call at all")).tag == VerdictTag::StructureError);
    CHECK(judge(make_case("[Staff_Basic_Information_Inquiry(employee_name=\"Li Wei\"")).tag == VerdictTag::StructureError);

    const Verdict te = judge(make_case(R"([Leave_Balance_Inquiry(employee_name="Li Wei", year="2023")])"));
    CHECK(te.tag == VerdictTag::ToolError);
    CHECK(te.predicted_tool == "Leave_Balance_Inquiry");

    CHECK(judge(make_case(R"([Staff_Basic_Information_Inquiry(employee_name="Li Wei", year="2022")])")).tag ==
          VerdictTag::ParamError);
    CHECK(judge(make_case(R"([Staff_Basic_Information_Inquiry(employee_name="Li Wei")])")).tag == VerdictTag::ParamError);
    CHECK(judge(make_case(R"([Staff_Basic_Information_Inquiry(employee_name="Li Wei", year="2023", extra=1)])")).tag ==
          VerdictTag::ParamError);

    const Verdict ok = judge(make_case(R"({"name": "Staff_Basic_Information_Inquiry", "arguments": {"year": "2023", "employee_name": "Li Wei"}})"));
    CHECK(ok.tag == VerdictTag::Pass);
    CHECK(ok.predicted_tool == "Staff_Basic_Information_Inquiry");
}

TEST_CASE("value comparison rules") {
    CHECK(values_match(Literal(3), Literal(3.0), false));
    CHECK_FALSE(values_match(Literal(3), Literal(3.5), false));
    CHECK(values_match(Literal("Ｌｉ Wei "), Literal("Li Wei"), false));  // NFKC + trim
    CHECK_FALSE(values_match(Literal("li wei"), Literal("Li Wei"), false));
    CHECK(values_match(Literal("li wei"), Literal("Li Wei"), true));
    CHECK(values_match(Literal(Literal::List{Literal(1), Literal("a")}), Literal(Literal::List{Literal(1.0), Literal("a")}), false));
    CHECK_FALSE(values_match(Literal(Literal::List{Literal(1)}), Literal(Literal::List{Literal(1), Literal(2)}), false));
    CHECK_FALSE(values_match(Literal(true), Literal(1), false));

    JudgePolicy fold;
    fold.casefold_values = true;
    auto c = make_case(R"([Staff_Basic_Information_Inquiry(employee_name="LI WEI", year="2023")])");
    CHECK(judge(c).tag == VerdictTag::ParamError);
    CHECK(judge(c, fold).tag == VerdictTag::Pass);
}

TEST_CASE("tool names compare case-insensitively unless told otherwise") {
    auto c = make_case(R"([staff_basic_information_inquiry(employee_name="Li Wei", year="2023")])");
    CHECK(judge(c).tag == VerdictTag::Pass);
    JudgePolicy strict;
    strict.casefold_tool_names = false;
    CHECK(judge(c, strict).tag == VerdictTag::ToolError);
}

TEST_CASE("schema defaults and omittable parameters") {
    const Catalog cat = testing::hr_catalog();
    EvalCase c;
    c.id = "d";
    c.expected = CallInstruction{"Department_Headcount_Inquiry", {{"department", "Finance"}, {"year", "2024"}}};
    c.schema = *cat.find_tool("Department_Headcount_Inquiry");
    c.raw_output = R"([Department_Headcount_Inquiry(department="Finance", year="2024", include_interns=false)])";
    CHECK(judge(c).tag == VerdictTag::Pass);  // explicit default
    c.raw_output = R"([Department_Headcount_Inquiry(department="Finance", year="2024", include_interns=true)])";
    CHECK(judge(c).tag == VerdictTag::ParamError);
    c.raw_output = R"([Department_Headcount_Inquiry(department="Finance")])";
    CHECK(judge(c).tag == VerdictTag::ParamError);  // required year missing
}

TEST_CASE("bfcl records judge through assembled cases") {
    const Catalog cat = testing::hr_catalog();
    TrainingSample s;
    s.id = "s1";
    s.question = "Show the organization structure for the Finance department";
    s.tools = cat.tools;
    s.answer = CallInstruction{"Organization_Structure_Inquiry", {{"department", "Finance"}}};
    const auto assembled = assemble(std::vector<TrainingSample>{s}, cat, AssembleOptions{DatasetFormat::BfclV3, 1, {}});
    const json record = json::parse(assembled.contents.substr(0, assembled.contents.find('\n')));
    EvalCase c = eval_case_from_bfcl(record);
    CHECK(c.id == "s1");
    CHECK(c.question == s.question);
    CHECK(c.expected == s.answer);
    REQUIRE(c.schema);
    c.raw_output = R"([Organization_Structure_Inquiry(department="Finance")])";
    CHECK(judge(c).tag == VerdictTag::Pass);  // optional city omitted
    c.raw_output = R"([Organization_Structure_Inquiry(department="Finance", city="")])";
    CHECK(judge(c).tag == VerdictTag::Pass);
    c.raw_output = R"([Organization_Structure_Inquiry(department="Finance", city="Wuhan")])";
    CHECK(judge(c).tag == VerdictTag::ParamError);

    CHECK_THROWS_AS(eval_case_from_bfcl(json{{"id", "x"}, {"question", "q"}, {"ground_truth", json::array()}}), EvalError);
}

TEST_CASE("stage metrics with hand-computed values") {
    const StageMetrics m = metrics_from_counts(15, 33, 112, 47);
    CHECK(m.n_total == 207);
    CHECK(*m.structural_completeness_rate == Rational(192, 207));
    CHECK(*m.tool_selection_acc == Rational(159, 192));
    CHECK(*m.param_filling_acc == Rational(47, 159));
    CHECK(m.overall_acc == Rational(47, 207));
    CHECK(format_percent(*m.structural_completeness_rate) == "92.8");
    CHECK(format_percent(m.overall_acc, 2) == "22.71");
    CHECK(format_percent(Rational(1, 8), 1) == "12.5");
    CHECK(format_percent(Rational(1, 16), 1) == "6.3");  // half-up
    CHECK(format_percent(Rational(1, 1), 0) == "100");

    const json j = metrics_to_json(m);
    CHECK(j["tool_selection_acc_pct"] == "82.8");
    CHECK(j["undefined"].empty());
}

TEST_CASE("0/0 stages are undefined, not zero") {
    const StageMetrics all_se = metrics_from_counts(5, 0, 0, 0);
    CHECK(*all_se.structural_completeness_rate == Rational(0));
    CHECK_FALSE(all_se.tool_selection_acc);
    CHECK_FALSE(all_se.param_filling_acc);
    CHECK(metrics_to_json(all_se)["undefined"].size() == 2);
    CHECK_THROWS_AS(metrics_from_counts(0, 0, 0, 0), EvalError);
    CHECK_THROWS_AS(metrics_from_counts(-1, 0, 0, 1), EvalError);
}

TEST_CASE("telescoping identity holds exactly") {
    std::mt19937_64 g(3);
    for (int i = 0; i < 2000; ++i) {
        const std::int64_t se = g() % 50, te = g() % 50, pe = g() % 50, pass = 1 + g() % 50;
        const StageMetrics m = metrics_from_counts(se, te, pe, pass);
        CHECK(*m.structural_completeness_rate * *m.tool_selection_acc * *m.param_filling_acc == m.overall_acc);
    }
}

TEST_CASE("reported rate consistency") {
    const auto good = check_reported_rates({92.8, 82.8, 29.6, 22.7});
    CHECK(good.consistent);
    const auto bad = check_reported_rates({99.0, 95.1, 89.2, 79.2});
    CHECK_FALSE(bad.consistent);
    CHECK(bad.product_percent == Catch::Approx(83.98).margin(0.01));
    CHECK_THAT(bad.explanation, Catch::Matchers::ContainsSubstring("INCONSISTENT"));

    const auto counts = counts_matching_rates(207, {94.2, 52.3, 66.7, 32.9});
    REQUIRE(counts.size() == 1);
    CHECK(counts[0].se == 12);
    CHECK(counts[0].te == 93);
    CHECK(counts[0].pe == 34);
    CHECK(counts[0].pass == 68);
}

TEST_CASE("verdict json round trip") {
    Verdict v{VerdictTag::ToolError, "expected a, got b", std::string("b")};
    const json j = verdict_to_json("id7", v);
    CHECK(j["tag"] == "ToolError");
    const Verdict back = verdict_from_json(j);
    CHECK(back.tag == v.tag);
    CHECK(back.detail == v.detail);
    CHECK(back.predicted_tool == v.predicted_tool);
    CHECK_THROWS_AS(verdict_from_json(json{{"tag", "Maybe"}}), EvalError);
}
