#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <sstream>

#include "fcforge/analysis.hpp"
#include "pipeline.hpp"

using namespace fcforge;

namespace {

Verdict v(VerdictTag tag, std::optional<std::string> predicted = std::nullopt) {
    return Verdict{tag, "", std::move(predicted)};
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

std::vector<LabelledVerdict> random_records(std::mt19937_64& g, const std::vector<std::string>& tools, int n) {
    std::vector<LabelledVerdict> out;
    for (int i = 0; i < n; ++i) {
        const std::string& actual = tools[g() % tools.size()];
        switch (g() % 4) {
            case 0: out.push_back({actual, v(VerdictTag::StructureError)}); break;
            case 1: {
                // A tool error always names some other tool.
                std::string other = actual;
                while (other == actual) other = tools[g() % tools.size()];
                out.push_back({actual, v(VerdictTag::ToolError, other)});
                break;
            }
            case 2: out.push_back({actual, v(VerdictTag::ParamError, actual)}); break;
            default: out.push_back({actual, v(VerdictTag::Pass, actual)}); break;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("cells follow the verdicts") {
    const std::vector<std::string> labels{"A", "B"};
    std::vector<LabelledVerdict> recs{{"A", v(VerdictTag::Pass, "A")}, {"A", v(VerdictTag::Pass, "A")},
                                      {"A", v(VerdictTag::Pass, "A")}};
    auto m = confusion(recs, labels);
    CHECK(m.at(0, 0) == 3);
    CHECK(m.total() == 3);

    recs = {{"A", v(VerdictTag::ToolError, "B")}, {"B", v(VerdictTag::StructureError)}, {"B", v(VerdictTag::ParamError, "B")},
            {"A", v(VerdictTag::ToolError, "b")}};
    m = confusion(recs, labels);
    CHECK(m.at(0, 1) == 2);  // exact and case-folded names
    CHECK(m.at(1, m.invalid_column()) == 1);
    CHECK(m.at(1, 1) == 1);
    CHECK(m.columns == std::vector<std::string>{"A", "B", "invalid"});
    CHECK(*m.micro_accuracy() == Rational(1, 3));
}

TEST_CASE("unknown predictions go to an overflow column with a warning") {
    const auto m = confusion(std::vector<LabelledVerdict>{{"A", v(VerdictTag::ToolError, "Payroll_Export")}}, {"A", "B"});
    CHECK(m.columns.back() == "other");
    CHECK(m.at(0, 3) == 1);
    REQUIRE(m.warnings.size() == 1);
    CHECK_THAT(m.warnings[0], Catch::Matchers::ContainsSubstring("Payroll_Export"));
}

TEST_CASE("errors") {
    CHECK_THROWS_WITH(confusion(std::vector<LabelledVerdict>{}, {"A"}), Catch::Matchers::StartsWith("EmptyInput"));
    CHECK_THROWS_AS(confusion(std::vector<LabelledVerdict>{{"Z", v(VerdictTag::Pass, "Z")}}, {"A"}), AnalysisError);
    CHECK_THROWS_AS(confusion_from_counts({"A"}, {{-1}}), AnalysisError);
    CHECK_THROWS_AS(confusion_from_counts({"A", "B"}, {{1, 2}}), AnalysisError);
}

TEST_CASE("per-tool metrics by hand") {
    const auto metrics = per_tool_metrics(confusion_from_counts({"t0", "t1"}, {{3, 1}, {2, 4}}));
    CHECK(metrics[0].tp == 3);
    CHECK(metrics[0].fp == 2);
    CHECK(metrics[0].fn == 1);
    CHECK(metrics[0].tn == 4);
    CHECK(*metrics[0].precision == Catch::Approx(3.0 / 5.0));
    CHECK(*metrics[0].recall == Catch::Approx(3.0 / 4.0));
    CHECK(*metrics[0].f1 == Catch::Approx(2 * 0.6 * 0.75 / 1.35));

    const auto perfect = per_tool_metrics(confusion_from_counts({"a", "b"}, {{4, 0}, {0, 2}}));
    CHECK(*perfect[0].precision == 1.0);
    CHECK(*perfect[0].recall == 1.0);
    CHECK(*perfect[0].f1 == 1.0);

    const auto missed = per_tool_metrics(confusion_from_counts({"a", "b"}, {{0, 4}, {0, 3}}));
    CHECK_FALSE(missed[0].precision);  // never predicted
    CHECK(*missed[0].recall == 0.0);
    CHECK(*missed[0].f1 == 0.0);

    const auto unused = per_tool_metrics(confusion_from_counts({"a", "b"}, {{0, 0}, {0, 3}}));
    CHECK_FALSE(unused[0].precision);
    CHECK_FALSE(unused[0].recall);
    CHECK_FALSE(unused[0].f1);
}

TEST_CASE("matrix invariants on random verdicts") {
    const auto tools = testing::hr_catalog().tool_names();
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto recs = random_records(g, tools, 1 + static_cast<int>(g() % 200));
        const auto m = confusion(recs, tools);
        CHECK(m.total() == static_cast<std::int64_t>(recs.size()));
        std::map<std::string, std::int64_t> per_actual;
        for (const auto& r : recs) ++per_actual[r.actual_tool];
        for (std::size_t t = 0; t < tools.size(); ++t) CHECK(m.row_sum(t) == per_actual[tools[t]]);

        const auto metrics = per_tool_metrics(m);
        std::int64_t tp_sum = 0;
        for (const auto& tm : metrics) {
            tp_sum += tm.tp;
            CHECK(tm.tp + tm.tn + tm.fp + tm.fn == m.total());
        }
        CHECK(tp_sum == m.trace());

        // Micro-accuracy equals the evaluator's tool-selection accuracy.
        std::vector<Verdict> vs;
        for (const auto& r : recs) vs.push_back(r.verdict);
        const auto stage = aggregate(vs);
        if (stage.tool_selection_acc) CHECK(*m.micro_accuracy() == *stage.tool_selection_acc);

        // Relabelling order permutes rows but keeps every metric.
        auto shuffled = tools;
        std::shuffle(shuffled.begin(), shuffled.end(), g);
        const auto metrics2 = per_tool_metrics(confusion(recs, shuffled));
        for (const auto& tm : metrics) {
            auto it = std::find_if(metrics2.begin(), metrics2.end(), [&](const ToolMetrics& o) { return o.tool == tm.tool; });
            REQUIRE(it != metrics2.end());
            CHECK(it->tp == tm.tp);
            CHECK(it->fp == tm.fp);
            CHECK(it->fn == tm.fn);
            CHECK(it->tn == tm.tn);
            CHECK(it->f1 == tm.f1);
        }
    }
}

TEST_CASE("report files") {
    const auto tools = testing::hr_catalog().tool_names();
    std::mt19937_64 g(5);
    const auto m = confusion(random_records(g, tools, 150), tools);
    const auto metrics = per_tool_metrics(m);

    const auto lines = csv_lines(matrix_csv(m));
    REQUIRE(lines.size() == 15);  // header + 14 tools
    CHECK(std::count(lines[0].begin(), lines[0].end(), ',') + 1 == 16);
    CHECK(lines[0].starts_with("actual\\predicted,"));

    const auto undefined = per_tool_metrics(confusion_from_counts({"a", "b"}, {{0, 0}, {0, 3}}));
    CHECK_THAT(metrics_csv(undefined), Catch::Matchers::ContainsSubstring("\xE2\x80\x94"));

    const json bundle = confusion_bundle(m, metrics);
    CHECK(bundle["labels"].size() == 14);
    CHECK(bundle["counts"].size() == 14);
    CHECK(bundle["per_tool"].size() == 14);

    const std::vector<ModelReport> models{{"base", metrics}, {"tuned", metrics}};
    const auto cmp = csv_lines(comparison_csv(models));
    CHECK(cmp.size() == 15);
    CHECK_THAT(cmp[0], Catch::Matchers::ContainsSubstring("f1_base"));
    CHECK_THAT(cmp[0], Catch::Matchers::ContainsSubstring("f1_tuned"));

    const auto dir = std::filesystem::temp_directory_path() / "fcforge_report_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto files = report(m, metrics, dir);
    CHECK(files.size() == 3);
    for (const auto& f : files) CHECK(std::filesystem::exists(f));
    std::filesystem::remove_all(dir);
}
