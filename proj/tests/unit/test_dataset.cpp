#include <catch_amalgamated.hpp>

#include <set>

#include "fcforge/call_parser.hpp"
#include "fcforge/dataset.hpp"
#include "pipeline.hpp"

using namespace fcforge;
using fcforge::testing::hr_catalog;

namespace {

TrainingSample make_sample(const Catalog& cat, std::string id, std::string question, CallInstruction answer) {
    TrainingSample s;
    s.id = std::move(id);
    s.question = std::move(question);
    s.tools = cat.tools;
    s.answer = std::move(answer);
    s.meta = SampleMeta{"seed-x", "rewriting", Provenance::Ai};
    return s;
}

std::vector<DefectKind> kinds(const std::vector<Defect>& ds) {
    std::vector<DefectKind> out;
    for (const auto& d : ds) out.push_back(d.kind);
    return out;
}

// Samples whose answers cycle through the catalog, `per_tool` each.
std::vector<TrainingSample> cycled(const Catalog& cat, std::size_t per_tool) {
    std::vector<TrainingSample> out;
    for (std::size_t i = 0; i < per_tool; ++i) {
        for (const auto& t : cat.tools) {
            CallInstruction call{t.name, {}};
            std::string q = "question " + std::to_string(i) + " about";
            for (const auto& p : t.params) {
                if (!p.required) continue;
                const std::string v = p.name + std::to_string(i);
                call.arguments[p.name] = Literal(v);
                q += " " + v;
            }
            out.push_back(make_sample(cat, t.name + "-" + std::to_string(i), q, call));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("sample validation names each defect") {
    const Catalog cat = hr_catalog();
    const std::string tool = "Staff_Basic_Information_Inquiry";
    const auto good = make_sample(cat, "g", "Basic information for Li Wei in 2023",
                                  CallInstruction{tool, {{"employee_name", Literal("li wei")}, {"year", Literal("2023")}}});
    CHECK(validate_sample(good, cat).empty());  // grounding is case-insensitive

    auto s = good;
    s.answer.tool_name = "Ghost_Tool";
    CHECK(kinds(validate_sample(s, cat)) == std::vector{DefectKind::ToolNotInCatalog});

    s = good;
    s.tools.erase(std::remove_if(s.tools.begin(), s.tools.end(), [&](const ToolSpec& t) { return t.name == tool; }), s.tools.end());
    CHECK(kinds(validate_sample(s, cat)) == std::vector{DefectKind::ToolNotVisible});

    s = good;
    s.answer.arguments.erase("employee_name");
    CHECK(kinds(validate_sample(s, cat)) == std::vector{DefectKind::MissingRequired});

    s = good;
    s.answer.arguments["year"] = Literal(2023);
    CHECK(kinds(validate_sample(s, cat)) == std::vector{DefectKind::TypeMismatch});

    s = good;
    s.answer.arguments["salary_band"] = Literal("B");
    CHECK(kinds(validate_sample(s, cat)) == std::vector{DefectKind::UnknownParam});

    s = good;
    s.answer.arguments["employee_name"] = Literal("Zhang Min");
    CHECK(kinds(validate_sample(s, cat)) == std::vector{DefectKind::Ungrounded});
    CHECK(validate_sample(s, cat, ValidateOptions{false}).empty());

    const auto report = validate_samples({good, s}, cat);
    CHECK(report.passed.size() == 1);
    REQUIRE(report.rejected.size() == 1);
    CHECK(rejection_to_json(report.rejected[0])["defects"][0]["kind"] == "Ungrounded");
}

TEST_CASE("per-tool quota keeps the first samples in order") {
    const Catalog cat = hr_catalog();
    auto samples = cycled(cat, 5);
    samples.resize(samples.size() - 1);  // the last tool now has 4
    const auto sel = select_per_tool(samples, 5);
    CHECK(sel.selected.size() == samples.size());
    REQUIRE(sel.warnings.size() == 1);
    CHECK_THAT(sel.warnings[0], Catch::Matchers::ContainsSubstring(cat.tools.back().name));

    const auto cut = select_per_tool(samples, 2);
    CHECK(cut.selected.size() == 28);
    CHECK(cut.selected[0].id == samples[0].id);
    CHECK(cut.selected[14].id == samples[14].id);
    CHECK(cut.warnings.empty());
}

TEST_CASE("every format round trips where it can be read back") {
    const Catalog cat = hr_catalog();
    const auto samples = cycled(cat, 2);
    for (auto format : {DatasetFormat::ShareGpt, DatasetFormat::OpenAi, DatasetFormat::BfclV3}) {
        INFO(to_string(format));
        const auto r = assemble(samples, cat, AssembleOptions{format, 5, {}});
        const auto back = read_assembled(r.contents, format, cat);
        REQUIRE(back.size() == samples.size());
        for (std::size_t i = 0; i < back.size(); ++i) {
            CHECK(back[i].question == samples[i].question);
            CHECK(back[i].answer == samples[i].answer);
            CHECK(back[i].tools == r.arranged[i].tools);
            CHECK(validate_sample(back[i], cat).empty());
        }
        CHECK(r.manifest["count"] == samples.size());
        CHECK(r.manifest["sha256"] == sha256_hex(r.contents));
        // Same seed, same bytes.
        CHECK(assemble(samples, cat, AssembleOptions{format, 5, {}}).contents == r.contents);
    }
    const auto alpaca = assemble(samples, cat, AssembleOptions{DatasetFormat::Alpaca, 5, {}});
    const json arr = json::parse(alpaca.contents);
    REQUIRE(arr.size() == samples.size());
    CHECK(arr[0]["instruction"] == samples[0].question);
    CHECK(parse_call(arr[0]["output"].get<std::string>()).calls.at(0) == samples[0].answer);
    CHECK_THROWS_AS(read_assembled(alpaca.contents, DatasetFormat::Alpaca, cat), DatasetError);
    CHECK_THROWS_AS(read_assembled("not json", DatasetFormat::ShareGpt, cat), DatasetError);
    CHECK(parse_dataset_format("bfcl_v3") == DatasetFormat::BfclV3);
    CHECK_FALSE(parse_dataset_format("csv"));
}

TEST_CASE("distractors bound the visible tool list and keep the answer") {
    const Catalog cat = hr_catalog();
    const auto samples = cycled(cat, 1);
    const auto r = assemble(samples, cat, AssembleOptions{DatasetFormat::ShareGpt, 1, 3});
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& tools = r.arranged[i].tools;
        CHECK(tools.size() == 4);
        CHECK(std::any_of(tools.begin(), tools.end(), [&](const ToolSpec& t) { return t.name == samples[i].answer.tool_name; }));
        std::set<std::string> names;
        for (const auto& t : tools) names.insert(t.name);
        CHECK(names.size() == tools.size());
    }
    CHECK(r.manifest["distractors"] == 3);
    // Without distractors every tool is visible, in a shuffled order.
    const auto all = assemble(samples, cat, AssembleOptions{DatasetFormat::ShareGpt, 1, {}});
    CHECK(all.arranged[0].tools.size() == cat.tools.size());
}

TEST_CASE("token estimates") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("abcd") == 1);
    CHECK(estimate_tokens("abcde") == 2);
    CHECK(estimate_tokens("\xE5\xB7\xA5\xE8\xB5\x84") == 2);  // two CJK characters
    CHECK(estimate_tokens("\xE5\xB7\xA5\xE8\xB5\x84\xE5\xB7\xA5\xE8\xB5\x84" "abcd") == 5);
    // Monotone under concatenation.
    CHECK(estimate_tokens("hello world, this is text") <= estimate_tokens("hello world, this is text and more"));
}

TEST_CASE("split is stratified, seeded and order preserving") {
    const Catalog cat = hr_catalog();
    const auto samples = cycled(cat, 10);
    const auto r = split(samples, SplitSpec{0.9, true, 3});
    CHECK(r.train.size() == 126);
    CHECK(r.eval.size() == 14);
    std::map<std::string, int> eval_per_tool;
    for (const auto& s : r.eval) ++eval_per_tool[s.answer.tool_name];
    CHECK(eval_per_tool.size() == 14);
    for (const auto& [_, n] : eval_per_tool) CHECK(n == 1);

    auto position = [&](const std::string& id) {
        return std::find_if(samples.begin(), samples.end(), [&](const TrainingSample& s) { return s.id == id; }) - samples.begin();
    };
    for (std::size_t i = 1; i < r.train.size(); ++i) CHECK(position(r.train[i - 1].id) < position(r.train[i].id));

    const auto again = split(samples, SplitSpec{0.9, true, 3});
    for (std::size_t i = 0; i < again.eval.size(); ++i) CHECK(again.eval[i].id == r.eval[i].id);

    const auto single = split(cycled(cat, 1), SplitSpec{0.9, true, 0});
    CHECK(single.train.size() == 14);
    CHECK(single.eval.empty());
    CHECK(single.warnings.size() == 14);

    std::vector<TrainingSample> ninety(samples.begin(), samples.begin() + 90);
    const auto flat = split(ninety, SplitSpec{0.9, false, 1});
    CHECK(flat.train.size() == 81);
    CHECK(flat.eval.size() == 9);

    CHECK_THROWS_AS(split(samples, SplitSpec{1.0, true, 0}), DatasetError);
}

TEST_CASE("train config defaults, overrides and round trip") {
    const auto r = emit_train_config({}, 1000);
    CHECK_FALSE(r.truncation);
    CHECK(r.config.batch_size == 1);
    CHECK(r.config.grad_accum == 16);
    CHECK(r.config.peak_lr == 8.0e-5);
    CHECK(r.config.epochs == 10);
    CHECK(r.config.schedule == "cosine");
    CHECK(parse_train_config(train_config_text(r.config)) == r.config);

    const auto o = emit_train_config({{"lora_r", "16"}, {"peak_lr", "1e-4"}, {"cutoff_len", "512"}}, 1000);
    CHECK(o.config.lora_r == 16);
    CHECK(o.config.peak_lr == 1e-4);
    CHECK(o.truncation);
    REQUIRE(o.warnings.size() == 1);
    CHECK_THAT(o.warnings[0], Catch::Matchers::StartsWith("CutoffTruncation"));
    CHECK(parse_train_config(train_config_text(o.config)) == o.config);

    CHECK_THROWS_AS(emit_train_config({{"lora_r", "eight"}}, 0), TrainConfigError);
    CHECK_THROWS_AS(emit_train_config({{"learning_rate", "1"}}, 0), TrainConfigError);
    CHECK_THROWS_AS(parse_train_config("batch_size 4"), TrainConfigError);
}

TEST_CASE("sample json round trip") {
    const Catalog cat = hr_catalog();
    const auto s = cycled(cat, 1)[3];
    const auto back = sample_from_json(sample_to_json(s), cat);
    CHECK(back.id == s.id);
    CHECK(back.answer == s.answer);
    CHECK(back.meta == s.meta);
    CHECK(back.tools == s.tools);
}
