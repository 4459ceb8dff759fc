#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "fcforge/adapter.hpp"
#include "fcforge/call_parser.hpp"
#include "fcforge/cli.hpp"
#include "fcforge/evaluator.hpp"
#include "pipeline.hpp"
#include "synthetic_llm.hpp"

using namespace fcforge;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::size_t line_count(const fs::path& p) {
    const std::string s = read_file(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("fcforge_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

const std::string kCatalog = testing::data_path("hr_catalog.json");
const std::string kPools = testing::data_path("hr_pools.json");

// Records the synthetic model's replies for a small run once per process.
const fs::path& fixture() {
    static const fs::path path = [] {
        const fs::path p = fresh_dir("fixture") / "mock.json";
        testing::MockRunOptions opts;
        opts.per_tool = 4;
        opts.per_seed = 10;
        opts.seed = 42;
        testing::record_fixture(testing::hr_catalog(), testing::hr_pools(), opts, p);
        return p;
    }();
    return path;
}

LoraAdapter small_adapter(std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::normal_distribution<float> n(0.0f, 0.5f);
    LoraAdapter a;
    for (const char* name : {"q_proj", "v_proj"}) {
        LoraModule m;
        m.d = 6;
        m.k = 5;
        m.r = 2;
        m.alpha = 4;
        m.a.resize(m.r * m.k);
        m.b.resize(m.d * m.r);
        for (auto& x : m.a) x = n(g);
        for (auto& x : m.b) x = n(g);
        a.modules[name] = m;
    }
    return a;
}

}  // namespace

TEST_CASE("synthesis stages chain through the mock fixture") {
    const fs::path dir = fresh_dir("pipeline");
    const std::vector<std::string> common{"--seed", "42", "--out", dir.string(), "--quiet"};
    auto with = [&](std::vector<std::string> tail) {
        std::vector<std::string> args = common;
        args.insert(args.end(), tail.begin(), tail.end());
        return cli(args);
    };

    auto r = with({"seeds", "--catalog", kCatalog, "--pools", kPools, "--per-tool", "4", "--mock", fixture().string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(line_count(dir / "seeds.jsonl") == 56);
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("seeds: 56"));

    r = with({"augment", "--catalog", kCatalog, "--pools", kPools, "--mock", fixture().string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(line_count(dir / "augmented.jsonl") == 560);

    r = with({"extract", "--catalog", kCatalog, "--mock", fixture().string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(line_count(dir / "pairs.jsonl") == 560);
    CHECK(line_count(dir / "instructions.jsonl") == 56);

    r = with({"validate", "--catalog", kCatalog, "--quota", "36"});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(line_count(dir / "samples.jsonl") == 14 * 36);

    // Manifests chain: the validate input hash equals the extract output hash.
    const json extract_m = json::parse(read_file(dir / "extract.manifest.json"));
    const json validate_m = json::parse(read_file(dir / "validate.manifest.json"));
    CHECK(validate_m["inputs"][(dir / "pairs.jsonl").string()] == extract_m["outputs"]["pairs.jsonl"]);
    CHECK(validate_m["rng_seed"] == 42);
    CHECK(validate_m["tool_version"] == kToolVersion);

    r = with({"split", "--catalog", kCatalog});
    REQUIRE(r.code == 0);
    CHECK(line_count(dir / "train.jsonl") + line_count(dir / "eval.jsonl") == 14 * 36);

    for (const char* format : {"sharegpt", "alpaca", "openai", "bfcl_v3"}) {
        r = with({"assemble", "--catalog", kCatalog, "--samples", (dir / "eval.jsonl").string(), "--format", format,
                  "--name", "eval"});
        INFO(format << ": " << r.err);
        CHECK(r.code == 0);
    }
    CHECK(fs::exists(dir / "eval.bfcl_v3.jsonl"));

    r = with({"train-config", "--manifest", (dir / "assemble.manifest.json").string()});
    CHECK(r.code == 0);
    CHECK(parse_train_config(read_file(dir / "train_config.yaml")).epochs == 10);
    r = with({"train-config", "--estimated-max-len", "100000"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("CutoffTruncation"));
    CHECK(with({"train-config", "--estimated-max-len", "100000", "--allow-truncation"}).code == 0);

    // A model that echoes the gold answer for every other case.
    std::vector<json> outputs;
    std::size_t i = 0;
    for (const auto& rec : read_jsonl(dir / "eval.bfcl_v3.jsonl")) {
        const EvalCase c = eval_case_from_bfcl(rec);
        outputs.push_back(json{{"id", c.id}, {"output", i++ % 2 ? "no call" : serialize_call(c.expected, CallSyntaxForm::Pythonic)}});
    }
    write_file(dir / "outputs.jsonl", to_jsonl(outputs));
    r = with({"--json", "eval", "--cases", (dir / "eval.bfcl_v3.jsonl").string(), "--outputs", (dir / "outputs.jsonl").string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    const json summary = json::parse(r.out);
    CHECK(summary.contains("overall_acc_pct"));
    const json metrics = json::parse(read_file(dir / "metrics.json"));
    CHECK(metrics["n_total"] == outputs.size());
    CHECK(metrics["n_pass"] == (outputs.size() + 1) / 2);

    r = with({"confusion", "--catalog", kCatalog, "--verdicts", (dir / "verdicts.jsonl").string(), "--verdicts",
              (dir / "verdicts.jsonl").string(), "--model", "a", "--model", "b"});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "comparison.csv"));
    CHECK(fs::exists(dir / "a"));
}

TEST_CASE("re-running a stage gives byte-identical outputs") {
    const fs::path dir = fresh_dir("idempotent");
    auto seeds = [&] {
        return cli({"--seed", "42", "--out", dir.string(), "--quiet", "seeds", "--catalog", kCatalog, "--pools", kPools,
                    "--per-tool", "4", "--mock", fixture().string()});
    };
    REQUIRE(seeds().code == 0);
    const std::string first = read_file(dir / "seeds.jsonl");
    const std::string first_m = read_file(dir / "seeds.manifest.json");
    REQUIRE(seeds().code == 0);
    CHECK(read_file(dir / "seeds.jsonl") == first);
    CHECK(read_file(dir / "seeds.manifest.json") == first_m);

    // A different seed asks different prompts, which the fixture lacks.
    const auto miss = cli({"--seed", "7", "--out", dir.string(), "--quiet", "seeds", "--catalog", kCatalog, "--pools", kPools,
                           "--per-tool", "4", "--mock", fixture().string()});
    CHECK(miss.code == 1);
    CHECK_THAT(miss.err, Catch::Matchers::ContainsSubstring("MockMiss"));
}

TEST_CASE("config files supply paths relative to themselves") {
    const fs::path dir = fresh_dir("config");
    fs::copy_file(kCatalog, dir / "catalog.json");
    fs::copy_file(kPools, dir / "pools.json");
    fs::copy_file(fixture(), dir / "mock.json");
    write_file(dir / "run.json", json{{"catalog", "catalog.json"},
                                      {"pools", "pools.json"},
                                      {"seed", 42},
                                      {"out", "out"},
                                      {"gateway", {{"backend", "mock"}, {"mock_fixture", "mock.json"}}},
                                      {"stages", {{"seeds", {{"per_tool", 4}}}}}}
                                     .dump());
    const auto r = cli({"--config", (dir / "run.json").string(), "--quiet", "seeds"});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(line_count(dir / "out" / "seeds.jsonl") == 56);
}

TEST_CASE("usage errors exit 2 and name the flag") {
    const fs::path dir = fresh_dir("usage");
    auto r = cli({"--out", dir.string(), "seeds", "--pools", kPools});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("--catalog"));

    r = cli({"--out", dir.string(), "assemble", "--catalog", kCatalog, "--samples", kCatalog, "--format", "csv"});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("--format"));

    r = cli({"--out", dir.string(), "merge-lora", "--adapter", "/nonexistent.json"});
    CHECK(r.code == 2);
    r = cli({"--out", dir.string(), "no-such-command"});
    CHECK(r.code == 2);
    r = cli({"--out", dir.string(), "seeds", "--catalog", kCatalog, "--pools", kPools, "--mock", "/missing/fixture.json"});
    CHECK(r.code == 2);
    CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("--mock"));
    CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("validation defects exit 1 unless dropped") {
    const fs::path dir = fresh_dir("defects");
    const InstructionPair good{{"seed-000-000.rw00", "seed-000-000", "Leave_Balance_Inquiry", Strategy::Rewriting,
                                "Leave balance of Li Wei for 2023", "seed-000-000"},
                               {"Leave_Balance_Inquiry", {{"employee_name", Literal("Li Wei")}, {"year", Literal("2023")}}},
                               false};
    InstructionPair bad = good;
    bad.question.id = "seed-000-000.rw01";
    bad.call.arguments["employee_name"] = Literal("Zhou Jie");
    write_file(dir / "pairs.jsonl", to_jsonl(std::vector<json>{pair_to_json(good), pair_to_json(bad)}));
    write_file(dir / "seeds.jsonl", to_jsonl(std::vector<json>{seed_to_json({"seed-000-000", "Leave_Balance_Inquiry", "Leave for Li Wei in 2023",
                                                            Provenance::Ai, {}})}));
    auto r = cli({"--out", dir.string(), "--quiet", "validate", "--catalog", kCatalog});
    CHECK(r.code == 1);
    CHECK(line_count(dir / "rejected.jsonl") == 1);
    CHECK_THAT(read_file(dir / "rejected.jsonl"), Catch::Matchers::ContainsSubstring("Ungrounded"));
    r = cli({"--out", dir.string(), "--quiet", "validate", "--catalog", kCatalog, "--drop-invalid"});
    CHECK(r.code == 0);
    CHECK(line_count(dir / "samples.jsonl") == 1);
    r = cli({"--out", dir.string(), "--quiet", "validate", "--catalog", kCatalog, "--no-grounding"});
    CHECK(r.code == 0);
    CHECK(line_count(dir / "samples.jsonl") == 2);
}

TEST_CASE("rate verification") {
    auto r = cli({"--out", fresh_dir("rates").string(), "eval", "--verify-rates", "99.0,95.1,89.2,79.2"});
    CHECK(r.code == 1);
    CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("rates_consistent: false"));
    r = cli({"--out", fresh_dir("rates").string(), "eval", "--verify-rates", "92.8,82.8,29.6,22.7"});
    CHECK(r.code == 0);
}

TEST_CASE("merge-lora writes a loadable container") {
    const fs::path dir = fresh_dir("merge");
    save_adapter(small_adapter(1), dir / "a.json");
    save_adapter(small_adapter(2), dir / "b.json");
    auto r = cli({"--out", dir.string(), "--quiet", "merge-lora", "--adapter", (dir / "a.json").string(), "--adapter",
                  (dir / "b.json").string(), "--strategy", "cat", "--weights", "0.5,0.5"});
    INFO(r.err);
    REQUIRE(r.code == 0);
    const LoraAdapter merged = load_adapter(dir / "merged.json");
    CHECK(merged.modules.at("q_proj").r == 4);
    CHECK(merged.metadata["merge"]["strategy"] == "cat");
    const auto want = full_delta(small_adapter(1)).at("v_proj");
    const auto other = full_delta(small_adapter(2)).at("v_proj");
    const auto got = full_delta(merged).at("v_proj");
    CHECK(max_abs_diff(got, 0.5 * want + 0.5 * other) < 1e-6);

    r = cli({"--out", dir.string(), "merge-lora", "--adapter", (dir / "a.json").string(), "--strategy", "ties"});
    CHECK(r.code == 1);
    CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("density"));
}

TEST_CASE("variant-catalog") {
    const fs::path dir = fresh_dir("variant");
    auto r = cli({"--out", dir.string(), "--quiet", "variant-catalog", "--catalog", kCatalog, "--variant", "none"});
    REQUIRE(r.code == 0);
    const Catalog c = load_catalog(dir / "catalog.variant.json");
    CHECK(c.tools.size() == 14);
    for (const auto& t : c.tools) CHECK(t.description.empty());
    r = cli({"--out", dir.string(), "variant-catalog", "--catalog", kCatalog, "--variant", "short"});
    CHECK(r.code == 1);
}

TEST_CASE("the installed binary reports version and exit codes") {
    const std::string bin = FCFORGE_CLI_PATH;
    auto status = [](const std::string& cmd) {
        const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    const std::string out = " --out " + fresh_dir("binary").string();
    CHECK(status(bin + " --version") == 0);
    CHECK(status(bin + out + " seeds") == 2);
    CHECK(status(bin + out + " eval --verify-rates 99.0,95.1,89.2,79.2") == 1);
}
