#include "fcforge/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include "fcforge/adapter.hpp"
#include "fcforge/analysis.hpp"
#include "fcforge/call_parser.hpp"
#include "fcforge/catalog.hpp"
#include "fcforge/dataset.hpp"
#include "fcforge/evaluator.hpp"
#include "fcforge/gateway.hpp"
#include "fcforge/synthesis.hpp"

#ifndef FCFORGE_DATA_DIR
#define FCFORGE_DATA_DIR "data"
#endif

namespace fcforge {

namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
    using Error::Error;
};

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool quiet = false;
    bool json_summary = false;
};

struct GatewayFlags {
    std::string backend;
    std::string mock_fixture;
    std::string record_mock;
    std::string base_url;
    std::string model;
    int max_in_flight = 0;
};

/// Settings merged from the config file and flags; flags win.
class Context {
public:
    Context(const Globals& g, std::ostream& out, std::ostream& err) : globals_(g), out_(out), err_(err) {
        if (!g.config.empty()) {
            if (!fs::exists(g.config)) throw UsageError("--config: file not found: " + g.config);
            try {
                config_ = json::parse(read_file(g.config));
            } catch (const json::parse_error& e) {
                throw UsageError("--config: " + std::string(e.what()));
            }
            if (!config_.is_object()) throw UsageError("--config: expected a JSON object");
            config_dir_ = fs::path(g.config).parent_path();
        }
        seed_ = g.seed ? *g.seed : config_.value("seed", std::uint64_t{0});
        out_dir_ = !g.out.empty() ? fs::path(g.out) : fs::path(config_.value("out", std::string(".")));
        if (g.out.empty() && config_.contains("out")) out_dir_ = resolve_config_path(out_dir_);
        fs::create_directories(out_dir_);
    }

    std::uint64_t seed() const { return seed_; }
    const fs::path& out_dir() const { return out_dir_; }
    fs::path out(const std::string& name) const { return out_dir_ / name; }

    /// Flag value if given, else the config key (relative to the config file), else `fallback`.
    fs::path path_setting(const std::string& flag_value, const char* key, const std::string& flag,
                          const std::string& fallback = "") const {
        fs::path p;
        if (!flag_value.empty()) p = flag_value;
        else if (config_.contains(key) && config_[key].is_string()) p = resolve_config_path(config_[key].get<std::string>());
        else if (!fallback.empty()) p = fallback;
        else throw UsageError(flag + " is required (or set \"" + key + "\" in the config file)");
        if (!fs::exists(p)) throw UsageError(flag + ": path not found: " + p.string());
        return p;
    }

    json stage_settings(const std::string& stage) const {
        if (config_.contains("stages") && config_["stages"].contains(stage)) return config_["stages"][stage];
        return json::object();
    }

    GatewayConfig gateway_config(const GatewayFlags& f) const {
        GatewayConfig c;
        if (config_.contains("gateway")) {
            json g = config_["gateway"];
            if (g.contains("mock_fixture") && g["mock_fixture"].is_string()) {
                g["mock_fixture"] = resolve_config_path(g["mock_fixture"].get<std::string>()).string();
            }
            c = gateway_config_from_json(g);
        }
        if (!f.backend.empty()) c.backend = f.backend;
        if (!f.mock_fixture.empty()) {
            c.mock_fixture = f.mock_fixture;
            if (f.backend.empty()) c.backend = "mock";
        }
        if (!f.base_url.empty()) c.base_url = f.base_url;
        if (!f.model.empty()) c.model = f.model;
        if (f.max_in_flight > 0) c.max_in_flight = f.max_in_flight;
        if (c.backend == "mock" && !c.mock_fixture.empty() && !fs::exists(c.mock_fixture)) {
            throw UsageError("--mock: fixture not found: " + c.mock_fixture);
        }
        c.check();
        return c;
    }

    void log(const std::string& msg) const {
        if (!globals_.quiet) err_ << msg << "\n";
    }
    void warn(const std::string& msg) const { err_ << "warning: " << msg << "\n"; }

    /// Writes `<stage>.manifest.json`: input and output hashes, seed, version, counts.
    void manifest(const std::string& stage, const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs,
                  const json& counts, const json& extra = json::object()) const {
        json in = json::object(), outj = json::object();
        for (const auto& p : inputs) in[p.string()] = file_sha256(p);
        for (const auto& p : outputs) outj[p.filename().string()] = file_sha256(p);
        json m{{"stage", stage},
               {"tool_version", kToolVersion},
               {"rng_seed", seed_},
               {"inputs", std::move(in)},
               {"outputs", std::move(outj)},
               {"counts", counts}};
        for (const auto& [k, v] : extra.items()) m[k] = v;
        write_file(out(stage + ".manifest.json"), m.dump(2) + "\n");
    }

    void summary(const json& s) const {
        if (globals_.json_summary) {
            out_ << s.dump() << "\n";
            return;
        }
        for (const auto& [k, v] : s.items()) out_ << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
    }

private:
    fs::path resolve_config_path(const fs::path& p) const {
        if (p.is_absolute() || config_dir_.empty()) return p;
        return config_dir_ / p;
    }

    Globals globals_;
    std::ostream& out_;
    std::ostream& err_;
    json config_ = json::object();
    fs::path config_dir_;
    std::uint64_t seed_ = 0;
    fs::path out_dir_;
};

std::vector<json> read_records(const fs::path& p) { return read_jsonl(p); }

void write_jsonl(const fs::path& p, const std::vector<json>& records) { write_file(p, to_jsonl(records)); }

/// Gateway plus an optional recorder that saves its replies on finish().
struct GatewayHandle {
    std::unique_ptr<Gateway> gateway;
    RecordingBackend* recorder = nullptr;
    fs::path record_path;

    void finish() const {
        if (recorder) recorder->save(record_path);
    }
};

GatewayHandle open_gateway(const Context& ctx, const GatewayFlags& f) {
    GatewayConfig cfg = ctx.gateway_config(f);
    GatewayHandle h;
    if (f.record_mock.empty()) {
        h.gateway = make_gateway(cfg);
        return h;
    }
    std::unique_ptr<Backend> inner;
    if (cfg.backend == "http") inner = make_http_backend(cfg);
    else if (!cfg.mock_fixture.empty()) inner = MockBackend::from_file(cfg.mock_fixture);
    else inner = std::make_unique<MockBackend>();
    auto rec = std::make_unique<RecordingBackend>(std::move(inner));
    h.recorder = rec.get();
    h.record_path = f.record_mock;
    h.gateway = std::make_unique<Gateway>(cfg, std::move(rec));
    return h;
}

void add_gateway_flags(CLI::App* sub, GatewayFlags& f) {
    sub->add_option("--backend", f.backend, "Completion backend: http or mock")->check(CLI::IsMember({"http", "mock"}));
    sub->add_option("--mock", f.mock_fixture, "Mock fixture (prompt hash -> reply)");
    sub->add_option("--record-mock", f.record_mock, "Save every reply to this fixture file");
    sub->add_option("--base-url", f.base_url, "Chat completions endpoint base URL");
    sub->add_option("--model", f.model, "Model name sent to the endpoint");
    sub->add_option("--max-in-flight", f.max_in_flight, "Concurrent request bound")->check(CLI::PositiveNumber);
}

std::map<std::string, Provenance> provenance_by_seed(const fs::path& seeds_path) {
    std::map<std::string, Provenance> out;
    for (const auto& r : read_records(seeds_path)) {
        SeedQuestion s = seed_from_json(r);
        out[s.id] = s.provenance;
    }
    return out;
}

// ---------------------------------------------------------------------------
// seeds

struct SeedsArgs {
    std::string catalog, pools, templates, human;
    std::size_t per_tool = 0;
    std::string template_id;
    GatewayFlags gw;
};

int cmd_seeds(Context& ctx, const SeedsArgs& a) {
    const json st = ctx.stage_settings("seeds");
    const fs::path catalog_path = ctx.path_setting(a.catalog, "catalog", "--catalog");
    const fs::path pools_path = ctx.path_setting(a.pools, "pools", "--pools");
    const fs::path tpl_dir = ctx.path_setting(a.templates, "templates", "--templates", FCFORGE_DATA_DIR "/templates");
    const Catalog catalog = load_catalog(catalog_path);
    const EntityPools pools = load_pools(pools_path);
    const TemplateSet templates = TemplateSet::load_dir(tpl_dir);

    SeedOptions opts;
    opts.per_tool = a.per_tool ? a.per_tool : st.value("per_tool", std::size_t{10});
    opts.template_id = !a.template_id.empty() ? a.template_id : st.value("template", std::string("seed_question"));
    opts.temperature = st.value("temperature", 0.8);
    opts.rng_seed = ctx.seed();

    GatewayHandle gw = open_gateway(ctx, a.gw);
    ctx.log("generating " + std::to_string(opts.per_tool) + " seeds for each of " +
            std::to_string(catalog.tools.size()) + " tools");
    std::vector<SeedQuestion> seeds = generate_seeds(catalog, opts, pools, templates, *gw.gateway);
    std::vector<fs::path> inputs{catalog_path, pools_path};
    std::size_t human_count = 0;
    if (!a.human.empty()) {
        if (!fs::exists(a.human)) throw UsageError("--human: file not found: " + a.human);
        auto records = read_records(a.human);
        auto human = import_human_seeds(records, catalog);
        human_count = human.size();
        for (auto& h : human) seeds.push_back(std::move(h));
        inputs.push_back(a.human);
    }
    gw.finish();

    std::vector<json> records;
    for (const auto& s : seeds) records.push_back(seed_to_json(s));
    const fs::path out = ctx.out("seeds.jsonl");
    write_jsonl(out, records);
    json counts{{"seeds", seeds.size()}, {"ai", seeds.size() - human_count}, {"human", human_count}};
    ctx.manifest("seeds", inputs, {out}, counts, json{{"template", opts.template_id}});
    ctx.summary(json{{"stage", "seeds"}, {"output", out.string()}, {"seeds", seeds.size()}});
    return kExitOk;
}

// ---------------------------------------------------------------------------
// augment

struct AugmentArgs {
    std::string catalog, pools, templates, seeds;
    std::size_t per_seed = 0, per_human_seed = 0;
    std::vector<double> mix;
    GatewayFlags gw;
};

int cmd_augment(Context& ctx, const AugmentArgs& a) {
    const json st = ctx.stage_settings("augment");
    const fs::path catalog_path = ctx.path_setting(a.catalog, "catalog", "--catalog");
    const fs::path pools_path = ctx.path_setting(a.pools, "pools", "--pools");
    const fs::path tpl_dir = ctx.path_setting(a.templates, "templates", "--templates", FCFORGE_DATA_DIR "/templates");
    const fs::path seeds_path = ctx.path_setting(a.seeds, "seeds", "--seeds", ctx.out("seeds.jsonl").string());
    const Catalog catalog = load_catalog(catalog_path);
    const EntityPools pools = load_pools(pools_path);
    const TemplateSet templates = TemplateSet::load_dir(tpl_dir);
    std::vector<SeedQuestion> seeds;
    for (const auto& r : read_records(seeds_path)) seeds.push_back(seed_from_json(r));

    AugmentPlan plan;
    plan.per_ai_seed = a.per_seed ? a.per_seed : st.value("per_seed", std::size_t{10});
    plan.per_human_seed = a.per_human_seed ? a.per_human_seed : st.value("per_human_seed", std::size_t{5});
    if (!a.mix.empty()) {
        if (a.mix.size() != 4) throw UsageError("--mix needs four weights (replacement,rewriting,simplification,error_introduction)");
        std::copy(a.mix.begin(), a.mix.end(), plan.mix.begin());
    }
    AugmentOptions opts;
    opts.rng_seed = ctx.seed();
    opts.temperature = st.value("temperature", 0.8);
    opts.tolerance_ratio = st.value("tolerance_ratio", 0.2);

    GatewayHandle gw = open_gateway(ctx, a.gw);
    ctx.log("augmenting " + std::to_string(seeds.size()) + " seeds");
    AugmentRun run = augment_all(seeds, catalog, plan, pools, templates, *gw.gateway, opts);
    gw.finish();
    for (const auto& w : run.warnings) ctx.warn(w);

    std::vector<json> records;
    json per_strategy = json::object();
    for (const auto& q : run.questions) {
        records.push_back(augmented_to_json(q));
        per_strategy[to_string(q.strategy)] = per_strategy.value(to_string(q.strategy), 0) + 1;
    }
    const fs::path out = ctx.out("augmented.jsonl");
    write_jsonl(out, records);
    ctx.manifest("augment", {catalog_path, pools_path, seeds_path}, {out},
                 json{{"augmented", run.questions.size()}, {"per_strategy", per_strategy}, {"warnings", run.warnings.size()}});
    ctx.summary(json{{"stage", "augment"}, {"output", out.string()}, {"augmented", run.questions.size()}});
    return kExitOk;
}

// ---------------------------------------------------------------------------
// extract

struct ExtractArgs {
    std::string catalog, templates, seeds, augmented;
    GatewayFlags gw;
};

int cmd_extract(Context& ctx, const ExtractArgs& a) {
    const fs::path catalog_path = ctx.path_setting(a.catalog, "catalog", "--catalog");
    const fs::path tpl_dir = ctx.path_setting(a.templates, "templates", "--templates", FCFORGE_DATA_DIR "/templates");
    const fs::path seeds_path = ctx.path_setting(a.seeds, "seeds", "--seeds", ctx.out("seeds.jsonl").string());
    const fs::path aug_path =
        ctx.path_setting(a.augmented, "augmented", "--augmented", ctx.out("augmented.jsonl").string());
    const Catalog catalog = load_catalog(catalog_path);
    const TemplateSet templates = TemplateSet::load_dir(tpl_dir);
    std::vector<SeedQuestion> seeds;
    for (const auto& r : read_records(seeds_path)) seeds.push_back(seed_from_json(r));
    std::vector<AugmentedQuestion> augmented;
    for (const auto& r : read_records(aug_path)) augmented.push_back(augmented_from_json(r));

    GatewayHandle gw = open_gateway(ctx, a.gw);
    ctx.log("extracting calls for " + std::to_string(seeds.size()) + " seeds");
    std::map<std::string, CallInstruction> seed_calls;
    std::vector<json> instr;
    std::vector<std::string> failures;
    for (const auto& s : seeds) {
        const ToolSpec* tool = catalog.find_tool(s.tool_name);
        if (!tool) throw SynthesisError(SynthesisError::Kind::InvalidInput, s.id + " names unknown tool " + s.tool_name);
        try {
            Extraction ex = extract_call(s, *tool, templates, *gw.gateway);
            seed_calls[s.id] = ex.call;
            instr.push_back(extraction_to_json(ex));
        } catch (const SynthesisError& e) {
            failures.push_back(e.what());
            ctx.warn(e.what());
        }
    }
    std::vector<AugmentedQuestion> kept;
    std::size_t orphaned = 0;
    for (auto& q : augmented) {
        if (seed_calls.contains(q.seed_id)) kept.push_back(std::move(q));
        else ++orphaned;
    }
    auto pairs = propagate_instructions(seed_calls, kept);
    const auto flagged = std::count_if(pairs.begin(), pairs.end(), [](const InstructionPair& p) { return p.re_extract; });
    ctx.log("re-extracting " + std::to_string(flagged) + " replacement pairs");
    ReextractRun run = resolve_reextractions(std::move(pairs), catalog, templates, *gw.gateway);
    gw.finish();
    for (const auto& d : run.dropped) ctx.warn("dropped " + d);

    std::vector<json> pair_records;
    for (const auto& p : run.pairs) pair_records.push_back(pair_to_json(p));
    const fs::path instr_path = ctx.out("instructions.jsonl");
    const fs::path pairs_path = ctx.out("pairs.jsonl");
    write_jsonl(instr_path, instr);
    write_jsonl(pairs_path, pair_records);
    json counts{{"instructions", instr.size()},
                {"extraction_failures", failures.size()},
                {"pairs", run.pairs.size()},
                {"re_extracted", flagged},
                {"dropped", run.dropped.size()},
                {"orphaned", orphaned}};
    ctx.manifest("extract", {catalog_path, seeds_path, aug_path}, {instr_path, pairs_path}, counts);
    ctx.summary(json{{"stage", "extract"}, {"pairs", run.pairs.size()}, {"instructions", instr.size()}});
    return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

struct ValidateArgs {
    std::string catalog, pairs, seeds, instructions;
    std::size_t quota = 0;
    bool drop_invalid = false;
    bool no_grounding = false;
    bool include_seeds = false;
};

int cmd_validate(Context& ctx, const ValidateArgs& a) {
    const fs::path catalog_path = ctx.path_setting(a.catalog, "catalog", "--catalog");
    const fs::path pairs_path = ctx.path_setting(a.pairs, "pairs", "--pairs", ctx.out("pairs.jsonl").string());
    const fs::path seeds_path = ctx.path_setting(a.seeds, "seeds", "--seeds", ctx.out("seeds.jsonl").string());
    const Catalog catalog = load_catalog(catalog_path);
    const auto provenance = provenance_by_seed(seeds_path);
    std::vector<fs::path> inputs{catalog_path, pairs_path, seeds_path};

    std::vector<TrainingSample> samples;
    if (a.include_seeds) {
        const fs::path instr_path =
            ctx.path_setting(a.instructions, "instructions", "--instructions", ctx.out("instructions.jsonl").string());
        inputs.push_back(instr_path);
        std::map<std::string, SeedQuestion> seeds;
        for (const auto& r : read_records(seeds_path)) {
            SeedQuestion s = seed_from_json(r);
            seeds.emplace(s.id, s);
        }
        for (const auto& r : read_records(instr_path)) {
            Extraction ex = extraction_from_json(r);
            if (auto it = seeds.find(ex.question_id); it != seeds.end()) {
                samples.push_back(sample_from_seed(it->second, ex.call, catalog));
            }
        }
    }
    for (const auto& r : read_records(pairs_path)) {
        InstructionPair p = pair_from_json(r);
        auto it = provenance.find(p.question.seed_id);
        samples.push_back(sample_from_pair(p, catalog, it == provenance.end() ? Provenance::Ai : it->second));
    }
    const std::size_t total = samples.size();
    ValidationReport report = validate_samples(std::move(samples), catalog, ValidateOptions{!a.no_grounding});

    std::vector<TrainingSample> kept = std::move(report.passed);
    std::vector<std::string> quota_warnings;
    const std::size_t quota = a.quota ? a.quota : ctx.stage_settings("validate").value("quota", std::size_t{0});
    if (quota > 0) {
        QuotaSelection sel = select_per_tool(std::move(kept), quota);
        kept = std::move(sel.selected);
        quota_warnings = std::move(sel.warnings);
        for (const auto& w : quota_warnings) ctx.warn(w);
    }

    std::vector<json> sample_records, rejected_records;
    for (const auto& s : kept) sample_records.push_back(sample_to_json(s));
    for (const auto& r : report.rejected) rejected_records.push_back(rejection_to_json(r));
    const fs::path samples_out = ctx.out("samples.jsonl");
    const fs::path rejected_out = ctx.out("rejected.jsonl");
    write_jsonl(samples_out, sample_records);
    write_jsonl(rejected_out, rejected_records);
    json counts{{"input", total}, {"passed", total - report.rejected.size()}, {"rejected", report.rejected.size()},
                {"retained", kept.size()}};
    if (quota) counts["quota"] = quota;
    ctx.manifest("validate", inputs, {samples_out, rejected_out}, counts, json{{"grounding", !a.no_grounding}});
    ctx.summary(json{{"stage", "validate"}, {"retained", kept.size()}, {"rejected", report.rejected.size()}});
    if (!report.rejected.empty()) {
        ctx.log(std::to_string(report.rejected.size()) + " samples failed validation; see " + rejected_out.string());
        if (!a.drop_invalid) return kExitDefects;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// assemble / split

std::vector<TrainingSample> load_samples(const fs::path& p, const Catalog& catalog) {
    std::vector<TrainingSample> out;
    for (const auto& r : read_records(p)) out.push_back(sample_from_json(r, catalog));
    return out;
}

struct AssembleArgs {
    std::string catalog, samples, format = "sharegpt", name = "dataset";
    std::optional<std::size_t> distractors;
};

int cmd_assemble(Context& ctx, const AssembleArgs& a) {
    const fs::path catalog_path = ctx.path_setting(a.catalog, "catalog", "--catalog");
    const fs::path samples_path = ctx.path_setting(a.samples, "samples", "--samples", ctx.out("samples.jsonl").string());
    auto format = parse_dataset_format(a.format);
    if (!format) throw UsageError("--format: unknown format '" + a.format + "'");
    const Catalog catalog = load_catalog(catalog_path);
    const auto samples = load_samples(samples_path, catalog);
    std::vector<std::string> invalid;
    for (const auto& s : samples) {
        if (!validate_sample(s, catalog, ValidateOptions{false}).empty()) invalid.push_back(s.id);
    }
    if (!invalid.empty()) {
        ctx.warn(std::to_string(invalid.size()) + " samples fail schema validation, first: " + invalid.front());
        return kExitDefects;
    }
    AssembleOptions opts{*format, ctx.seed(), a.distractors};
    const bool jsonl = *format == DatasetFormat::OpenAi || *format == DatasetFormat::BfclV3;
    const fs::path out = ctx.out(a.name + "." + to_string(*format) + (jsonl ? ".jsonl" : ".json"));
    json m = assemble_to_file(samples, catalog, opts, out);
    ctx.manifest("assemble", {catalog_path, samples_path}, {out}, m);
    ctx.summary(json{{"stage", "assemble"},
                     {"output", out.string()},
                     {"records", samples.size()},
                     {"estimated_max_tokens", m["estimated_max_tokens"]}});
    return kExitOk;
}

struct SplitArgs {
    std::string catalog, samples;
    double train_fraction = 0.9;
    bool no_stratify = false;
};

int cmd_split(Context& ctx, const SplitArgs& a) {
    const fs::path catalog_path = ctx.path_setting(a.catalog, "catalog", "--catalog");
    const fs::path samples_path = ctx.path_setting(a.samples, "samples", "--samples", ctx.out("samples.jsonl").string());
    const Catalog catalog = load_catalog(catalog_path);
    SplitResult r = split(load_samples(samples_path, catalog), SplitSpec{a.train_fraction, !a.no_stratify, ctx.seed()});
    for (const auto& w : r.warnings) ctx.warn(w);
    std::vector<json> train, eval;
    for (const auto& s : r.train) train.push_back(sample_to_json(s));
    for (const auto& s : r.eval) eval.push_back(sample_to_json(s));
    const fs::path train_out = ctx.out("train.jsonl"), eval_out = ctx.out("eval.jsonl");
    write_jsonl(train_out, train);
    write_jsonl(eval_out, eval);
    ctx.manifest("split", {catalog_path, samples_path}, {train_out, eval_out},
                 json{{"train", train.size()}, {"eval", eval.size()}},
                 json{{"train_fraction", a.train_fraction}, {"stratified", !a.no_stratify}});
    ctx.summary(json{{"stage", "split"}, {"train", train.size()}, {"eval", eval.size()}});
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train-config

struct TrainConfigArgs {
    std::vector<std::string> sets;
    std::string manifest;
    std::optional<std::size_t> estimated_max_len;
    bool allow_truncation = false;
};

int cmd_train_config(Context& ctx, const TrainConfigArgs& a) {
    std::map<std::string, std::string> overrides;
    const json st = ctx.stage_settings("train-config");
    for (const auto& [k, v] : st.items()) overrides[k] = v.is_string() ? v.get<std::string>() : v.dump();
    for (const auto& s : a.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--set: expected key=value, got '" + s + "'");
        overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    std::size_t est = 0;
    std::vector<fs::path> inputs;
    if (a.estimated_max_len) {
        est = *a.estimated_max_len;
    } else if (!a.manifest.empty()) {
        if (!fs::exists(a.manifest)) throw UsageError("--manifest: file not found: " + a.manifest);
        json m = json::parse(read_file(a.manifest));
        const json& counts = m.contains("counts") ? m["counts"] : m;
        if (!counts.contains("estimated_max_tokens")) throw UsageError("--manifest: no estimated_max_tokens in " + a.manifest);
        est = counts["estimated_max_tokens"].get<std::size_t>();
        inputs.push_back(a.manifest);
    }
    TrainConfigResult r = emit_train_config(overrides, est);
    for (const auto& w : r.warnings) ctx.warn(w);
    const fs::path out = ctx.out("train_config.yaml");
    write_file(out, train_config_text(r.config));
    ctx.manifest("train-config", inputs, {out}, json{{"estimated_max_len", est}, {"truncation", r.truncation}});
    ctx.summary(json{{"stage", "train-config"}, {"output", out.string()}, {"truncation", r.truncation}});
    return r.truncation && !a.allow_truncation ? kExitDefects : kExitOk;
}

// ---------------------------------------------------------------------------
// eval / confusion

struct EvalArgs {
    std::string cases, outputs;
    std::vector<double> verify_rates;
    int decimals = 1;
    bool casefold_values = false;
};

int cmd_eval(Context& ctx, const EvalArgs& a) {
    json summary{{"stage", "eval"}};
    int code = kExitOk;
    if (!a.verify_rates.empty()) {
        if (a.verify_rates.size() != 4) throw UsageError("--verify-rates needs four percentages");
        RateConsistency rc = check_reported_rates({a.verify_rates[0], a.verify_rates[1], a.verify_rates[2], a.verify_rates[3]},
                                                  a.decimals);
        summary["rates_consistent"] = rc.consistent;
        summary["rates_product_percent"] = rc.product_percent;
        summary["rates_explanation"] = rc.explanation;
        if (!rc.consistent) {
            ctx.warn("reported rates are inconsistent: " + rc.explanation);
            code = kExitDefects;
        }
    }
    if (a.cases.empty() && a.outputs.empty()) {
        if (a.verify_rates.empty()) throw UsageError("eval needs --cases and --outputs, or --verify-rates");
        ctx.summary(summary);
        return code;
    }
    if (a.cases.empty() || a.outputs.empty()) throw UsageError("--cases and --outputs go together");

    std::map<std::string, std::string> outputs;
    for (const auto& r : read_records(a.outputs)) {
        const std::string id = r.value("id", std::string());
        const json& out = r.contains("output") ? r["output"] : r.contains("result") ? r["result"] : json(nullptr);
        outputs[id] = out.is_string() ? out.get<std::string>() : out.is_null() ? "" : out.dump();
    }
    std::vector<Verdict> verdicts;
    std::vector<json> records;
    JudgePolicy policy;
    policy.casefold_values = a.casefold_values;
    for (const auto& r : read_records(a.cases)) {
        EvalCase c = eval_case_from_bfcl(r);
        auto it = outputs.find(c.id);
        c.raw_output = it == outputs.end() ? "" : it->second;
        Verdict v = judge(c, policy);
        json jv = verdict_to_json(c.id, v);
        jv["expected_tool"] = c.expected.tool_name;
        records.push_back(std::move(jv));
        verdicts.push_back(std::move(v));
    }
    StageMetrics m = aggregate(verdicts);
    const fs::path verdicts_out = ctx.out("verdicts.jsonl"), metrics_out = ctx.out("metrics.json");
    write_jsonl(verdicts_out, records);
    const json mj = metrics_to_json(m);
    write_file(metrics_out, mj.dump(2) + "\n");
    ctx.manifest("eval", {a.cases, a.outputs}, {verdicts_out, metrics_out},
                 json{{"cases", m.n_total}, {"se", m.n_se}, {"te", m.n_te}, {"pe", m.n_pe}, {"pass", m.n_pass}});
    for (const auto& [k, v] : mj.items()) {
        if (k.ends_with("_pct")) summary[k] = v;
    }
    ctx.summary(summary);
    return code;
}

struct ConfusionArgs {
    std::string catalog;
    std::vector<std::string> verdicts;
    std::vector<std::string> labels;
};

int cmd_confusion(Context& ctx, const ConfusionArgs& a) {
    const fs::path catalog_path = ctx.path_setting(a.catalog, "catalog", "--catalog");
    const Catalog catalog = load_catalog(catalog_path);
    if (!a.labels.empty() && a.labels.size() != a.verdicts.size()) {
        throw UsageError("--model must be given once per --verdicts file");
    }
    std::vector<ModelReport> models;
    std::vector<fs::path> outputs;
    json counts = json::object();
    for (std::size_t i = 0; i < a.verdicts.size(); ++i) {
        std::vector<LabelledVerdict> records;
        for (const auto& r : read_records(a.verdicts[i])) {
            if (!r.contains("expected_tool")) throw EvalError(a.verdicts[i] + ": verdict lacks expected_tool");
            records.push_back({r["expected_tool"].get<std::string>(), verdict_from_json(r)});
        }
        ConfusionMatrix m = confusion(records, catalog.tool_names());
        for (const auto& w : m.warnings) ctx.warn(w);
        auto metrics = per_tool_metrics(m);
        const std::string label = a.labels.empty() ? (a.verdicts.size() == 1 ? "" : "model" + std::to_string(i + 1))
                                                   : a.labels[i];
        const fs::path dir = label.empty() ? ctx.out_dir() : ctx.out(label);
        fs::create_directories(dir);
        for (auto& p : report(m, metrics, dir)) outputs.push_back(p);
        counts[label.empty() ? "cases" : label] = m.total();
        models.push_back({label.empty() ? "model" : label, std::move(metrics)});
    }
    if (models.size() > 1) {
        const fs::path cmp = ctx.out("comparison.csv");
        write_file(cmp, comparison_csv(models));
        outputs.push_back(cmp);
    }
    std::vector<fs::path> inputs{catalog_path};
    for (const auto& v : a.verdicts) inputs.emplace_back(v);
    ctx.manifest("confusion", inputs, outputs, counts);
    ctx.summary(json{{"stage", "confusion"}, {"models", models.size()}, {"files", outputs.size()}});
    return kExitOk;
}

// ---------------------------------------------------------------------------
// merge-lora / variant-catalog

struct MergeArgs {
    std::vector<std::string> adapters;
    std::string strategy = "linear";
    std::vector<double> weights;
    std::optional<double> density;
    std::optional<std::size_t> target_rank;
    std::string name = "merged.json";
};

int cmd_merge(Context& ctx, const MergeArgs& a) {
    auto strategy = parse_merge_strategy(a.strategy);
    if (!strategy) throw UsageError("--strategy: unknown strategy '" + a.strategy + "'");
    std::vector<LoraAdapter> adapters;
    for (const auto& p : a.adapters) adapters.push_back(load_adapter(p));
    MergeSpec spec;
    spec.strategy = *strategy;
    spec.weights = a.weights.empty() ? std::vector<double>(adapters.size(), 1.0) : a.weights;
    spec.density = a.density;
    spec.target_rank = a.target_rank;
    spec.rng_seed = ctx.seed();
    LoraAdapter merged = merge(adapters, spec);
    const fs::path out = ctx.out(a.name);
    save_adapter(merged, out);
    fs::path blob = out;
    blob.replace_extension(".bin");
    std::vector<fs::path> inputs;
    for (const auto& p : a.adapters) {
        inputs.emplace_back(p);
        fs::path b = p;
        inputs.push_back(b.replace_extension(".bin"));
    }
    json ranks = json::object();
    for (const auto& [name, m] : merged.modules) ranks[name] = m.r;
    ctx.manifest("merge-lora", inputs, {out, blob}, json{{"adapters", adapters.size()}, {"ranks", ranks}},
                 json{{"merge", merged.metadata["merge"]}});
    ctx.summary(json{{"stage", "merge-lora"}, {"output", out.string()}, {"strategy", a.strategy}});
    return kExitOk;
}

struct VariantArgs {
    std::string catalog, variant = "long", overrides, name = "catalog.variant.json";
};

int cmd_variant(Context& ctx, const VariantArgs& a) {
    const fs::path catalog_path = ctx.path_setting(a.catalog, "catalog", "--catalog");
    auto variant = parse_description_variant(a.variant);
    if (!variant) throw UsageError("--variant: expected long, short or none");
    std::map<std::string, std::string> overrides;
    std::vector<fs::path> inputs{catalog_path};
    if (!a.overrides.empty()) {
        if (!fs::exists(a.overrides)) throw UsageError("--overrides: file not found: " + a.overrides);
        overrides = json::parse(read_file(a.overrides)).get<std::map<std::string, std::string>>();
        inputs.emplace_back(a.overrides);
    }
    Catalog out_catalog = description_variant(load_catalog(catalog_path), *variant, overrides);
    const fs::path out = ctx.out(a.name);
    save_catalog(out_catalog, out);
    ctx.manifest("variant-catalog", inputs, {out}, json{{"tools", out_catalog.tools.size()}}, json{{"variant", a.variant}});
    ctx.summary(json{{"stage", "variant-catalog"}, {"output", out.string()}, {"variant", a.variant}});
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Function-calling data synthesis, evaluation and adapter merging", "fcforge"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kToolVersion);

    Globals g;
    std::uint64_t seed_value = 0;
    app.add_option("--config", g.config, "Run config (JSON)");
    auto* seed_opt = app.add_option("--seed", seed_value, "Root RNG seed");
    app.add_option("--out", g.out, "Output directory");
    app.add_flag("--quiet", g.quiet, "No progress on stderr");
    app.add_flag("--json", g.json_summary, "Print the summary as JSON");

    SeedsArgs seeds;
    auto* s_seeds = app.add_subcommand("seeds", "Generate seed questions per tool");
    s_seeds->add_option("--catalog", seeds.catalog, "Tool catalog");
    s_seeds->add_option("--pools", seeds.pools, "Entity pools");
    s_seeds->add_option("--templates", seeds.templates, "Prompt template directory");
    s_seeds->add_option("--per-tool", seeds.per_tool, "Seeds per tool")->check(CLI::PositiveNumber);
    s_seeds->add_option("--template", seeds.template_id, "Seed template id");
    s_seeds->add_option("--human", seeds.human, "Human-written seeds (JSONL) to append");
    add_gateway_flags(s_seeds, seeds.gw);

    AugmentArgs aug;
    auto* s_aug = app.add_subcommand("augment", "Augment seeds with the four strategies");
    s_aug->add_option("--catalog", aug.catalog, "Tool catalog");
    s_aug->add_option("--pools", aug.pools, "Entity pools");
    s_aug->add_option("--templates", aug.templates, "Prompt template directory");
    s_aug->add_option("--seeds", aug.seeds, "Seeds (JSONL)");
    s_aug->add_option("--per-seed", aug.per_seed, "Augmentations per AI seed")->check(CLI::PositiveNumber);
    s_aug->add_option("--per-human-seed", aug.per_human_seed, "Augmentations per human seed")->check(CLI::PositiveNumber);
    s_aug->add_option("--mix", aug.mix, "Strategy weights")->delimiter(',');
    add_gateway_flags(s_aug, aug.gw);

    ExtractArgs ext;
    auto* s_ext = app.add_subcommand("extract", "Extract calls for seeds and propagate them");
    s_ext->add_option("--catalog", ext.catalog, "Tool catalog");
    s_ext->add_option("--templates", ext.templates, "Prompt template directory");
    s_ext->add_option("--seeds", ext.seeds, "Seeds (JSONL)");
    s_ext->add_option("--augmented", ext.augmented, "Augmented questions (JSONL)");
    add_gateway_flags(s_ext, ext.gw);

    ValidateArgs val;
    auto* s_val = app.add_subcommand("validate", "Validate question/call pairs");
    s_val->add_option("--catalog", val.catalog, "Tool catalog");
    s_val->add_option("--pairs", val.pairs, "Pairs (JSONL)");
    s_val->add_option("--seeds", val.seeds, "Seeds (JSONL)");
    s_val->add_option("--instructions", val.instructions, "Seed instructions (JSONL)");
    s_val->add_option("--quota", val.quota, "Keep the first N valid samples per tool");
    s_val->add_flag("--drop-invalid", val.drop_invalid, "Drop failing samples and exit 0");
    s_val->add_flag("--no-grounding", val.no_grounding, "Skip the argument grounding check");
    s_val->add_flag("--include-seeds", val.include_seeds, "Also emit samples for the seeds themselves");

    AssembleArgs asm_args;
    std::size_t distractors = 0;
    auto* s_asm = app.add_subcommand("assemble", "Render samples in a training format");
    s_asm->add_option("--catalog", asm_args.catalog, "Tool catalog");
    s_asm->add_option("--samples", asm_args.samples, "Samples (JSONL)");
    s_asm->add_option("--format", asm_args.format, "sharegpt, alpaca, openai or bfcl_v3")
        ->check(CLI::IsMember({"sharegpt", "alpaca", "openai", "bfcl_v3"}));
    s_asm->add_option("--name", asm_args.name, "Output file stem");
    auto* distractor_opt = s_asm->add_option("--distractors", distractors, "Show the answer tool plus N others");

    SplitArgs spl;
    auto* s_spl = app.add_subcommand("split", "Split samples into train and eval");
    s_spl->add_option("--catalog", spl.catalog, "Tool catalog");
    s_spl->add_option("--samples", spl.samples, "Samples (JSONL)");
    s_spl->add_option("--train-fraction", spl.train_fraction, "Train share")->check(CLI::Range(0.0, 1.0));
    s_spl->add_flag("--no-stratify", spl.no_stratify, "Split without per-tool stratification");

    TrainConfigArgs tc;
    std::size_t est = 0;
    auto* s_tc = app.add_subcommand("train-config", "Emit the trainer configuration");
    s_tc->add_option("--set", tc.sets, "Override a field: key=value");
    s_tc->add_option("--manifest", tc.manifest, "Assemble manifest supplying the estimated max length");
    auto* est_opt = s_tc->add_option("--estimated-max-len", est, "Estimated maximum sample length in tokens");
    s_tc->add_flag("--allow-truncation", tc.allow_truncation, "Exit 0 even when cutoff_len truncates samples");

    EvalArgs ev;
    auto* s_ev = app.add_subcommand("eval", "Judge model outputs against cases");
    s_ev->add_option("--cases", ev.cases, "Cases (bfcl_v3 JSONL)")->check(CLI::ExistingFile);
    s_ev->add_option("--outputs", ev.outputs, "Model outputs (JSONL of id + output)")->check(CLI::ExistingFile);
    s_ev->add_option("--verify-rates", ev.verify_rates, "structural,tool,param,overall percentages")->delimiter(',');
    s_ev->add_option("--decimals", ev.decimals, "Decimals of the reported rates")->check(CLI::Range(0, 6));
    s_ev->add_flag("--casefold-values", ev.casefold_values, "Compare string values case-insensitively");

    ConfusionArgs cf;
    auto* s_cf = app.add_subcommand("confusion", "Tool-selection confusion matrix and per-tool metrics");
    s_cf->add_option("--catalog", cf.catalog, "Tool catalog");
    s_cf->add_option("--verdicts", cf.verdicts, "Verdicts (JSONL) from eval; repeat per model")
        ->required()
        ->check(CLI::ExistingFile);
    s_cf->add_option("--model", cf.labels, "Model label per verdicts file");

    MergeArgs mg;
    double density = 0;
    std::size_t target_rank = 0;
    auto* s_mg = app.add_subcommand("merge-lora", "Merge LoRA adapters");
    s_mg->add_option("--adapter", mg.adapters, "Adapter header JSON; repeat per adapter")->required()->check(CLI::ExistingFile);
    s_mg->add_option("--strategy", mg.strategy, "linear, cat, dare_linear, svd, ties or ties_svd")
        ->check(CLI::IsMember({"linear", "cat", "dare_linear", "svd", "ties", "ties_svd"}));
    s_mg->add_option("--weights", mg.weights, "One weight per adapter")->delimiter(',');
    auto* density_opt = s_mg->add_option("--density", density, "Kept fraction for dare_linear and ties");
    auto* rank_opt = s_mg->add_option("--target-rank", target_rank, "Rank of svd / ties_svd output")->check(CLI::PositiveNumber);
    s_mg->add_option("--name", mg.name, "Output header file name");

    VariantArgs va;
    auto* s_va = app.add_subcommand("variant-catalog", "Rewrite tool descriptions (long, short, none)");
    s_va->add_option("--catalog", va.catalog, "Tool catalog");
    s_va->add_option("--variant", va.variant, "long, short or none")->check(CLI::IsMember({"long", "short", "none"}));
    s_va->add_option("--overrides", va.overrides, "Short descriptions per tool (JSON object)");
    s_va->add_option("--name", va.name, "Output file name");

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (seed_opt->count()) g.seed = seed_value;
    if (distractor_opt->count()) asm_args.distractors = distractors;
    if (est_opt->count()) tc.estimated_max_len = est;
    if (density_opt->count()) mg.density = density;
    if (rank_opt->count()) mg.target_rank = target_rank;

    try {
        Context ctx(g, out, err);
        if (*s_seeds) return cmd_seeds(ctx, seeds);
        if (*s_aug) return cmd_augment(ctx, aug);
        if (*s_ext) return cmd_extract(ctx, ext);
        if (*s_val) return cmd_validate(ctx, val);
        if (*s_asm) return cmd_assemble(ctx, asm_args);
        if (*s_spl) return cmd_split(ctx, spl);
        if (*s_tc) return cmd_train_config(ctx, tc);
        if (*s_ev) return cmd_eval(ctx, ev);
        if (*s_cf) return cmd_confusion(ctx, cf);
        if (*s_mg) return cmd_merge(ctx, mg);
        if (*s_va) return cmd_variant(ctx, va);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDefects;
    }
    return kExitUsage;
}

}  // namespace fcforge
