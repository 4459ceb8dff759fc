#include "pipeline.hpp"

#include "synthetic_llm.hpp"

namespace fcforge::testing {

Catalog hr_catalog() { return load_catalog(data_path("hr_catalog.json")); }
EntityPools hr_pools() { return load_pools(data_path("hr_pools.json")); }
TemplateSet hr_templates() { return TemplateSet::load_dir(data_path("templates")); }

MockRun run_mock_pipeline(const Catalog& catalog, const EntityPools& pools, const MockRunOptions& opts) {
    const TemplateSet templates = hr_templates();
    auto gw = synthetic_gateway(pools, opts.max_in_flight);
    MockRun run;

    SeedOptions so;
    so.per_tool = opts.per_tool;
    so.rng_seed = opts.seed;
    run.seeds = generate_seeds(catalog, so, pools, templates, *gw);

    AugmentPlan plan;
    plan.per_ai_seed = opts.per_seed;
    AugmentOptions ao;
    ao.rng_seed = opts.seed;
    run.augmented = augment_all(run.seeds, catalog, plan, pools, templates, *gw, ao).questions;

    std::map<std::string, CallInstruction> seed_calls;
    for (const auto& s : run.seeds) {
        seed_calls[s.id] = extract_call(s, *catalog.find_tool(s.tool_name), templates, *gw).call;
    }
    run.pairs = resolve_reextractions(propagate_instructions(seed_calls, run.augmented), catalog, templates, *gw).pairs;

    std::vector<TrainingSample> samples;
    for (const auto& p : run.pairs) samples.push_back(sample_from_pair(p, catalog, Provenance::Ai));
    run.validation = validate_samples(std::move(samples), catalog);
    run.retained = select_per_tool(run.validation.passed, opts.quota).selected;
    return run;
}

void record_fixture(const Catalog& catalog, const EntityPools& pools, const MockRunOptions& opts,
                    const std::filesystem::path& path) {
    const TemplateSet templates = hr_templates();
    GatewayConfig cfg;
    cfg.max_in_flight = opts.max_in_flight;
    auto rec = std::make_unique<RecordingBackend>(
        std::make_unique<MockBackend>(std::map<std::string, std::string>{}, synthetic_responder(pools)));
    RecordingBackend* recorder = rec.get();
    Gateway gw(cfg, std::move(rec));

    SeedOptions so;
    so.per_tool = opts.per_tool;
    so.rng_seed = opts.seed;
    const auto seeds = generate_seeds(catalog, so, pools, templates, gw);
    AugmentPlan plan;
    plan.per_ai_seed = opts.per_seed;
    AugmentOptions ao;
    ao.rng_seed = opts.seed;
    const auto augmented = augment_all(seeds, catalog, plan, pools, templates, gw, ao).questions;
    std::map<std::string, CallInstruction> seed_calls;
    for (const auto& s : seeds) seed_calls[s.id] = extract_call(s, *catalog.find_tool(s.tool_name), templates, gw).call;
    resolve_reextractions(propagate_instructions(seed_calls, augmented), catalog, templates, gw);
    recorder->save(path);
}

}  // namespace fcforge::testing
