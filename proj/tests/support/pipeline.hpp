#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fcforge/catalog.hpp"
#include "fcforge/dataset.hpp"
#include "fcforge/synthesis.hpp"

namespace fcforge::testing {

/// Output of the mock synthesis run on the HR fixture.
struct MockRun {
    std::vector<SeedQuestion> seeds;
    std::vector<AugmentedQuestion> augmented;
    std::vector<InstructionPair> pairs;
    ValidationReport validation;
    std::vector<TrainingSample> retained;  // after the per-tool quota
};

struct MockRunOptions {
    std::size_t per_tool = 10;
    std::size_t per_seed = 10;
    std::size_t quota = 90;
    std::uint64_t seed = 42;
    int max_in_flight = 4;
};

/// seeds -> augment -> extract -> propagate -> validate -> quota, all through SyntheticLlm.
MockRun run_mock_pipeline(const Catalog& catalog, const EntityPools& pools, const MockRunOptions& opts = {});

/// Runs seeds, augment and extract exactly as the CLI does and saves every
/// reply to a mock fixture, so the CLI can replay the run with --mock.
void record_fixture(const Catalog& catalog, const EntityPools& pools, const MockRunOptions& opts,
                    const std::filesystem::path& path);

Catalog hr_catalog();
EntityPools hr_pools();
TemplateSet hr_templates();

}  // namespace fcforge::testing
