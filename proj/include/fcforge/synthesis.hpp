#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcforge/catalog.hpp"
#include "fcforge/gateway.hpp"
#include "fcforge/literal.hpp"

namespace fcforge {

enum class Provenance { Ai, Human };
const char* to_string(Provenance p);

enum class Strategy { Replacement, Rewriting, Simplification, ErrorIntroduction };
inline constexpr Strategy kStrategies[] = {Strategy::Replacement, Strategy::Rewriting, Strategy::Simplification,
                                           Strategy::ErrorIntroduction};
const char* to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view s);
/// Two-letter code used in augmented ids: rp, rw, sm, er.
const char* strategy_code(Strategy s);

struct SeedQuestion {
    std::string id;
    std::string tool_name;
    std::string text;
    Provenance provenance = Provenance::Ai;
    std::optional<std::string> role_hint;

    bool operator==(const SeedQuestion&) const = default;
};

struct AugmentedQuestion {
    std::string id;
    std::string seed_id;
    std::string tool_name;
    Strategy strategy = Strategy::Rewriting;
    std::string text;
    std::string base_id;  // seed or earlier augmentation fed to the augmenter

    bool operator==(const AugmentedQuestion&) const = default;
};

struct EntityPools {
    std::vector<std::string> names;
    std::vector<std::string> departments;
    std::vector<std::string> cities;
    std::vector<std::string> years;
    std::map<std::string, std::vector<std::string>> misc;
};

class SynthesisError : public Error {
public:
    enum class Kind {
        ErrorIntroductionOnSeed,
        ExtractorUnparseable,
        UnknownParam,
        TypeMismatch,
        ToolMismatch,
        OrphanAugmentation,
        EmptyPool,
        InvalidInput,
    };
    SynthesisError(Kind kind, const std::string& msg);
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};
const char* to_string(SynthesisError::Kind k);

json seed_to_json(const SeedQuestion& s);
SeedQuestion seed_from_json(const json& j);
json augmented_to_json(const AugmentedQuestion& a);
AugmentedQuestion augmented_from_json(const json& j);
EntityPools pools_from_json(const json& j);
EntityPools load_pools(const std::filesystem::path& path);

/// Reads human-written seeds: JSONL records {"tool_name", "text", "role_hint"?}.
/// Ids are assigned as human-0001, human-0002, ... in file order.
std::vector<SeedQuestion> import_human_seeds(std::span<const json> records, const Catalog& catalog);

struct SeedOptions {
    std::size_t per_tool = 10;
    std::string template_id = "seed_question";
    double temperature = 0.8;
    std::size_t tolerance = 0;
    std::size_t ids_sample = 10;  // names offered to the generator per tool
    std::uint64_t rng_seed = 0;
};

std::vector<SeedQuestion> generate_seeds(const Catalog& catalog, const SeedOptions& opts, const EntityPools& pools,
                                         const TemplateSet& templates, Gateway& gateway);

struct AugmentOptions {
    double temperature = 0.8;
    /// Allowed shortfall or surplus of reply lines, as a fraction of the request.
    double tolerance_ratio = 0.2;
    std::size_t pool_sample = 12;
    std::uint64_t rng_seed = 0;
};

/// Augments a seed. `strategy` must not be error_introduction.
std::vector<AugmentedQuestion> augment(const SeedQuestion& q, const ToolSpec& tool, Strategy strategy, std::size_t count,
                                       const EntityPools& pools, const TemplateSet& templates, Gateway& gateway,
                                       const AugmentOptions& opts = {});
/// Augments an already-augmented question (any strategy).
std::vector<AugmentedQuestion> augment(const AugmentedQuestion& q, const ToolSpec& tool, Strategy strategy,
                                       std::size_t count, const EntityPools& pools, const TemplateSet& templates,
                                       Gateway& gateway, const AugmentOptions& opts = {});

/// Splits `total` over strategies in proportion to `mix` by largest remainder
/// (ties go to the earlier strategy).
std::array<std::size_t, 4> strategy_counts(std::size_t total, const std::array<double, 4>& mix);

struct AugmentPlan {
    std::size_t per_ai_seed = 10;
    std::size_t per_human_seed = 5;
    std::array<double, 4> mix{0.4, 0.4, 0.1, 0.1};
    std::size_t workers = 0;  // 0: the gateway's in-flight bound
};

struct AugmentRun {
    std::vector<AugmentedQuestion> questions;
    std::vector<std::string> warnings;
};

/// Augments every seed per the plan. Error introduction starts from the
/// seed's first rewriting output (else simplification, else replacement).
/// Output is sorted by (seed id, strategy, reply index).
AugmentRun augment_all(std::span<const SeedQuestion> seeds, const Catalog& catalog, const AugmentPlan& plan,
                       const EntityPools& pools, const TemplateSet& templates, Gateway& gateway,
                       const AugmentOptions& opts = {});

struct Extraction {
    std::string question_id;
    CallInstruction call;
    /// Required parameters the extractor left out; judged later by validation.
    std::vector<std::string> validation_pending;
};

struct ExtractOptions {
    std::string template_id = "extract_call";
    double temperature = 0.0;
};

Extraction extract_call(const std::string& question_id, const std::string& question_text, const ToolSpec& tool,
                        const TemplateSet& templates, Gateway& gateway, const ExtractOptions& opts = {});
Extraction extract_call(const SeedQuestion& q, const ToolSpec& tool, const TemplateSet& templates, Gateway& gateway,
                        const ExtractOptions& opts = {});

/// Interprets an extractor reply as tool arguments (exposed for testing).
Extraction arguments_from_reply(const std::string& reply, const ToolSpec& tool);

json extraction_to_json(const Extraction& e);
Extraction extraction_from_json(const json& j);

struct InstructionPair {
    AugmentedQuestion question;
    CallInstruction call;
    bool re_extract = false;
};

/// Pairs each augmented question with its seed's instruction. Pairs whose
/// lineage includes a replacement are flagged for re-extraction.
std::vector<InstructionPair> propagate_instructions(const std::map<std::string, CallInstruction>& seed_calls,
                                                    std::span<const AugmentedQuestion> augmented);

struct ReextractRun {
    std::vector<InstructionPair> pairs;
    std::vector<std::string> dropped;  // "<id>: <reason>"
};

/// Runs extraction again for flagged pairs; pairs whose re-extraction fails are dropped.
ReextractRun resolve_reextractions(std::vector<InstructionPair> pairs, const Catalog& catalog,
                                   const TemplateSet& templates, Gateway& gateway, const ExtractOptions& opts = {});

json pair_to_json(const InstructionPair& p);
InstructionPair pair_from_json(const json& j);

/// Variables available to templates for a tool.
std::map<std::string, std::string> tool_template_vars(const ToolSpec& tool);

}  // namespace fcforge
