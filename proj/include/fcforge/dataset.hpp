#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcforge/catalog.hpp"
#include "fcforge/literal.hpp"
#include "fcforge/synthesis.hpp"

namespace fcforge {

struct SampleMeta {
    std::string seed_id;
    std::string strategy;  // augmentation strategy, or "seed"
    Provenance provenance = Provenance::Ai;

    bool operator==(const SampleMeta&) const = default;
};

struct TrainingSample {
    std::string id;
    std::string question;
    std::vector<ToolSpec> tools;  // visible tool list
    CallInstruction answer;
    SampleMeta meta;
};

json sample_to_json(const TrainingSample& s);
TrainingSample sample_from_json(const json& j, const Catalog& catalog);

/// Builds samples whose tool list is the whole catalog in catalog order.
TrainingSample sample_from_pair(const InstructionPair& p, const Catalog& catalog, Provenance provenance);
TrainingSample sample_from_seed(const SeedQuestion& s, const CallInstruction& call, const Catalog& catalog);

enum class DefectKind { ToolNotInCatalog, ToolNotVisible, MissingRequired, TypeMismatch, UnknownParam, Ungrounded };
const char* to_string(DefectKind k);

struct Defect {
    DefectKind kind;
    std::string param;
    std::string message;
};

struct ValidateOptions {
    /// String arguments must occur in the question (case-insensitive).
    bool grounding = true;
};

/// Empty result means the sample passes.
std::vector<Defect> validate_sample(const TrainingSample& s, const Catalog& catalog, const ValidateOptions& opts = {});

struct Rejection {
    std::string id;
    std::vector<Defect> defects;
};

struct ValidationReport {
    std::vector<TrainingSample> passed;
    std::vector<Rejection> rejected;
};

ValidationReport validate_samples(std::vector<TrainingSample> samples, const Catalog& catalog,
                                  const ValidateOptions& opts = {});
json rejection_to_json(const Rejection& r);

struct QuotaSelection {
    std::vector<TrainingSample> selected;
    std::vector<std::string> warnings;
};

/// Keeps the first `quota` samples of each tool, in input order.
QuotaSelection select_per_tool(std::vector<TrainingSample> samples, std::size_t quota);

enum class DatasetFormat { ShareGpt, Alpaca, OpenAi, BfclV3 };
const char* to_string(DatasetFormat f);
std::optional<DatasetFormat> parse_dataset_format(std::string_view s);

class DatasetError : public Error {
public:
    using Error::Error;
};

struct AssembleOptions {
    DatasetFormat format = DatasetFormat::ShareGpt;
    std::uint64_t rng_seed = 0;
    /// When set, each sample sees its answer tool plus this many others
    /// drawn from the catalog instead of the full catalog.
    std::optional<std::size_t> distractors;
};

struct AssembleResult {
    std::string contents;  // file bytes
    json manifest;
    std::vector<TrainingSample> arranged;  // samples with their final tool order
};

/// Renders samples in the requested format. Each sample's tool list is
/// shuffled by a generator keyed on (rng_seed, sample id).
AssembleResult assemble(std::span<const TrainingSample> samples, const Catalog& catalog, const AssembleOptions& opts);
/// assemble() and write the file; returns the manifest.
json assemble_to_file(std::span<const TrainingSample> samples, const Catalog& catalog, const AssembleOptions& opts,
                      const std::filesystem::path& out);

/// Reads an assembled file back. Alpaca is write-only.
std::vector<TrainingSample> read_assembled(std::string_view contents, DatasetFormat format, const Catalog& catalog);

/// System turn used by chat-style formats; the tool list follows as JSON.
std::string tool_preamble(const std::vector<ToolSpec>& tools);
/// Answer text inside training records.
std::string answer_text(const CallInstruction& call);
json openai_tool(const ToolSpec& tool);
json bfcl_function(const ToolSpec& tool);

/// Conservative token estimate: max(ceil(chars / 4), ceil(cjk_bytes / 3) + ceil(other_chars / 4)).
std::size_t estimate_tokens(std::string_view text);
/// Estimated tokens of a sample as rendered for training (tool list, question, answer).
std::size_t sample_token_estimate(const TrainingSample& s);

struct SplitSpec {
    double train_fraction = 0.9;
    bool stratify_by_tool = true;
    std::uint64_t rng_seed = 0;
};

struct SplitResult {
    std::vector<TrainingSample> train;
    std::vector<TrainingSample> eval;
    std::vector<std::string> warnings;
};

SplitResult split(std::vector<TrainingSample> samples, const SplitSpec& spec);

struct TrainConfig {
    std::int64_t batch_size = 1;
    std::int64_t grad_accum = 16;
    double warmup_ratio = 0.1;
    double peak_lr = 8.0e-5;
    std::string schedule = "cosine";
    std::string precision = "bf16";
    std::int64_t epochs = 10;
    std::int64_t lora_r = 8;
    std::int64_t lora_alpha = 16;
    double lora_dropout = 0.0;
    std::string lora_target = "all";
    std::int64_t cutoff_len = 4096;

    bool operator==(const TrainConfig&) const = default;
};

struct TrainConfigResult {
    TrainConfig config;
    std::vector<std::string> warnings;  // CutoffTruncation
    bool truncation = false;
};

class TrainConfigError : public Error {
public:
    using Error::Error;
};

/// Applies `overrides` (field name -> value text) to the defaults and checks
/// the cutoff against `estimated_max_len`.
TrainConfigResult emit_train_config(const std::map<std::string, std::string>& overrides, std::size_t estimated_max_len);
std::string train_config_text(const TrainConfig& c);
TrainConfig parse_train_config(std::string_view text);

}  // namespace fcforge
