#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcforge/linalg.hpp"
#include "fcforge/util.hpp"

namespace fcforge {

/// Low-rank factors for one target module: delta = (alpha / r) * B * A.
struct LoraModule {
    std::size_t d = 0;  // output dim
    std::size_t k = 0;  // input dim
    std::size_t r = 0;
    double alpha = 0;
    std::vector<float> a;  // r x k, row-major
    std::vector<float> b;  // d x r, row-major

    double scale() const { return alpha / static_cast<double>(r); }
    Matrix a_matrix() const;
    Matrix b_matrix() const;
    void check(const std::string& name) const;
};

struct LoraAdapter {
    std::map<std::string, LoraModule> modules;
    /// Free-form; conventionally {"source_id", "cycle", "target_modules"}.
    json metadata = json::object();

    std::vector<std::string> module_names() const;
    bool operator==(const LoraAdapter& other) const;
};

using DeltaMatrix = std::map<std::string, Matrix>;

class AdapterError : public Error {
public:
    enum class Kind {
        ShapeMismatch,
        RankMismatch,
        ModuleSetMismatch,
        InvalidSpec,
        DensityOutOfRange,
        TargetRankTooLarge,
        MissingModule,
        MalformedContainer,
    };
    AdapterError(Kind kind, const std::string& msg);
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

const char* to_string(AdapterError::Kind kind);

DeltaMatrix full_delta(const LoraAdapter& adapter);
Matrix module_delta(const LoraModule& m);

enum class MergeStrategy { Linear, Cat, DareLinear, Svd, Ties, TiesSvd };
const char* to_string(MergeStrategy s);
std::optional<MergeStrategy> parse_merge_strategy(std::string_view s);

struct MergeSpec {
    MergeStrategy strategy = MergeStrategy::Linear;
    std::vector<double> weights;
    std::optional<double> density;  // dare_linear, ties, ties_svd only
    /// svd / ties_svd: truncation rank (default: largest input rank).
    /// dare_linear / ties: optional truncation of the re-factored delta
    /// (default: its numerical rank, i.e. exact).
    std::optional<std::size_t> target_rank;
    std::uint64_t rng_seed = 0;  // dare_linear only
};

LoraAdapter merge(std::span<const LoraAdapter> adapters, const MergeSpec& spec);

/// Re-factors a dense delta as B = U_t S_t, A = V_t^T with alpha = t.
/// `rank` = nullopt keeps the numerical rank (at least 1).
LoraModule refactor(const Matrix& delta, std::optional<std::size_t> rank);

/// Writes `<path>` (header JSON) and the blob next to it (`<stem>.bin`).
void save_adapter(const LoraAdapter& adapter, const std::filesystem::path& header_path);
LoraAdapter load_adapter(const std::filesystem::path& header_path);

}  // namespace fcforge
