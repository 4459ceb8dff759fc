#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fcforge/evaluator.hpp"

namespace fcforge {

inline constexpr const char* kInvalidColumn = "invalid";
inline constexpr const char* kOtherColumn = "other";

/// Tool-selection confusion matrix. Rows are actual tools in label order;
/// columns are the same tools, then "invalid" (unparseable output), then
/// "other" when some prediction named a tool outside the label set.
struct ConfusionMatrix {
    std::vector<std::string> labels;
    std::vector<std::string> columns;
    std::vector<std::vector<std::int64_t>> counts;  // [row][column]
    std::vector<std::string> warnings;

    std::int64_t at(std::size_t row, std::size_t col) const { return counts[row][col]; }
    std::int64_t row_sum(std::size_t row) const;
    std::int64_t column_sum(std::size_t col) const;
    std::int64_t total() const;
    std::int64_t trace() const;
    std::size_t invalid_column() const { return labels.size(); }
    /// trace / (total - invalid column); nullopt when every output was invalid.
    std::optional<Rational> micro_accuracy() const;
};

struct ToolMetrics {
    std::string tool;
    std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::optional<double> precision;  // nullopt: no predictions of this tool
    std::optional<double> recall;     // nullopt: no actual cases of this tool
    std::optional<double> f1;
};

class AnalysisError : public Error {
public:
    using Error::Error;
};

struct LabelledVerdict {
    std::string actual_tool;
    Verdict verdict;
};

ConfusionMatrix confusion(std::span<const LabelledVerdict> records, const std::vector<std::string>& labels);
/// Builds a matrix directly from counts; columns are labels + "invalid".
ConfusionMatrix confusion_from_counts(std::vector<std::string> labels, std::vector<std::vector<std::int64_t>> counts);

std::vector<ToolMetrics> per_tool_metrics(const ConfusionMatrix& m);

std::string matrix_csv(const ConfusionMatrix& m);
std::string metrics_csv(std::span<const ToolMetrics> metrics);
json confusion_bundle(const ConfusionMatrix& m, std::span<const ToolMetrics> metrics);

struct ModelReport {
    std::string model;
    std::vector<ToolMetrics> metrics;
};
/// One row per tool, one F1 column per model.
std::string comparison_csv(std::span<const ModelReport> models);

/// Writes matrix.csv, per_tool_metrics.csv and confusion.json into `out_dir`.
std::vector<std::filesystem::path> report(const ConfusionMatrix& m, std::span<const ToolMetrics> metrics,
                                          const std::filesystem::path& out_dir);

}  // namespace fcforge
