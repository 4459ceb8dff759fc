#include "fcforge/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace fcforge {

std::int64_t ConfusionMatrix::row_sum(std::size_t row) const {
    std::int64_t s = 0;
    for (auto v : counts[row]) s += v;
    return s;
}

std::int64_t ConfusionMatrix::column_sum(std::size_t col) const {
    std::int64_t s = 0;
    for (const auto& row : counts) s += row[col];
    return s;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t s = 0;
    for (std::size_t r = 0; r < counts.size(); ++r) s += row_sum(r);
    return s;
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) s += counts[i][i];
    return s;
}

std::optional<Rational> ConfusionMatrix::micro_accuracy() const {
    std::int64_t denom = total() - column_sum(invalid_column());
    if (denom <= 0) return std::nullopt;
    return Rational(trace(), denom);
}

ConfusionMatrix confusion(std::span<const LabelledVerdict> records, const std::vector<std::string>& labels) {
    if (records.empty()) throw AnalysisError("EmptyInput: no records to analyse");
    ConfusionMatrix m;
    m.labels = labels;
    m.columns = labels;
    m.columns.emplace_back(kInvalidColumn);
    std::map<std::string, std::size_t> index, folded;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!index.emplace(labels[i], i).second) throw AnalysisError("duplicate label " + labels[i]);
        folded.emplace(casefold(normalize_text(labels[i])), i);
    }
    m.counts.assign(labels.size(), std::vector<std::int64_t>(m.columns.size(), 0));
    bool has_other = false;
    std::vector<std::int64_t> other(labels.size(), 0);

    for (const auto& rec : records) {
        auto row_it = index.find(rec.actual_tool);
        if (row_it == index.end()) throw AnalysisError("actual tool '" + rec.actual_tool + "' is not a label");
        std::size_t row = row_it->second;
        const Verdict& v = rec.verdict;
        if (v.tag == VerdictTag::StructureError || !v.predicted_tool) {
            ++m.counts[row][m.invalid_column()];
            continue;
        }
        std::size_t col;
        if (v.tag == VerdictTag::Pass || v.tag == VerdictTag::ParamError) {
            col = row;
        } else if (auto it = index.find(*v.predicted_tool); it != index.end()) {
            col = it->second;
        } else if (auto ft = folded.find(casefold(normalize_text(*v.predicted_tool))); ft != folded.end()) {
            col = ft->second;
        } else {
            m.warnings.push_back("predicted tool '" + *v.predicted_tool + "' is outside the catalog");
            has_other = true;
            ++other[row];
            continue;
        }
        ++m.counts[row][col];
    }
    if (has_other) {
        m.columns.emplace_back(kOtherColumn);
        for (std::size_t r = 0; r < labels.size(); ++r) m.counts[r].push_back(other[r]);
    }
    return m;
}

ConfusionMatrix confusion_from_counts(std::vector<std::string> labels, std::vector<std::vector<std::int64_t>> counts) {
    ConfusionMatrix m;
    m.labels = std::move(labels);
    m.columns = m.labels;
    m.columns.emplace_back(kInvalidColumn);
    if (counts.size() != m.labels.size()) throw AnalysisError("row count does not match labels");
    for (auto& row : counts) {
        if (row.size() == m.labels.size()) row.push_back(0);
        if (row.size() != m.columns.size()) throw AnalysisError("column count does not match labels");
        for (auto v : row) {
            if (v < 0) throw AnalysisError("negative count");
        }
    }
    m.counts = std::move(counts);
    return m;
}

std::vector<ToolMetrics> per_tool_metrics(const ConfusionMatrix& m) {
    std::vector<ToolMetrics> out;
    const std::int64_t total = m.total();
    for (std::size_t t = 0; t < m.labels.size(); ++t) {
        ToolMetrics tm;
        tm.tool = m.labels[t];
        tm.tp = m.at(t, t);
        tm.fp = m.column_sum(t) - tm.tp;
        tm.fn = m.row_sum(t) - tm.tp;
        tm.tn = total - tm.tp - tm.fp - tm.fn;
        if (tm.tp + tm.fp > 0) tm.precision = static_cast<double>(tm.tp) / static_cast<double>(tm.tp + tm.fp);
        if (tm.tp + tm.fn > 0) tm.recall = static_cast<double>(tm.tp) / static_cast<double>(tm.tp + tm.fn);
        if (tm.tp == 0 && tm.tp + tm.fn > 0) {
            tm.f1 = 0.0;
        } else if (tm.precision && tm.recall && *tm.precision + *tm.recall > 0) {
            tm.f1 = 2.0 * *tm.precision * *tm.recall / (*tm.precision + *tm.recall);
        }
        out.push_back(std::move(tm));
    }
    return out;
}

namespace {

const char* kUndefined = "\xE2\x80\x94";  // em dash: metric undefined

std::string fmt_rate(const std::optional<double>& v) {
    if (!v) return kUndefined;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

json rate_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string matrix_csv(const ConfusionMatrix& m) {
    std::vector<std::string> header{"actual\\predicted"};
    header.insert(header.end(), m.columns.begin(), m.columns.end());
    std::string out = csv_row(header);
    for (std::size_t r = 0; r < m.labels.size(); ++r) {
        std::vector<std::string> row{m.labels[r]};
        for (auto v : m.counts[r]) row.push_back(std::to_string(v));
        out += csv_row(row);
    }
    return out;
}

std::string metrics_csv(std::span<const ToolMetrics> metrics) {
    std::string out = csv_row({"tool", "tp", "tn", "fp", "fn", "precision", "recall", "f1"});
    for (const auto& tm : metrics) {
        out += csv_row(std::vector<std::string>{tm.tool, std::to_string(tm.tp), std::to_string(tm.tn),
                                                std::to_string(tm.fp), std::to_string(tm.fn), fmt_rate(tm.precision),
                                                fmt_rate(tm.recall), fmt_rate(tm.f1)});
    }
    return out;
}

json confusion_bundle(const ConfusionMatrix& m, std::span<const ToolMetrics> metrics) {
    json j = json::object();
    j["labels"] = m.labels;
    j["columns"] = m.columns;
    j["counts"] = m.counts;
    json per_tool = json::array();
    for (const auto& tm : metrics) {
        per_tool.push_back(json{{"tool", tm.tool},
                                {"tp", tm.tp},
                                {"tn", tm.tn},
                                {"fp", tm.fp},
                                {"fn", tm.fn},
                                {"precision", rate_json(tm.precision)},
                                {"recall", rate_json(tm.recall)},
                                {"f1", rate_json(tm.f1)}});
    }
    j["per_tool"] = std::move(per_tool);
    if (auto acc = m.micro_accuracy()) j["micro_accuracy"] = boost::rational_cast<double>(*acc);
    j["warnings"] = m.warnings;
    return j;
}

std::string comparison_csv(std::span<const ModelReport> models) {
    std::vector<std::string> header{"tool"};
    std::vector<std::string> tools;
    for (const auto& model : models) {
        header.push_back("f1_" + model.model);
        for (const auto& tm : model.metrics) {
            if (std::find(tools.begin(), tools.end(), tm.tool) == tools.end()) tools.push_back(tm.tool);
        }
    }
    std::string out = csv_row(header);
    for (const auto& tool : tools) {
        std::vector<std::string> row{tool};
        for (const auto& model : models) {
            std::optional<double> f1;
            for (const auto& tm : model.metrics) {
                if (tm.tool == tool) f1 = tm.f1;
            }
            row.push_back(fmt_rate(f1));
        }
        out += csv_row(row);
    }
    return out;
}

std::vector<std::filesystem::path> report(const ConfusionMatrix& m, std::span<const ToolMetrics> metrics,
                                          const std::filesystem::path& out_dir) {
    std::vector<std::filesystem::path> written{out_dir / "matrix.csv", out_dir / "per_tool_metrics.csv",
                                               out_dir / "confusion.json"};
    write_file(written[0], matrix_csv(m));
    write_file(written[1], metrics_csv(metrics));
    write_file(written[2], confusion_bundle(m, metrics).dump(2) + "\n");
    return written;
}

}  // namespace fcforge
