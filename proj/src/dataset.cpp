#include "fcforge/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "fcforge/call_parser.hpp"

namespace fcforge {

// ---------------------------------------------------------------------------
// Samples

json sample_to_json(const TrainingSample& s) {
    json tools = json::array();
    for (const auto& t : s.tools) tools.push_back(t.name);
    return json{{"id", s.id},
                {"question", s.question},
                {"tools", std::move(tools)},
                {"answer", call_to_json(s.answer)},
                {"meta",
                 json{{"seed_id", s.meta.seed_id}, {"strategy", s.meta.strategy}, {"provenance", to_string(s.meta.provenance)}}}};
}

TrainingSample sample_from_json(const json& j, const Catalog& catalog) {
    try {
        TrainingSample s;
        s.id = j.at("id").get<std::string>();
        s.question = j.at("question").get<std::string>();
        for (const auto& name : j.at("tools")) {
            const std::string n = name.get<std::string>();
            if (const ToolSpec* t = catalog.find_tool(n)) s.tools.push_back(*t);
            else s.tools.push_back(ToolSpec{n, "", {}, json::object()});
        }
        s.answer = call_from_json(j.at("answer"));
        const json& meta = j.value("meta", json::object());
        s.meta.seed_id = meta.value("seed_id", std::string());
        s.meta.strategy = meta.value("strategy", std::string());
        s.meta.provenance = meta.value("provenance", std::string("ai")) == "human" ? Provenance::Human : Provenance::Ai;
        return s;
    } catch (const json::exception& e) {
        throw DatasetError(std::string("malformed sample record: ") + e.what());
    }
}

TrainingSample sample_from_pair(const InstructionPair& p, const Catalog& catalog, Provenance provenance) {
    return TrainingSample{p.question.id, p.question.text, catalog.tools, p.call,
                          SampleMeta{p.question.seed_id, to_string(p.question.strategy), provenance}};
}

TrainingSample sample_from_seed(const SeedQuestion& s, const CallInstruction& call, const Catalog& catalog) {
    return TrainingSample{s.id, s.text, catalog.tools, call, SampleMeta{s.id, "seed", s.provenance}};
}

// ---------------------------------------------------------------------------
// Validation

const char* to_string(DefectKind k) {
    switch (k) {
        case DefectKind::ToolNotInCatalog: return "ToolNotInCatalog";
        case DefectKind::ToolNotVisible: return "ToolNotVisible";
        case DefectKind::MissingRequired: return "MissingRequired";
        case DefectKind::TypeMismatch: return "TypeMismatch";
        case DefectKind::UnknownParam: return "UnknownParam";
        case DefectKind::Ungrounded: return "Ungrounded";
    }
    return "?";
}

std::vector<Defect> validate_sample(const TrainingSample& s, const Catalog& catalog, const ValidateOptions& opts) {
    std::vector<Defect> defects;
    const ToolSpec* tool = catalog.find_tool(s.answer.tool_name);
    if (!tool) {
        defects.push_back({DefectKind::ToolNotInCatalog, "", "tool '" + s.answer.tool_name + "' is not in the catalog"});
        return defects;
    }
    if (std::none_of(s.tools.begin(), s.tools.end(), [&](const ToolSpec& t) { return t.name == tool->name; })) {
        defects.push_back({DefectKind::ToolNotVisible, "", "answer tool is missing from the sample's tool list"});
    }
    const std::string folded_question = casefold(normalize_text(s.question));
    for (const auto& [name, value] : s.answer.arguments) {
        const ParamSpec* p = tool->find_param(name);
        if (!p) {
            defects.push_back({DefectKind::UnknownParam, name, "unknown parameter '" + name + "'"});
            continue;
        }
        if (!literal_matches_type(value, p->type)) {
            defects.push_back({DefectKind::TypeMismatch, name,
                               name + " expects " + to_string(p->type) + ", got " + kind_name(value.kind())});
            continue;
        }
        if (opts.grounding && value.is_string()) {
            const std::string needle = casefold(normalize_text(value.as_string()));
            if (folded_question.find(needle) == std::string::npos) {
                defects.push_back({DefectKind::Ungrounded, name, "value of " + name + " does not occur in the question"});
            }
        }
    }
    for (const auto& p : tool->params) {
        if (p.required && !s.answer.arguments.contains(p.name)) {
            defects.push_back({DefectKind::MissingRequired, p.name, "required parameter '" + p.name + "' is missing"});
        }
    }
    return defects;
}

ValidationReport validate_samples(std::vector<TrainingSample> samples, const Catalog& catalog,
                                  const ValidateOptions& opts) {
    ValidationReport report;
    for (auto& s : samples) {
        auto defects = validate_sample(s, catalog, opts);
        if (defects.empty()) report.passed.push_back(std::move(s));
        else report.rejected.push_back({s.id, std::move(defects)});
    }
    return report;
}

json rejection_to_json(const Rejection& r) {
    json defects = json::array();
    for (const auto& d : r.defects) {
        json jd{{"kind", to_string(d.kind)}, {"message", d.message}};
        if (!d.param.empty()) jd["param"] = d.param;
        defects.push_back(std::move(jd));
    }
    return json{{"id", r.id}, {"defects", std::move(defects)}};
}

QuotaSelection select_per_tool(std::vector<TrainingSample> samples, std::size_t quota) {
    QuotaSelection out;
    std::map<std::string, std::size_t> taken;
    std::vector<std::string> order;
    for (auto& s : samples) {
        auto [it, fresh] = taken.emplace(s.answer.tool_name, 0);
        if (fresh) order.push_back(s.answer.tool_name);
        if (it->second < quota) {
            ++it->second;
            out.selected.push_back(std::move(s));
        }
    }
    for (const auto& tool : order) {
        if (taken[tool] < quota) {
            out.warnings.push_back(tool + ": only " + std::to_string(taken[tool]) + " samples for a quota of " +
                                   std::to_string(quota));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rendering

const char* to_string(DatasetFormat f) {
    switch (f) {
        case DatasetFormat::ShareGpt: return "sharegpt";
        case DatasetFormat::Alpaca: return "alpaca";
        case DatasetFormat::OpenAi: return "openai";
        case DatasetFormat::BfclV3: return "bfcl_v3";
    }
    return "?";
}

std::optional<DatasetFormat> parse_dataset_format(std::string_view s) {
    for (auto f : {DatasetFormat::ShareGpt, DatasetFormat::Alpaca, DatasetFormat::OpenAi, DatasetFormat::BfclV3}) {
        if (s == to_string(f)) return f;
    }
    return std::nullopt;
}

namespace {

constexpr std::string_view kToolsMarker = "\nTools:\n";

json tools_json(const std::vector<ToolSpec>& tools) {
    json arr = json::array();
    for (const auto& t : tools) arr.push_back(tool_to_json(t));
    return arr;
}

json schema_params(const ToolSpec& tool, bool bfcl) {
    json props = json::object();
    json required = json::array();
    for (const auto& p : tool.params) {
        json jp = json::object();
        std::string type = to_string(p.type);
        if (bfcl && p.type == DataType::Number) type = "float";
        if (bfcl && p.type == DataType::Object) type = "dict";
        jp["type"] = type;
        jp["description"] = p.description;
        if (p.default_value) jp["default"] = literal_to_json(*p.default_value);
        if (p.examples) {
            json ex = json::array();
            for (const auto& e : *p.examples) ex.push_back(literal_to_json(e));
            jp["examples"] = std::move(ex);
        }
        for (const auto& [k, v] : p.extra.items()) jp[k] = v;
        props[p.name] = std::move(jp);
        if (p.required) required.push_back(p.name);
    }
    return json{{"type", bfcl ? "dict" : "object"}, {"properties", std::move(props)}, {"required", std::move(required)}};
}

json with_extra(json base, const ToolSpec& tool) {
    for (const auto& [k, v] : tool.extra.items()) base[k] = v;
    return base;
}

std::string dump(const json& j) { return j.dump(-1, ' ', false); }

}  // namespace

std::string tool_preamble(const std::vector<ToolSpec>& tools) {
    return "You can call the tools listed below. When a request needs one, reply only with a call list such as "
           "[tool_name(param=value)]." +
           std::string(kToolsMarker) + dump(tools_json(tools));
}

std::string answer_text(const CallInstruction& call) { return serialize_calls({call}, CallSyntaxForm::Pythonic); }

json openai_tool(const ToolSpec& tool) {
    return json{{"type", "function"},
                {"function", with_extra(json{{"name", tool.name},
                                             {"description", tool.description},
                                             {"parameters", schema_params(tool, false)}},
                                        tool)}};
}

json bfcl_function(const ToolSpec& tool) {
    return with_extra(
        json{{"name", tool.name}, {"description", tool.description}, {"parameters", schema_params(tool, true)}}, tool);
}

std::size_t estimate_tokens(std::string_view text) {
    std::size_t chars = 0, cjk_bytes = 0, other_chars = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
        if (i + len > text.size()) len = 1;
        char32_t cp = 0;
        if (len == 1) {
            cp = c;
        } else {
            auto decoded = utf8_decode(text.substr(i, len));
            cp = decoded.size() == 1 ? decoded[0] : 0;
        }
        ++chars;
        if (is_cjk(cp)) cjk_bytes += len;
        else ++other_chars;
        i += len;
    }
    const std::size_t plain = (chars + 3) / 4;
    const std::size_t mixed = (cjk_bytes + 2) / 3 + (other_chars + 3) / 4;
    return std::max(plain, mixed);
}

std::size_t sample_token_estimate(const TrainingSample& s) {
    return estimate_tokens(tool_preamble(s.tools) + "\n" + s.question + "\n" + answer_text(s.answer));
}

namespace {

std::vector<ToolSpec> arrange_tools(const TrainingSample& s, const Catalog& catalog, const AssembleOptions& opts) {
    Rng rng(derive_seed(opts.rng_seed, {"assemble", s.id}));
    std::vector<ToolSpec> tools;
    if (opts.distractors) {
        std::vector<ToolSpec> others;
        for (const auto& t : catalog.tools) {
            if (t.name != s.answer.tool_name) others.push_back(t);
        }
        rng.shuffle(others);
        if (others.size() > *opts.distractors) others.resize(*opts.distractors);
        tools = std::move(others);
        if (const ToolSpec* answer = catalog.find_tool(s.answer.tool_name)) tools.push_back(*answer);
    } else {
        tools = catalog.tools;
    }
    rng.shuffle(tools);
    return tools;
}

json render_record(const TrainingSample& s, DatasetFormat format) {
    switch (format) {
        case DatasetFormat::ShareGpt:
            return json{{"id", s.id},
                        {"conversations", json::array({json{{"from", "system"}, {"value", tool_preamble(s.tools)}},
                                                       json{{"from", "human"}, {"value", s.question}},
                                                       json{{"from", "gpt"}, {"value", answer_text(s.answer)}}})}};
        case DatasetFormat::Alpaca:
            return json{{"instruction", s.question}, {"input", tool_preamble(s.tools)}, {"output", answer_text(s.answer)}};
        case DatasetFormat::OpenAi: {
            json tools = json::array();
            for (const auto& t : s.tools) tools.push_back(openai_tool(t));
            const json args = call_to_json(s.answer)["arguments"];
            json call{{"id", "call_0"},
                      {"type", "function"},
                      {"function", json{{"name", s.answer.tool_name}, {"arguments", dump(args)}}}};
            return json{{"messages", json::array({json{{"role", "user"}, {"content", s.question}},
                                                  json{{"role", "assistant"},
                                                       {"content", nullptr},
                                                       {"tool_calls", json::array({call})}}})},
                        {"tools", std::move(tools)}};
        }
        case DatasetFormat::BfclV3: {
            json functions = json::array();
            for (const auto& t : s.tools) functions.push_back(bfcl_function(t));
            json accepted = json::object();
            const ToolSpec* answer_tool = nullptr;
            for (const auto& t : s.tools) {
                if (t.name == s.answer.tool_name) answer_tool = &t;
            }
            for (const auto& [name, value] : s.answer.arguments) accepted[name] = json::array({literal_to_json(value)});
            if (answer_tool) {
                for (const auto& p : answer_tool->params) {
                    if (!p.required && !accepted.contains(p.name)) accepted[p.name] = json::array({""});
                }
            }
            return json{{"id", s.id},
                        {"question", json::array({json::array({json{{"role", "user"}, {"content", s.question}}})})},
                        {"function", std::move(functions)},
                        {"ground_truth", json::array({json{{s.answer.tool_name, std::move(accepted)}}})}};
        }
    }
    throw DatasetError("unknown format");
}

}  // namespace

AssembleResult assemble(std::span<const TrainingSample> samples, const Catalog& catalog, const AssembleOptions& opts) {
    AssembleResult result;
    std::vector<std::string> lines;
    std::map<std::string, std::int64_t> per_tool;
    std::size_t max_tokens = 0, sum_tokens = 0;
    for (const auto& s : samples) {
        TrainingSample arranged = s;
        arranged.tools = arrange_tools(s, catalog, opts);
        const std::size_t tokens = sample_token_estimate(arranged);
        max_tokens = std::max(max_tokens, tokens);
        sum_tokens += tokens;
        ++per_tool[s.answer.tool_name];
        lines.push_back(dump(render_record(arranged, opts.format)));
        result.arranged.push_back(std::move(arranged));
    }
    const bool jsonl = opts.format == DatasetFormat::OpenAi || opts.format == DatasetFormat::BfclV3;
    std::string out;
    if (jsonl) {
        for (const auto& l : lines) out += l + "\n";
    } else {
        out = "[\n";
        for (std::size_t i = 0; i < lines.size(); ++i) out += lines[i] + (i + 1 < lines.size() ? ",\n" : "\n");
        out += "]\n";
    }
    json counts = json::object();
    for (const auto& t : catalog.tools) {
        if (auto it = per_tool.find(t.name); it != per_tool.end()) counts[t.name] = it->second;
    }
    for (const auto& [name, n] : per_tool) {
        if (!counts.contains(name)) counts[name] = n;
    }
    result.manifest = json{{"format", to_string(opts.format)},
                           {"rng_seed", opts.rng_seed},
                           {"count", samples.size()},
                           {"per_tool", std::move(counts)},
                           {"estimated_max_tokens", max_tokens},
                           {"estimated_mean_tokens", samples.empty() ? 0.0
                                                                      : static_cast<double>(sum_tokens) /
                                                                            static_cast<double>(samples.size())},
                           {"sha256", sha256_hex(out)}};
    if (opts.distractors) result.manifest["distractors"] = *opts.distractors;
    result.contents = std::move(out);
    return result;
}

json assemble_to_file(std::span<const TrainingSample> samples, const Catalog& catalog, const AssembleOptions& opts,
                      const std::filesystem::path& out) {
    AssembleResult r = assemble(samples, catalog, opts);
    write_file(out, r.contents);
    return r.manifest;
}

// ---------------------------------------------------------------------------
// Reading back

namespace {

CallInstruction parse_answer(const std::string& text) {
    ParseOutcome o = parse_call(text);
    if (!o.ok() || o.calls.size() != 1) throw DatasetError("answer is not a single call: " + text);
    return o.calls.front();
}

std::vector<ToolSpec> tools_from_preamble(const std::string& text) {
    const auto at = text.find(kToolsMarker);
    if (at == std::string::npos) throw DatasetError("system turn lacks the tool list");
    json arr = json::parse(text.substr(at + kToolsMarker.size()));
    std::vector<ToolSpec> tools;
    for (const auto& t : arr) tools.push_back(tool_from_json(t));
    return tools;
}

}  // namespace

std::vector<TrainingSample> read_assembled(std::string_view contents, DatasetFormat format,
                                           [[maybe_unused]] const Catalog& catalog) {
    std::vector<json> records;
    try {
        if (format == DatasetFormat::OpenAi || format == DatasetFormat::BfclV3) {
            std::size_t start = 0;
            while (start < contents.size()) {
                auto end = contents.find('\n', start);
                if (end == std::string_view::npos) end = contents.size();
                auto line = trim_ascii(contents.substr(start, end - start));
                if (!line.empty()) records.push_back(json::parse(line));
                start = end + 1;
            }
        } else {
            json arr = json::parse(contents);
            if (!arr.is_array()) throw DatasetError("expected a JSON array");
            for (auto& r : arr) records.push_back(std::move(r));
        }
    } catch (const json::parse_error& e) {
        throw DatasetError(std::string("unreadable dataset: ") + e.what());
    }

    std::vector<TrainingSample> out;
    std::size_t n = 0;
    for (const auto& r : records) {
        ++n;
        TrainingSample s;
        try {
            switch (format) {
                case DatasetFormat::ShareGpt: {
                    s.id = r.at("id").get<std::string>();
                    for (const auto& turn : r.at("conversations")) {
                        const std::string from = turn.at("from").get<std::string>();
                        const std::string value = turn.at("value").get<std::string>();
                        if (from == "system") s.tools = tools_from_preamble(value);
                        else if (from == "human") s.question = value;
                        else if (from == "gpt") s.answer = parse_answer(value);
                    }
                    break;
                }
                case DatasetFormat::OpenAi: {
                    s.id = "openai-" + std::to_string(n);
                    for (const auto& m : r.at("messages")) {
                        const std::string role = m.at("role").get<std::string>();
                        if (role == "user") {
                            s.question = m.at("content").get<std::string>();
                        } else if (role == "assistant") {
                            const json& fn = m.at("tool_calls").at(0).at("function");
                            json call{{"tool_name", fn.at("name")},
                                      {"arguments", json::parse(fn.at("arguments").get<std::string>())}};
                            s.answer = call_from_json(call);
                        }
                    }
                    for (const auto& t : r.at("tools")) s.tools.push_back(tool_from_json(t.at("function")));
                    break;
                }
                case DatasetFormat::BfclV3: {
                    s.id = r.at("id").get<std::string>();
                    s.question = r.at("question").at(0).at(0).at("content").get<std::string>();
                    for (const auto& f : r.at("function")) s.tools.push_back(tool_from_json(f));
                    const json& gt = r.at("ground_truth").at(0);
                    s.answer.tool_name = gt.begin().key();
                    for (const auto& [param, alts] : gt.begin().value().items()) {
                        for (const auto& alt : alts) {
                            if (alt.is_string() && alt.get<std::string>().empty()) continue;
                            s.answer.arguments.emplace(param, literal_from_json(alt));
                            break;
                        }
                    }
                    break;
                }
                case DatasetFormat::Alpaca: throw DatasetError("alpaca files cannot be read back");
            }
        } catch (const json::exception& e) {
            throw DatasetError("record " + std::to_string(n) + ": " + e.what());
        } catch (const CatalogError& e) {
            throw DatasetError("record " + std::to_string(n) + ": " + e.what());
        }
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Split

SplitResult split(std::vector<TrainingSample> samples, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw DatasetError("train_fraction must lie in (0, 1)");
    }
    SplitResult out;
    std::vector<char> to_train(samples.size(), 0);
    auto assign = [&](std::vector<std::size_t>& idx, const std::string& label, bool clamp) {
        Rng rng(derive_seed(spec.rng_seed, {"split", label}));
        rng.shuffle(idx);
        const std::size_t n = idx.size();
        auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
        if (clamp) {
            if (n == 1) {
                n_train = 1;
                out.warnings.push_back("tool " + label + " has a single sample; it goes to train");
            } else {
                n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
            }
        }
        for (std::size_t i = 0; i < n_train && i < n; ++i) to_train[idx[i]] = 1;
    };
    if (spec.stratify_by_tool) {
        std::map<std::string, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < samples.size(); ++i) groups[samples[i].answer.tool_name].push_back(i);
        for (auto& [tool, idx] : groups) assign(idx, tool, true);
    } else if (!samples.empty()) {
        std::vector<std::size_t> idx(samples.size());
        std::iota(idx.begin(), idx.end(), 0);
        assign(idx, "*", false);
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        (to_train[i] ? out.train : out.eval).push_back(std::move(samples[i]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Train config

namespace {

std::string fmt_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, end);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

std::int64_t parse_int(const std::string& key, std::string_view v) {
    v = trim_ascii(v);
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) throw TrainConfigError(key + ": '" + std::string(v) + "' is not an integer");
    return out;
}

double parse_real(const std::string& key, std::string_view v) {
    v = trim_ascii(v);
    double out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw TrainConfigError(key + ": '" + std::string(v) + "' is not a number");
    }
    return out;
}

void set_field(TrainConfig& c, const std::string& key, std::string_view value) {
    auto positive = [&](auto x) {
        if (!(x > 0)) throw TrainConfigError(key + " must be positive");
        return x;
    };
    if (key == "batch_size") c.batch_size = positive(parse_int(key, value));
    else if (key == "grad_accum") c.grad_accum = positive(parse_int(key, value));
    else if (key == "warmup_ratio") {
        c.warmup_ratio = positive(parse_real(key, value));
        if (c.warmup_ratio >= 1) throw TrainConfigError("warmup_ratio must be below 1");
    } else if (key == "peak_lr") c.peak_lr = positive(parse_real(key, value));
    else if (key == "schedule") {
        if (trim_ascii(value) != "cosine") throw TrainConfigError("schedule must be cosine");
        c.schedule = "cosine";
    } else if (key == "precision") {
        if (trim_ascii(value) != "bf16") throw TrainConfigError("precision must be bf16");
        c.precision = "bf16";
    } else if (key == "epochs") c.epochs = positive(parse_int(key, value));
    else if (key == "lora_r") c.lora_r = positive(parse_int(key, value));
    else if (key == "lora_alpha") c.lora_alpha = positive(parse_int(key, value));
    else if (key == "lora_dropout") {
        c.lora_dropout = parse_real(key, value);
        if (c.lora_dropout < 0 || c.lora_dropout >= 1) throw TrainConfigError("lora_dropout must lie in [0, 1)");
    } else if (key == "lora_target") {
        auto v = trim_ascii(value);
        if (v.empty()) throw TrainConfigError("lora_target must be nonempty");
        c.lora_target = std::string(v);
    } else if (key == "cutoff_len") c.cutoff_len = positive(parse_int(key, value));
    else throw TrainConfigError("unknown train config field '" + key + "'");
}

}  // namespace

TrainConfigResult emit_train_config(const std::map<std::string, std::string>& overrides, std::size_t estimated_max_len) {
    TrainConfigResult r;
    for (const auto& [k, v] : overrides) set_field(r.config, k, v);
    if (static_cast<std::size_t>(r.config.cutoff_len) < estimated_max_len) {
        r.truncation = true;
        r.warnings.push_back("CutoffTruncation: cutoff_len " + std::to_string(r.config.cutoff_len) +
                             " is below the estimated maximum sample length of " + std::to_string(estimated_max_len) +
                             " tokens; long samples will be truncated");
    }
    return r;
}

std::string train_config_text(const TrainConfig& c) {
    std::string out;
    auto line = [&](const char* k, const std::string& v) { out += std::string(k) + ": " + v + "\n"; };
    line("batch_size", std::to_string(c.batch_size));
    line("grad_accum", std::to_string(c.grad_accum));
    line("warmup_ratio", fmt_double(c.warmup_ratio));
    line("peak_lr", fmt_double(c.peak_lr));
    line("schedule", c.schedule);
    line("precision", c.precision);
    line("epochs", std::to_string(c.epochs));
    line("lora_r", std::to_string(c.lora_r));
    line("lora_alpha", std::to_string(c.lora_alpha));
    line("lora_dropout", fmt_double(c.lora_dropout));
    line("lora_target", c.lora_target);
    line("cutoff_len", std::to_string(c.cutoff_len));
    return out;
}

TrainConfig parse_train_config(std::string_view text) {
    TrainConfig c;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = trim_ascii(text.substr(start, end - start));
        start = end + 1;
        if (line.empty() || line.front() == '#') continue;
        auto colon = line.find(':');
        if (colon == std::string_view::npos) throw TrainConfigError("line without ':' in train config");
        set_field(c, std::string(trim_ascii(line.substr(0, colon))), line.substr(colon + 1));
    }
    return c;
}

}  // namespace fcforge
