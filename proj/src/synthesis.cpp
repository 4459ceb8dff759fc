#include "fcforge/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <set>
#include <thread>

namespace fcforge {

const char* to_string(Provenance p) { return p == Provenance::Ai ? "ai" : "human"; }

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::Replacement: return "replacement";
        case Strategy::Rewriting: return "rewriting";
        case Strategy::Simplification: return "simplification";
        case Strategy::ErrorIntroduction: return "error_introduction";
    }
    return "?";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
    for (auto st : kStrategies) {
        if (s == to_string(st)) return st;
    }
    return std::nullopt;
}

const char* strategy_code(Strategy s) {
    switch (s) {
        case Strategy::Replacement: return "rp";
        case Strategy::Rewriting: return "rw";
        case Strategy::Simplification: return "sm";
        case Strategy::ErrorIntroduction: return "er";
    }
    return "??";
}

const char* to_string(SynthesisError::Kind k) {
    using K = SynthesisError::Kind;
    switch (k) {
        case K::ErrorIntroductionOnSeed: return "ErrorIntroductionOnSeed";
        case K::ExtractorUnparseable: return "ExtractorUnparseable";
        case K::UnknownParam: return "UnknownParam";
        case K::TypeMismatch: return "TypeMismatch";
        case K::ToolMismatch: return "ToolMismatch";
        case K::OrphanAugmentation: return "OrphanAugmentation";
        case K::EmptyPool: return "EmptyPool";
        case K::InvalidInput: return "InvalidInput";
    }
    return "?";
}

SynthesisError::SynthesisError(Kind kind, const std::string& msg)
    : Error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

namespace {

using K = SynthesisError::Kind;

std::string req_string(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw SynthesisError(K::InvalidInput, std::string("record lacks string field '") + key + "'");
    }
    return j[key].get<std::string>();
}

std::string pad(std::size_t n, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", width, n);
    return buf;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

std::vector<std::string> sample(const std::vector<std::string>& pool, std::size_t n, Rng& rng) {
    std::vector<std::string> copy = pool;
    rng.shuffle(copy);
    if (copy.size() > n) copy.resize(n);
    return copy;
}

std::vector<std::string> string_list(const json& j, const std::string& what) {
    std::vector<std::string> out;
    if (!j.is_array()) throw SynthesisError(K::InvalidInput, "pool '" + what + "' must be a list");
    for (const auto& v : j) {
        if (v.is_string()) out.push_back(v.get<std::string>());
        else if (v.is_number_integer()) out.push_back(std::to_string(v.get<std::int64_t>()));
        else throw SynthesisError(K::InvalidInput, "pool '" + what + "' holds a non-string entry");
    }
    return out;
}

}  // namespace

json seed_to_json(const SeedQuestion& s) {
    json j{{"id", s.id}, {"tool_name", s.tool_name}, {"text", s.text}, {"provenance", to_string(s.provenance)}};
    if (s.role_hint) j["role_hint"] = *s.role_hint;
    return j;
}

SeedQuestion seed_from_json(const json& j) {
    SeedQuestion s;
    s.id = req_string(j, "id");
    s.tool_name = req_string(j, "tool_name");
    s.text = req_string(j, "text");
    const std::string prov = j.value("provenance", std::string("ai"));
    if (prov == "ai") s.provenance = Provenance::Ai;
    else if (prov == "human") s.provenance = Provenance::Human;
    else throw SynthesisError(K::InvalidInput, "unknown provenance '" + prov + "'");
    if (j.contains("role_hint") && j["role_hint"].is_string()) s.role_hint = j["role_hint"].get<std::string>();
    if (s.text.empty()) throw SynthesisError(K::InvalidInput, "seed " + s.id + " has empty text");
    return s;
}

json augmented_to_json(const AugmentedQuestion& a) {
    return json{{"id", a.id},         {"seed_id", a.seed_id},
                {"tool_name", a.tool_name}, {"strategy", to_string(a.strategy)},
                {"text", a.text},     {"base_id", a.base_id}};
}

AugmentedQuestion augmented_from_json(const json& j) {
    AugmentedQuestion a;
    a.id = req_string(j, "id");
    a.seed_id = req_string(j, "seed_id");
    a.tool_name = req_string(j, "tool_name");
    const std::string st = req_string(j, "strategy");
    auto parsed = parse_strategy(st);
    if (!parsed) throw SynthesisError(K::InvalidInput, "unknown strategy '" + st + "'");
    a.strategy = *parsed;
    a.text = req_string(j, "text");
    a.base_id = req_string(j, "base_id");
    if (a.strategy == Strategy::ErrorIntroduction && a.base_id == a.seed_id) {
        throw SynthesisError(K::ErrorIntroductionOnSeed, a.id + " applies error introduction to its seed");
    }
    return a;
}

EntityPools pools_from_json(const json& j) {
    if (!j.is_object()) throw SynthesisError(K::InvalidInput, "pools file must be an object");
    EntityPools p;
    for (const auto& [key, v] : j.items()) {
        if (key == "names") p.names = string_list(v, key);
        else if (key == "departments") p.departments = string_list(v, key);
        else if (key == "cities") p.cities = string_list(v, key);
        else if (key == "years") p.years = string_list(v, key);
        else if (key == "misc") {
            if (!v.is_object()) throw SynthesisError(K::InvalidInput, "misc pools must be an object");
            for (const auto& [name, list] : v.items()) p.misc[name] = string_list(list, name);
        } else {
            p.misc[key] = string_list(v, key);
        }
    }
    return p;
}

EntityPools load_pools(const std::filesystem::path& path) {
    try {
        return pools_from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        throw SynthesisError(K::InvalidInput, path.string() + ": " + e.what());
    }
}

std::vector<SeedQuestion> import_human_seeds(std::span<const json> records, const Catalog& catalog) {
    std::vector<SeedQuestion> out;
    for (const auto& r : records) {
        SeedQuestion s;
        s.id = "human-" + pad(out.size() + 1, 4);
        s.tool_name = req_string(r, "tool_name");
        s.text = normalize_text(req_string(r, "text"));
        s.provenance = Provenance::Human;
        if (r.contains("role_hint") && r["role_hint"].is_string()) s.role_hint = r["role_hint"].get<std::string>();
        if (!catalog.find_tool(s.tool_name)) {
            throw SynthesisError(K::InvalidInput, s.id + " names unknown tool '" + s.tool_name + "'");
        }
        if (s.text.empty()) throw SynthesisError(K::InvalidInput, s.id + " has empty text");
        out.push_back(std::move(s));
    }
    return out;
}

std::map<std::string, std::string> tool_template_vars(const ToolSpec& tool) {
    json params = json::array();
    for (const auto& p : tool.params) params.push_back(param_to_json(p));
    return {{"key", tool.name},
            {"func_name", tool.name},
            {"function_description", tool.description},
            {"func_desc", tool.description},
            {"params_data", params.dump(-1, ' ', false)},
            {"info_dict", tool_to_json(tool).dump(-1, ' ', false)}};
}

std::vector<SeedQuestion> generate_seeds(const Catalog& catalog, const SeedOptions& opts, const EntityPools& pools,
                                         const TemplateSet& templates, Gateway& gateway) {
    std::vector<SeedQuestion> out;
    if (catalog.tools.empty()) return out;
    if (opts.per_tool < 1) throw SynthesisError(K::InvalidInput, "per_tool must be >= 1");
    const PromptTemplate& tpl = templates.get(opts.template_id);
    if (tpl.required_vars().contains("half") && opts.per_tool < 2) {
        throw SynthesisError(K::InvalidInput, "template " + tpl.id() + " splits questions in halves; per_tool must be >= 2");
    }
    if (tpl.required_vars().contains("ids") && pools.names.empty()) {
        throw SynthesisError(K::EmptyPool, "template " + tpl.id() + " needs the names pool");
    }
    for (std::size_t ti = 0; ti < catalog.tools.size(); ++ti) {
        const ToolSpec& tool = catalog.tools[ti];
        Rng rng(derive_seed(opts.rng_seed, {"seeds", tool.name}));
        auto vars = tool_template_vars(tool);
        vars["number"] = std::to_string(opts.per_tool);
        vars["half"] = std::to_string(opts.per_tool / 2);
        vars["ids"] = join(sample(pools.names, opts.ids_sample, rng), ", ");

        CompletionRequest req;
        req.model = gateway.config().model;
        req.prompt = tpl.render(vars);
        req.temperature = opts.temperature;
        req.template_id = tpl.id();
        req.vars = vars;
        std::vector<std::string> lines;
        try {
            lines = parse_lines(gateway.complete(req), opts.per_tool, opts.tolerance);
        } catch (const GatewayError& e) {
            throw GatewayError(e.kind(), "seeds for " + tool.name + ": " + e.what(), e.status());
        }
        if (lines.size() > opts.per_tool) lines.resize(opts.per_tool);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            out.push_back(SeedQuestion{"seed-" + pad(ti, 3) + "-" + pad(i, 3), tool.name, lines[i], Provenance::Ai, {}});
        }
    }
    return out;
}

namespace {

struct AugmentInput {
    const std::string& id;
    const std::string& seed_id;
    const std::string& tool_name;
    const std::string& text;
    bool is_seed;
};

std::vector<AugmentedQuestion> augment_impl(const AugmentInput& in, const ToolSpec& tool, Strategy strategy,
                                            std::size_t count, const EntityPools& pools, const TemplateSet& templates,
                                            Gateway& gateway, const AugmentOptions& opts) {
    if (strategy == Strategy::ErrorIntroduction && in.is_seed) {
        throw SynthesisError(K::ErrorIntroductionOnSeed,
                             in.id + ": error introduction must start from an augmented question");
    }
    if (tool.name != in.tool_name) {
        throw SynthesisError(K::ToolMismatch, in.id + " belongs to " + in.tool_name + ", not " + tool.name);
    }
    if (count == 0) return {};

    const PromptTemplate& tpl = templates.get(std::string("augment_") + to_string(strategy));
    Rng rng(derive_seed(opts.rng_seed, {"augment", in.id, to_string(strategy)}));
    auto vars = tool_template_vars(tool);
    vars["question"] = in.text;
    vars["number"] = std::to_string(count);
    const std::pair<const char*, const std::vector<std::string>*> pool_vars[] = {
        {"names", &pools.names}, {"ids", &pools.names}, {"departments", &pools.departments},
        {"cities", &pools.cities}, {"years", &pools.years}};
    for (const auto& [name, pool] : pool_vars) {
        if (tpl.required_vars().contains(name) && pool->empty()) {
            throw SynthesisError(K::EmptyPool, "template " + tpl.id() + " needs a nonempty " + name + " pool");
        }
        vars[name] = join(sample(*pool, opts.pool_sample, rng), ", ");
    }
    for (const auto& [name, pool] : pools.misc) {
        if (!vars.contains(name)) vars[name] = join(sample(pool, opts.pool_sample, rng), ", ");
    }

    CompletionRequest req;
    req.model = gateway.config().model;
    req.prompt = tpl.render(vars);
    req.temperature = opts.temperature;
    req.template_id = tpl.id();
    req.vars = vars;
    const auto tolerance = static_cast<std::size_t>(std::floor(static_cast<double>(count) * opts.tolerance_ratio + 1e-9));
    std::vector<std::string> lines;
    try {
        lines = parse_lines(gateway.complete(req), count, tolerance);
    } catch (const GatewayError& e) {
        throw GatewayError(e.kind(), "augmenting " + in.id + ": " + e.what(), e.status());
    }

    std::vector<AugmentedQuestion> out;
    std::set<std::string> seen{in.text};
    for (auto& line : lines) {
        if (out.size() == count) break;
        if (!seen.insert(line).second) continue;
        AugmentedQuestion a;
        a.id = in.id + "." + strategy_code(strategy) + pad(out.size(), 2);
        a.seed_id = in.seed_id;
        a.tool_name = in.tool_name;
        a.strategy = strategy;
        a.text = std::move(line);
        a.base_id = in.id;
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace

std::vector<AugmentedQuestion> augment(const SeedQuestion& q, const ToolSpec& tool, Strategy strategy, std::size_t count,
                                       const EntityPools& pools, const TemplateSet& templates, Gateway& gateway,
                                       const AugmentOptions& opts) {
    return augment_impl({q.id, q.id, q.tool_name, q.text, true}, tool, strategy, count, pools, templates, gateway, opts);
}

std::vector<AugmentedQuestion> augment(const AugmentedQuestion& q, const ToolSpec& tool, Strategy strategy,
                                       std::size_t count, const EntityPools& pools, const TemplateSet& templates,
                                       Gateway& gateway, const AugmentOptions& opts) {
    return augment_impl({q.id, q.seed_id, q.tool_name, q.text, false}, tool, strategy, count, pools, templates, gateway,
                        opts);
}

std::array<std::size_t, 4> strategy_counts(std::size_t total, const std::array<double, 4>& mix) {
    double sum = 0;
    for (double m : mix) {
        if (!(m >= 0) || !std::isfinite(m)) throw SynthesisError(K::InvalidInput, "strategy mix must be >= 0");
        sum += m;
    }
    if (sum <= 0) throw SynthesisError(K::InvalidInput, "strategy mix sums to zero");
    std::array<std::size_t, 4> counts{};
    std::array<double, 4> rem{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double q = mix[i] / sum * static_cast<double>(total);
        counts[i] = static_cast<std::size_t>(std::floor(q + 1e-9));
        rem[i] = q - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b] + 1e-9; });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++counts[order[i % 4]];
    return counts;
}

AugmentRun augment_all(std::span<const SeedQuestion> seeds, const Catalog& catalog, const AugmentPlan& plan,
                       const EntityPools& pools, const TemplateSet& templates, Gateway& gateway,
                       const AugmentOptions& opts) {
    struct PerSeed {
        std::vector<AugmentedQuestion> questions;
        std::vector<std::string> warnings;
        std::exception_ptr error;
    };
    std::vector<PerSeed> results(seeds.size());
    for (const auto& s : seeds) {
        if (!catalog.find_tool(s.tool_name)) throw SynthesisError(K::InvalidInput, s.id + " names unknown tool " + s.tool_name);
    }

    auto work = [&](std::size_t idx) {
        const SeedQuestion& seed = seeds[idx];
        PerSeed& res = results[idx];
        const ToolSpec& tool = *catalog.find_tool(seed.tool_name);
        const std::size_t total = seed.provenance == Provenance::Human ? plan.per_human_seed : plan.per_ai_seed;
        const auto counts = strategy_counts(total, plan.mix);
        std::array<std::vector<AugmentedQuestion>, 4> by_strategy;
        for (std::size_t si = 0; si < 3; ++si) {
            by_strategy[si] = augment(seed, tool, kStrategies[si], counts[si], pools, templates, gateway, opts);
        }
        if (counts[3] > 0) {
            const AugmentedQuestion* base = nullptr;
            for (std::size_t si : {1u, 2u, 0u}) {
                if (!base && !by_strategy[si].empty()) base = &by_strategy[si].front();
            }
            if (base) {
                by_strategy[3] = augment(*base, tool, Strategy::ErrorIntroduction, counts[3], pools, templates, gateway, opts);
            } else {
                res.warnings.push_back(seed.id + ": no augmented question to base error introduction on");
            }
        }
        for (std::size_t si = 0; si < 4; ++si) {
            if (by_strategy[si].size() < counts[si]) {
                res.warnings.push_back(seed.id + ": " + to_string(kStrategies[si]) + " produced " +
                                       std::to_string(by_strategy[si].size()) + " of " + std::to_string(counts[si]));
            }
            for (auto& q : by_strategy[si]) res.questions.push_back(std::move(q));
        }
    };

    std::size_t workers = plan.workers ? plan.workers : static_cast<std::size_t>(gateway.config().max_in_flight);
    workers = std::max<std::size_t>(1, std::min(workers, seeds.size()));
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            try {
                work(i);
            } catch (...) {
                results[i].error = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        loop();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
        for (auto& t : pool) t.join();
    }

    std::vector<std::size_t> order(seeds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return seeds[a].id < seeds[b].id; });
    AugmentRun run;
    for (std::size_t i : order) {
        if (results[i].error) std::rethrow_exception(results[i].error);
        for (auto& q : results[i].questions) run.questions.push_back(std::move(q));
        for (auto& w : results[i].warnings) run.warnings.push_back(std::move(w));
    }
    return run;
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

std::optional<json> parse_object_loose(const std::string& reply) {
    std::string_view s = trim_ascii(reply);
    if (s.starts_with("```")) {
        auto nl = s.find('\n');
        s = nl == std::string_view::npos ? std::string_view{} : s.substr(nl + 1);
        if (auto fence = s.rfind("```"); fence != std::string_view::npos) s = s.substr(0, fence);
        s = trim_ascii(s);
    }
    auto try_parse = [](std::string_view text) -> std::optional<json> {
        json j = json::parse(text, nullptr, false);
        if (j.is_discarded() || !j.is_object()) return std::nullopt;
        return j;
    };
    if (auto j = try_parse(s)) return j;
    const auto open = s.find('{');
    const auto close = s.rfind('}');
    if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        return try_parse(s.substr(open, close - open + 1));
    }
    return std::nullopt;
}

}  // namespace

Extraction arguments_from_reply(const std::string& reply, const ToolSpec& tool) {
    auto parsed = parse_object_loose(reply);
    if (!parsed) throw SynthesisError(K::ExtractorUnparseable, "reply holds no JSON object: " + reply.substr(0, 120));
    json args = *parsed;
    if (args.contains("arguments") && (args.contains("name") || args.contains("tool_name"))) {
        const json& name = args.contains("name") ? args["name"] : args["tool_name"];
        if (!name.is_string() || name.get<std::string>() != tool.name) {
            throw SynthesisError(K::ToolMismatch, "extractor named tool " + name.dump() + ", expected " + tool.name);
        }
        json inner = args["arguments"];
        if (inner.is_string()) inner = json::parse(inner.get<std::string>(), nullptr, false);
        if (!inner.is_object()) throw SynthesisError(K::ExtractorUnparseable, "arguments field is not an object");
        args = std::move(inner);
    }
    Extraction ex;
    ex.call.tool_name = tool.name;
    for (const auto& [key, value] : args.items()) {
        if (value.is_null()) continue;
        const ParamSpec* p = tool.find_param(key);
        if (!p) throw SynthesisError(K::UnknownParam, tool.name + " has no parameter '" + key + "'");
        Literal lit = literal_from_json(value);
        if (!literal_matches_type(lit, p->type)) {
            throw SynthesisError(K::TypeMismatch, key + " expects " + to_string(p->type) + ", got " + kind_name(lit.kind()));
        }
        ex.call.arguments.emplace(key, std::move(lit));
    }
    for (const auto& p : tool.params) {
        if (p.required && !ex.call.arguments.contains(p.name)) ex.validation_pending.push_back(p.name);
    }
    return ex;
}

Extraction extract_call(const std::string& question_id, const std::string& question_text, const ToolSpec& tool,
                        const TemplateSet& templates, Gateway& gateway, const ExtractOptions& opts) {
    const PromptTemplate& tpl = templates.get(opts.template_id);
    auto vars = tool_template_vars(tool);
    vars["question"] = question_text;
    CompletionRequest req;
    req.model = gateway.config().model;
    req.prompt = tpl.render(vars);
    req.temperature = opts.temperature;
    req.template_id = tpl.id();
    req.vars = vars;
    std::string reply;
    try {
        reply = gateway.complete(req);
    } catch (const GatewayError& e) {
        throw GatewayError(e.kind(), "extracting " + question_id + ": " + e.what(), e.status());
    }
    try {
        Extraction ex = arguments_from_reply(reply, tool);
        ex.question_id = question_id;
        return ex;
    } catch (const SynthesisError& e) {
        throw SynthesisError(e.kind(), question_id + ": " + e.what());
    }
}

Extraction extract_call(const SeedQuestion& q, const ToolSpec& tool, const TemplateSet& templates, Gateway& gateway,
                        const ExtractOptions& opts) {
    if (q.tool_name != tool.name) {
        throw SynthesisError(K::ToolMismatch, q.id + " belongs to " + q.tool_name + ", not " + tool.name);
    }
    return extract_call(q.id, q.text, tool, templates, gateway, opts);
}

json extraction_to_json(const Extraction& e) {
    json j = call_to_json(e.call);
    json out{{"question_id", e.question_id}, {"tool_name", j["tool_name"]}, {"arguments", j["arguments"]}};
    if (!e.validation_pending.empty()) out["validation_pending"] = e.validation_pending;
    return out;
}

Extraction extraction_from_json(const json& j) {
    Extraction e;
    e.question_id = req_string(j, "question_id");
    e.call = call_from_json(j);
    if (j.contains("validation_pending")) e.validation_pending = j["validation_pending"].get<std::vector<std::string>>();
    return e;
}

// ---------------------------------------------------------------------------
// Propagation

std::vector<InstructionPair> propagate_instructions(const std::map<std::string, CallInstruction>& seed_calls,
                                                    std::span<const AugmentedQuestion> augmented) {
    std::map<std::string, const AugmentedQuestion*> by_id;
    for (const auto& a : augmented) by_id.emplace(a.id, &a);
    std::vector<InstructionPair> out;
    for (const auto& a : augmented) {
        auto call = seed_calls.find(a.seed_id);
        if (call == seed_calls.end()) {
            throw SynthesisError(K::OrphanAugmentation, a.id + ": seed " + a.seed_id + " has no instruction");
        }
        bool replaced = false;
        const AugmentedQuestion* cur = &a;
        for (std::size_t steps = 0;; ++steps) {
            if (steps > augmented.size()) throw SynthesisError(K::OrphanAugmentation, a.id + ": lineage has a cycle");
            if (cur->strategy == Strategy::Replacement) replaced = true;
            if (cur->base_id == cur->seed_id) break;
            auto base = by_id.find(cur->base_id);
            if (base == by_id.end() || base->second->seed_id != a.seed_id) {
                throw SynthesisError(K::OrphanAugmentation, a.id + ": base " + cur->base_id + " is missing");
            }
            cur = base->second;
        }
        out.push_back(InstructionPair{a, call->second, replaced});
    }
    return out;
}

ReextractRun resolve_reextractions(std::vector<InstructionPair> pairs, const Catalog& catalog,
                                   const TemplateSet& templates, Gateway& gateway, const ExtractOptions& opts) {
    ReextractRun run;
    for (auto& p : pairs) {
        if (p.re_extract) {
            const ToolSpec* tool = catalog.find_tool(p.question.tool_name);
            if (!tool) {
                run.dropped.push_back(p.question.id + ": unknown tool " + p.question.tool_name);
                continue;
            }
            try {
                p.call = extract_call(p.question.id, p.question.text, *tool, templates, gateway, opts).call;
            } catch (const SynthesisError& e) {
                run.dropped.push_back(p.question.id + ": " + e.what());
                continue;
            }
        }
        run.pairs.push_back(std::move(p));
    }
    return run;
}

json pair_to_json(const InstructionPair& p) {
    return json{{"question", augmented_to_json(p.question)}, {"call", call_to_json(p.call)}, {"re_extract", p.re_extract}};
}

InstructionPair pair_from_json(const json& j) {
    if (!j.contains("question") || !j.contains("call")) throw SynthesisError(K::InvalidInput, "pair lacks question or call");
    return InstructionPair{augmented_from_json(j["question"]), call_from_json(j["call"]), j.value("re_extract", false)};
}

}  // namespace fcforge
