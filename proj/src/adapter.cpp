#include "fcforge/adapter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

namespace fcforge {

const char* to_string(AdapterError::Kind kind) {
    switch (kind) {
        case AdapterError::Kind::ShapeMismatch: return "ShapeMismatch";
        case AdapterError::Kind::RankMismatch: return "RankMismatch";
        case AdapterError::Kind::ModuleSetMismatch: return "ModuleSetMismatch";
        case AdapterError::Kind::InvalidSpec: return "InvalidSpec";
        case AdapterError::Kind::DensityOutOfRange: return "DensityOutOfRange";
        case AdapterError::Kind::TargetRankTooLarge: return "TargetRankTooLarge";
        case AdapterError::Kind::MissingModule: return "MissingModule";
        case AdapterError::Kind::MalformedContainer: return "MalformedContainer";
    }
    return "?";
}

AdapterError::AdapterError(Kind kind, const std::string& msg)
    : Error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

Matrix LoraModule::a_matrix() const {
    Matrix m(r, k);
    for (std::size_t i = 0; i < a.size(); ++i) m.data()[i] = a[i];
    return m;
}

Matrix LoraModule::b_matrix() const {
    Matrix m(d, r);
    for (std::size_t i = 0; i < b.size(); ++i) m.data()[i] = b[i];
    return m;
}

void LoraModule::check(const std::string& name) const {
    using K = AdapterError::Kind;
    if (r < 1) throw AdapterError(K::ShapeMismatch, "module " + name + " has rank 0");
    if (d < 1 || k < 1) throw AdapterError(K::ShapeMismatch, "module " + name + " has an empty dimension");
    if (a.size() != r * k) throw AdapterError(K::ShapeMismatch, "module " + name + ": A is not r x k");
    if (b.size() != d * r) throw AdapterError(K::ShapeMismatch, "module " + name + ": B is not d x r");
    if (!std::isfinite(alpha)) throw AdapterError(K::ShapeMismatch, "module " + name + ": alpha is not finite");
}

std::vector<std::string> LoraAdapter::module_names() const {
    std::vector<std::string> names;
    for (const auto& [name, _] : modules) names.push_back(name);
    return names;
}

bool LoraAdapter::operator==(const LoraAdapter& other) const {
    if (metadata != other.metadata || modules.size() != other.modules.size()) return false;
    auto bits_equal = [](const std::vector<float>& x, const std::vector<float>& y) {
        return x.size() == y.size() && (x.empty() || std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0);
    };
    for (const auto& [name, m] : modules) {
        auto it = other.modules.find(name);
        if (it == other.modules.end()) return false;
        const LoraModule& o = it->second;
        if (m.d != o.d || m.k != o.k || m.r != o.r || m.alpha != o.alpha) return false;
        if (!bits_equal(m.a, o.a) || !bits_equal(m.b, o.b)) return false;
    }
    return true;
}

Matrix module_delta(const LoraModule& m) {
    m.check("?");
    Matrix delta = m.b_matrix() * m.a_matrix();
    delta *= m.scale();
    return delta;
}

DeltaMatrix full_delta(const LoraAdapter& adapter) {
    DeltaMatrix out;
    for (const auto& [name, m] : adapter.modules) {
        m.check(name);
        out.emplace(name, module_delta(m));
    }
    return out;
}

const char* to_string(MergeStrategy s) {
    switch (s) {
        case MergeStrategy::Linear: return "linear";
        case MergeStrategy::Cat: return "cat";
        case MergeStrategy::DareLinear: return "dare_linear";
        case MergeStrategy::Svd: return "svd";
        case MergeStrategy::Ties: return "ties";
        case MergeStrategy::TiesSvd: return "ties_svd";
    }
    return "?";
}

std::optional<MergeStrategy> parse_merge_strategy(std::string_view s) {
    for (auto st : {MergeStrategy::Linear, MergeStrategy::Cat, MergeStrategy::DareLinear, MergeStrategy::Svd,
                    MergeStrategy::Ties, MergeStrategy::TiesSvd}) {
        if (s == to_string(st)) return st;
    }
    return std::nullopt;
}

LoraModule refactor(const Matrix& delta, std::optional<std::size_t> rank) {
    Svd dec = svd(delta);
    std::size_t t = rank ? *rank : numerical_rank(dec.s, delta.rows(), delta.cols());
    t = std::clamp<std::size_t>(t, 1, dec.s.size());
    LoraModule m;
    m.d = delta.rows();
    m.k = delta.cols();
    m.r = t;
    m.alpha = static_cast<double>(t);
    m.b.resize(m.d * t);
    m.a.resize(t * m.k);
    for (std::size_t i = 0; i < m.d; ++i) {
        for (std::size_t j = 0; j < t; ++j) m.b[i * t + j] = static_cast<float>(dec.u(i, j) * dec.s[j]);
    }
    for (std::size_t j = 0; j < t; ++j) {
        for (std::size_t c = 0; c < m.k; ++c) m.a[j * m.k + c] = static_cast<float>(dec.v(c, j));
    }
    return m;
}

namespace {

using K = AdapterError::Kind;

bool uses_density(MergeStrategy s) {
    return s == MergeStrategy::DareLinear || s == MergeStrategy::Ties || s == MergeStrategy::TiesSvd;
}

bool needs_equal_rank(MergeStrategy s) {
    return s == MergeStrategy::Linear || s == MergeStrategy::DareLinear || s == MergeStrategy::Ties;
}

void validate(std::span<const LoraAdapter> adapters, const MergeSpec& spec) {
    if (adapters.empty()) throw AdapterError(K::InvalidSpec, "no adapters to merge");
    if (spec.weights.size() != adapters.size()) {
        throw AdapterError(K::InvalidSpec, std::to_string(spec.weights.size()) + " weights for " +
                                               std::to_string(adapters.size()) + " adapters");
    }
    for (double w : spec.weights) {
        if (!std::isfinite(w)) throw AdapterError(K::InvalidSpec, "weights must be finite");
    }
    if (uses_density(spec.strategy)) {
        if (!spec.density) throw AdapterError(K::InvalidSpec, std::string(to_string(spec.strategy)) + " needs a density");
        if (!(*spec.density > 0.0 && *spec.density <= 1.0)) {
            throw AdapterError(K::DensityOutOfRange, "density must lie in (0, 1], got " + std::to_string(*spec.density));
        }
    } else if (spec.density) {
        throw AdapterError(K::InvalidSpec, std::string(to_string(spec.strategy)) + " takes no density");
    }
    if (spec.target_rank && *spec.target_rank == 0) throw AdapterError(K::InvalidSpec, "target rank must be >= 1");
    if (spec.strategy == MergeStrategy::Linear) {
        for (std::size_t i = 0; i < adapters.size(); ++i) {
            for (const auto& [name, m] : adapters[i].modules) {
                if (spec.weights[i] * m.scale() < 0) {
                    throw AdapterError(K::InvalidSpec, "linear needs weight * alpha / r >= 0");
                }
            }
        }
    }

    const auto names = adapters[0].module_names();
    if (names.empty()) throw AdapterError(K::InvalidSpec, "adapter has no modules");
    for (const auto& a : adapters) {
        if (a.module_names() != names) throw AdapterError(K::ModuleSetMismatch, "adapters target different modules");
        for (const auto& [name, m] : a.modules) {
            m.check(name);
            const LoraModule& ref = adapters[0].modules.at(name);
            if (m.d != ref.d || m.k != ref.k) {
                throw AdapterError(K::ShapeMismatch, "module " + name + " has differing shapes");
            }
            if (needs_equal_rank(spec.strategy) && m.r != ref.r) {
                throw AdapterError(K::RankMismatch, std::string(to_string(spec.strategy)) + " needs equal ranks; " +
                                                        name + " has " + std::to_string(ref.r) + " and " +
                                                        std::to_string(m.r));
            }
            if (spec.target_rank && *spec.target_rank > std::min(m.d, m.k)) {
                throw AdapterError(K::TargetRankTooLarge, "target rank " + std::to_string(*spec.target_rank) +
                                                              " exceeds min(d, k) of " + name);
            }
        }
    }
}

LoraModule merge_linear(const std::vector<const LoraModule*>& ms, std::span<const double> w) {
    LoraModule out;
    out.d = ms[0]->d;
    out.k = ms[0]->k;
    out.r = ms[0]->r;
    out.alpha = static_cast<double>(out.r);
    std::vector<double> a(out.r * out.k, 0.0), b(out.d * out.r, 0.0);
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const double f = std::sqrt(w[i] * ms[i]->scale());
        for (std::size_t j = 0; j < a.size(); ++j) a[j] += f * ms[i]->a[j];
        for (std::size_t j = 0; j < b.size(); ++j) b[j] += f * ms[i]->b[j];
    }
    out.a.assign(a.begin(), a.end());
    out.b.assign(b.begin(), b.end());
    return out;
}

LoraModule merge_cat(const std::vector<const LoraModule*>& ms, std::span<const double> w) {
    LoraModule out;
    out.d = ms[0]->d;
    out.k = ms[0]->k;
    for (const auto* m : ms) out.r += m->r;
    out.alpha = static_cast<double>(out.r);
    out.a.reserve(out.r * out.k);
    out.b.assign(out.d * out.r, 0.0f);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const LoraModule& m = *ms[i];
        const double f = w[i] * m.scale();
        for (float x : m.a) out.a.push_back(static_cast<float>(f * x));
        for (std::size_t row = 0; row < out.d; ++row) {
            for (std::size_t j = 0; j < m.r; ++j) out.b[row * out.r + offset + j] = m.b[row * m.r + j];
        }
        offset += m.r;
    }
    return out;
}

Matrix weighted_sum(const std::vector<Matrix>& deltas, std::span<const double> w) {
    Matrix sum(deltas[0].rows(), deltas[0].cols());
    for (std::size_t i = 0; i < deltas.size(); ++i) sum += w[i] * deltas[i];
    return sum;
}

Matrix dare_mask(const Matrix& delta, double density, std::uint64_t key) {
    Matrix out = delta;
    auto& v = out.data();
    for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = counter_uniform(key, j) < density ? v[j] / density : 0.0;
    }
    return out;
}

Matrix ties_combine(const std::vector<Matrix>& deltas, std::span<const double> w, double density) {
    const std::size_t n = deltas[0].data().size();
    const auto keep = static_cast<std::size_t>(std::floor(density * static_cast<double>(n) + 1e-9));
    std::vector<std::vector<double>> trimmed;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        std::vector<double> t(n);
        for (std::size_t j = 0; j < n; ++j) t[j] = w[i] * deltas[i].data()[j];
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return std::abs(t[x]) > std::abs(t[y]); });
        for (std::size_t j = keep; j < n; ++j) t[order[j]] = 0.0;
        trimmed.push_back(std::move(t));
    }
    Matrix out(deltas[0].rows(), deltas[0].cols());
    for (std::size_t j = 0; j < n; ++j) {
        double mass = 0.0;
        for (const auto& t : trimmed) mass += t[j];
        if (mass == 0.0) continue;
        double sum = 0.0;
        int count = 0;
        for (const auto& t : trimmed) {
            if (t[j] != 0.0 && std::signbit(t[j]) == std::signbit(mass)) {
                sum += t[j];
                ++count;
            }
        }
        out.data()[j] = count ? sum / count : 0.0;
    }
    return out;
}

json merge_metadata(std::span<const LoraAdapter> adapters, const MergeSpec& spec, const std::vector<std::string>& names) {
    json sources = json::array();
    for (const auto& a : adapters) sources.push_back(a.metadata.value("source_id", json(nullptr)));
    json m = json::object();
    m["strategy"] = to_string(spec.strategy);
    m["weights"] = spec.weights;
    if (spec.density) m["density"] = *spec.density;
    if (spec.target_rank) m["target_rank"] = *spec.target_rank;
    if (spec.strategy == MergeStrategy::DareLinear) m["rng_seed"] = spec.rng_seed;
    m["sources"] = std::move(sources);
    return json{{"target_modules", names}, {"merge", std::move(m)}};
}

}  // namespace

LoraAdapter merge(std::span<const LoraAdapter> adapters, const MergeSpec& spec) {
    validate(adapters, spec);
    LoraAdapter out;
    const auto names = adapters[0].module_names();
    out.metadata = merge_metadata(adapters, spec, names);

    for (const auto& name : names) {
        std::vector<const LoraModule*> ms;
        for (const auto& a : adapters) ms.push_back(&a.modules.at(name));
        LoraModule merged;
        switch (spec.strategy) {
            case MergeStrategy::Linear: merged = merge_linear(ms, spec.weights); break;
            case MergeStrategy::Cat: merged = merge_cat(ms, spec.weights); break;
            default: {
                std::vector<Matrix> deltas;
                for (const auto* m : ms) deltas.push_back(module_delta(*m));
                std::size_t max_rank = 0;
                for (const auto* m : ms) max_rank = std::max(max_rank, m->r);
                const std::size_t svd_rank = spec.target_rank.value_or(std::min({max_rank, ms[0]->d, ms[0]->k}));
                if (spec.strategy == MergeStrategy::DareLinear) {
                    for (std::size_t i = 0; i < deltas.size(); ++i) {
                        auto key = derive_seed(spec.rng_seed, {"dare", name, std::to_string(i)});
                        deltas[i] = dare_mask(deltas[i], *spec.density, key);
                    }
                    merged = refactor(weighted_sum(deltas, spec.weights), spec.target_rank);
                } else if (spec.strategy == MergeStrategy::Svd) {
                    merged = refactor(weighted_sum(deltas, spec.weights), svd_rank);
                } else if (spec.strategy == MergeStrategy::Ties) {
                    merged = refactor(ties_combine(deltas, spec.weights, *spec.density), spec.target_rank);
                } else {
                    merged = refactor(ties_combine(deltas, spec.weights, *spec.density), svd_rank);
                }
            }
        }
        out.modules.emplace(name, std::move(merged));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Container: header JSON + little-endian float32 blob.

namespace {

constexpr const char* kFormat = "fcforge-lora";

void put_floats(std::string& blob, const std::vector<float>& v) {
    for (float f : v) {
        auto u = std::bit_cast<std::uint32_t>(f);
        for (int s = 0; s < 32; s += 8) blob.push_back(static_cast<char>((u >> s) & 0xFF));
    }
}

std::vector<float> get_floats(const std::string& blob, std::size_t offset, std::size_t count, const std::string& what) {
    const std::size_t need = count * 4;
    if (offset > blob.size() || blob.size() - offset < need) {
        throw AdapterError(K::MalformedContainer, what + " needs bytes [" + std::to_string(offset) + ", " +
                                                      std::to_string(offset + need) + ") but the blob ends at byte " +
                                                      std::to_string(blob.size()));
    }
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b) {
            u |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[offset + i * 4 + b])) << (8 * b);
        }
        out[i] = std::bit_cast<float>(u);
    }
    return out;
}

std::filesystem::path blob_path_for(const std::filesystem::path& header_path) {
    auto p = header_path;
    p.replace_extension(".bin");
    return p;
}

std::size_t header_size(const json& j, const char* key, const std::string& module) {
    if (!j.contains(key) || !j[key].is_number_unsigned()) {
        throw AdapterError(K::MalformedContainer, "module " + module + " lacks unsigned field '" + key + "'");
    }
    return j[key].get<std::size_t>();
}

}  // namespace

void save_adapter(const LoraAdapter& adapter, const std::filesystem::path& header_path) {
    std::string blob;
    json modules = json::array();
    for (const auto& [name, m] : adapter.modules) {
        m.check(name);
        const std::size_t off_a = blob.size();
        put_floats(blob, m.a);
        const std::size_t off_b = blob.size();
        put_floats(blob, m.b);
        modules.push_back(json{{"name", name},
                               {"d", m.d},
                               {"k", m.k},
                               {"r", m.r},
                               {"alpha", m.alpha},
                               {"offsets", json{{"A", off_a}, {"B", off_b}}}});
    }
    const auto blob_path = blob_path_for(header_path);
    json header{{"format", kFormat},
                {"version", 1},
                {"blob", blob_path.filename().string()},
                {"modules", std::move(modules)},
                {"metadata", adapter.metadata}};
    write_file(blob_path, blob);
    write_file(header_path, header.dump(2) + "\n");
}

LoraAdapter load_adapter(const std::filesystem::path& header_path) {
    const std::string text = read_file(header_path);
    json header;
    try {
        header = json::parse(text);
    } catch (const json::parse_error& e) {
        throw AdapterError(K::MalformedContainer, "header is not JSON (byte " + std::to_string(e.byte) + ")");
    }
    if (!header.is_object() || !header.contains("modules") || !header["modules"].is_array()) {
        throw AdapterError(K::MalformedContainer, "header lacks a modules array");
    }
    std::filesystem::path blob_path = blob_path_for(header_path);
    if (header.contains("blob") && header["blob"].is_string()) {
        blob_path = header_path.parent_path() / header["blob"].get<std::string>();
    }
    const std::string blob = read_file(blob_path);

    LoraAdapter adapter;
    adapter.metadata = header.value("metadata", json::object());
    for (const auto& jm : header["modules"]) {
        if (!jm.is_object() || !jm.contains("name") || !jm["name"].is_string()) {
            throw AdapterError(K::MalformedContainer, "module entry without a name");
        }
        const std::string name = jm["name"].get<std::string>();
        LoraModule m;
        m.d = header_size(jm, "d", name);
        m.k = header_size(jm, "k", name);
        m.r = header_size(jm, "r", name);
        if (!jm.contains("alpha") || !jm["alpha"].is_number()) {
            throw AdapterError(K::MalformedContainer, "module " + name + " lacks alpha");
        }
        m.alpha = jm["alpha"].get<double>();
        const json offsets = jm.value("offsets", json::object());
        const std::size_t off_a = header_size(offsets, "A", name);
        const std::size_t off_b = header_size(offsets, "B", name);
        m.a = get_floats(blob, off_a, m.r * m.k, "module " + name + " A");
        m.b = get_floats(blob, off_b, m.d * m.r, "module " + name + " B");
        m.check(name);
        if (!adapter.modules.emplace(name, std::move(m)).second) {
            throw AdapterError(K::MalformedContainer, "duplicate module " + name);
        }
    }
    if (adapter.metadata.contains("target_modules") && adapter.metadata["target_modules"].is_array()) {
        for (const auto& t : adapter.metadata["target_modules"]) {
            if (t.is_string() && !adapter.modules.contains(t.get<std::string>())) {
                throw AdapterError(K::MissingModule, "metadata names module '" + t.get<std::string>() +
                                                         "' but the container has no such module");
            }
        }
    }
    return adapter;
}

}  // namespace fcforge
