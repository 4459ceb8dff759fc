#include "fcforge/util.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <openssl/evp.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

namespace fcforge {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path.string());
    return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::vector<json> read_jsonl(const fs::path& path) {
    std::vector<json> out;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim_ascii(line).empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::string to_jsonl(std::span<const json> records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

std::string csv_field(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string csv_row(std::initializer_list<std::string_view> fields) {
    std::string out;
    bool first = true;
    for (auto f : fields) {
        if (!first) out += ',';
        out += csv_field(f);
        first = false;
    }
    out += '\n';
    return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_field(fields[i]);
    }
    out += '\n';
    return out;
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

std::string file_sha256(const fs::path& path) { return sha256_hex(read_file(path)); }

std::string_view trim_ascii(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

namespace {

icu::UnicodeString to_icu(std::string_view s) {
    return icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

std::string from_icu(const icu::UnicodeString& u) {
    std::string out;
    u.toUTF8String(out);
    return out;
}

}  // namespace

std::string normalize_text(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
    if (U_FAILURE(status)) throw Error(std::string("ICU NFKC unavailable: ") + u_errorName(status));
    icu::UnicodeString normalized = nfkc->normalize(to_icu(utf8), status);
    if (U_FAILURE(status)) throw Error(std::string("NFKC normalization failed: ") + u_errorName(status));
    // UnicodeString::trim only strips spaces and ASCII controls; NFKC already
    // maps the ideographic space to U+0020.
    normalized.trim();
    return from_icu(normalized);
}

std::string casefold(std::string_view utf8) {
    icu::UnicodeString u = to_icu(utf8);
    u.foldCase();
    return from_icu(u);
}

std::vector<char32_t> utf8_decode(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        int extra = c < 0x80 ? 0 : (c >> 5) == 0x6 ? 1 : (c >> 4) == 0xE ? 2 : (c >> 3) == 0x1E ? 3 : -1;
        if (extra < 0 || (extra > 0 && i + static_cast<std::size_t>(extra) >= s.size())) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        char32_t cp = extra == 0 ? c : extra == 1 ? (c & 0x1F) : extra == 2 ? (c & 0x0F) : (c & 0x07);
        bool ok = true;
        for (int k = 1; k <= extra; ++k) {
            auto cc = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
            if ((cc >> 6) != 0x2) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (!ok) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += static_cast<std::size_t>(extra) + 1;
    }
    return out;
}

std::size_t utf8_length(std::string_view utf8) { return utf8_decode(utf8).size(); }

bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF)      // unified ideographs
        || (cp >= 0x3400 && cp <= 0x4DBF)      // extension A
        || (cp >= 0x20000 && cp <= 0x2FFFF)    // extensions B+
        || (cp >= 0x3000 && cp <= 0x303F)      // CJK punctuation
        || (cp >= 0x3040 && cp <= 0x30FF)      // kana
        || (cp >= 0xAC00 && cp <= 0xD7AF)      // hangul
        || (cp >= 0xFF00 && cp <= 0xFFEF);     // full-width forms
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::string_view> labels) {
    std::uint64_t h = splitmix64(root);
    for (auto label : labels) {
        // FNV-1a over the label, then fold into the running state.
        std::uint64_t f = 0xcbf29ce484222325ULL;
        for (unsigned char c : label) {
            f ^= c;
            f *= 0x100000001b3ULL;
        }
        f ^= label.size();
        h = splitmix64(h ^ f);
    }
    return h;
}

std::uint64_t Rng::next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
        x = next();
    } while (x >= limit);
    return x % bound;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double counter_uniform(std::uint64_t key, std::uint64_t counter) {
    std::uint64_t x = splitmix64(key ^ splitmix64(counter));
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

}  // namespace fcforge
