#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fcforge/literal.hpp"

namespace fcforge {

/// Base class of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::filesystem::path& path);
/// Writes via a sibling temp file and rename, so readers never see partial output.
void write_file(const std::filesystem::path& path, std::string_view contents);

std::vector<json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(std::span<const json> records);

/// RFC 4180 quoting for one CSV field.
std::string csv_field(std::string_view field);
std::string csv_row(std::initializer_list<std::string_view> fields);
std::string csv_row(const std::vector<std::string>& fields);

// ---------------------------------------------------------------------------
// Hashing

std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Text

std::string_view trim_ascii(std::string_view s);
/// NFKC normalization followed by whitespace trim.
std::string normalize_text(std::string_view utf8);
/// Unicode default case folding.
std::string casefold(std::string_view utf8);
/// Number of Unicode scalar values (invalid bytes count as one each).
std::size_t utf8_length(std::string_view utf8);
bool is_cjk(char32_t cp);
std::vector<char32_t> utf8_decode(std::string_view utf8);

// ---------------------------------------------------------------------------
// Deterministic randomness
//
// All randomness derives from one root seed through labelled sub-streams, so
// results never depend on evaluation order or a global generator. The mixing
// functions and draws are fully specified here (no std distributions, whose
// output differs across standard libraries).

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::string_view> labels);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    /// Uniform integer in [0, bound), bound > 0; unbiased by rejection.
    std::uint64_t below(std::uint64_t bound);
    /// Uniform real in [0, 1) with 53 bits.
    double uniform();

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

/// Counter-based uniform in [0, 1): a pure function of (key, counter).
double counter_uniform(std::uint64_t key, std::uint64_t counter);

}  // namespace fcforge
