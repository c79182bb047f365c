#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace fuzzeval::util {

// FNV-1a, used for content digests and rng stream derivation. Not
// cryptographic; collisions are acceptable for identity bookkeeping.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = kFnvOffset) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& file);

std::string to_hex(std::uint64_t v);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_lines(std::string_view text);

// Shell-style matching with '*' and '?'. Used for frame blocklists and
// crash/queue globs.
bool glob_match(std::string_view pattern, std::string_view text);

std::string read_file(const std::filesystem::path& file);
void write_file(const std::filesystem::path& file, std::string_view content);

// Uniform draw in [0, n) by rejection, and a 53-bit uniform in [0, 1).
// mt19937_64 output is standard-specified, so streams built from these are
// reproducible across platforms, unlike std::uniform_*_distribution.
std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t n);
double uniform01(std::mt19937_64& rng);

// Inverse-CDF exponential sample with the given rate (events per second).
double exponential_sample(std::mt19937_64& rng, double rate);

// Knuth-style Poisson inversion; deterministic for the same rng state.
unsigned poisson_sample(std::mt19937_64& rng, double mean);

}  // namespace fuzzeval::util
