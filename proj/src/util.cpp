#include "fuzzeval/util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fuzzeval::util {

std::uint64_t fnv1a64_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file for digest: " + file.string());
    }
    std::uint64_t h = kFnvOffset;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
        if (!in) break;
    }
    return h;
}

std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    if (text.empty()) return lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            std::string_view line = text.substr(start, i - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.emplace_back(line);
            start = i + 1;
        }
    }
    if (!lines.empty() && lines.back().empty() && !text.empty() && text.back() == '\n') {
        lines.pop_back();
    }
    return lines;
}

bool glob_match(std::string_view pattern, std::string_view text) {
    // Iterative wildcard match with backtracking over the last '*'.
    // A backslash escapes the following pattern character, so a literal
    // '?' is expressible (frame names like "??" would otherwise collide
    // with every two-letter function).
    std::size_t p = 0, t = 0;
    std::size_t star = std::string_view::npos, mark = 0;
    while (t < text.size()) {
        bool escaped = p < pattern.size() && pattern[p] == '\\' && p + 1 < pattern.size();
        std::size_t pc = escaped ? p + 1 : p;
        if (pc < pattern.size() &&
            ((!escaped && pattern[pc] == '?') || pattern[pc] == text[t]) &&
            (escaped || pattern[pc] != '*')) {
            p = pc + 1;
            ++t;
        } else if (!escaped && p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file: " + file.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& file, std::string_view content) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write file: " + file.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("bounded_rand: n must be > 0");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exponential_sample(std::mt19937_64& rng, double rate) {
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    double u = uniform01(rng);
    return -std::log1p(-u) / rate;
}

unsigned poisson_sample(std::mt19937_64& rng, double mean) {
    if (mean <= 0.0) return 0;
    double p = std::exp(-mean);
    double s = p;
    double u = uniform01(rng);
    unsigned k = 0;
    while (u > s && k < 100000) {
        ++k;
        p *= mean / k;
        s += p;
    }
    return k;
}

}  // namespace fuzzeval::util
