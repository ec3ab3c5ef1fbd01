#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string_view>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lgc {

// 64-bit FNV-1a, used to key scripted LLM fixtures by prompt text.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

// Shortest round-trip decimal form for doubles (CSV must reload losslessly).
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = std::strtod(buf, nullptr);
    if (back == v) {
        // try shorter forms first for readability
        for (int prec = 1; prec < 17; ++prec) {
            char b2[64];
            std::snprintf(b2, sizeof(b2), "%.*g", prec, v);
            if (std::strtod(b2, nullptr) == v) return std::string(b2);
        }
    }
    return std::string(buf);
}

// Deterministic RNG wrapper. All sampling goes through explicit
// bit-derived uniforms so runs replay identically on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // [0, 1)
        return (gen_() >> 11) * (1.0 / 9007199254740992.0);
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t bits() { return gen_(); }
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    std::string save() const {
        std::ostringstream os;
        os << gen_;
        return os.str();
    }
    void restore(const std::string& s) {
        std::istringstream is(s);
        is >> gen_;
        if (!is) throw std::runtime_error("Rng: bad serialized state");
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace lgc
