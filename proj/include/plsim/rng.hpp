#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace plsim {

// Deterministic keyed hashing / sampling. Everything random in a run is a
// pure function of (seed, domain key), so executions replay bit-identically.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a over bytes, then strengthened with splitmix.
inline std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t seed = 0) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(seed);
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
    return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// 128-bit digest for structural identity of messages and protocol artifacts.
struct Digest {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;

    friend bool operator==(const Digest&, const Digest&) = default;
    friend auto operator<=>(const Digest&, const Digest&) = default;

    bool is_zero() const noexcept { return hi == 0 && lo == 0; }
    std::string hex() const {
        static const char* k = "0123456789abcdef";
        std::string s(32, '0');
        for (int i = 0; i < 16; ++i) s[15 - i] = k[(hi >> (4 * i)) & 0xf];
        for (int i = 0; i < 16; ++i) s[31 - i] = k[(lo >> (4 * i)) & 0xf];
        return s;
    }
};

struct DigestHash {
    std::size_t operator()(const Digest& d) const noexcept {
        return static_cast<std::size_t>(d.hi ^ (d.lo * 0x9e3779b97f4a7c15ULL));
    }
};

inline Digest digest_bytes(std::string_view bytes, std::uint64_t salt = 0) noexcept {
    std::uint64_t a = hash_bytes(bytes, salt ^ 0x6a09e667f3bcc908ULL);
    std::uint64_t b = hash_bytes(bytes, splitmix64(a) ^ 0xbb67ae8584caa73bULL);
    return Digest{a, b};
}

inline Digest digest_combine(const Digest& a, const Digest& b) noexcept {
    return Digest{hash_combine(a.hi, b.hi), hash_combine(a.lo, b.lo)};
}

// A small counter-mode generator keyed by an arbitrary byte string.
class KeyedRng {
public:
    explicit KeyedRng(std::uint64_t key) : state_(splitmix64(key ^ 0x2545f4914f6cdd1dULL)) {}
    KeyedRng(std::uint64_t seed, std::string_view domain)
        : KeyedRng(hash_bytes(domain, seed)) {}

    std::uint64_t next_u64() noexcept {
        state_ = splitmix64(state_ + 0x9e3779b97f4a7c15ULL);
        return state_;
    }

    // Uniform in [0, n), n >= 1. Modulo bias is irrelevant at our sample sizes.
    std::uint64_t next_below(std::uint64_t n) noexcept { return next_u64() % n; }

    double next_unit() noexcept {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    // Poisson(1) by inverse CDF walk.
    int next_poisson1() noexcept {
        double u = next_unit();
        double p = 0.36787944117144233; // e^-1
        double cum = p;
        int k = 0;
        while (u > cum && k < 64) {
            ++k;
            p /= static_cast<double>(k);
            cum += p;
        }
        return k;
    }

private:
    std::uint64_t state_;
};

// 256-bit strings, compared lexicographically (big-endian word order).
struct Word256 {
    std::array<std::uint64_t, 4> w{};

    friend bool operator==(const Word256&, const Word256&) = default;
    friend auto operator<=>(const Word256& a, const Word256& b) = default;

    int leading_zero_bits() const noexcept {
        int total = 0;
        for (std::uint64_t x : w) {
            if (x == 0) {
                total += 64;
                continue;
            }
            int lz = 0;
            for (int bit = 63; bit >= 0 && !((x >> bit) & 1); --bit) ++lz;
            return total + lz;
        }
        return total;
    }

    std::string hex() const {
        static const char* k = "0123456789abcdef";
        std::string s;
        s.reserve(64);
        for (std::uint64_t x : w)
            for (int i = 15; i >= 0; --i) s.push_back(k[(x >> (4 * i)) & 0xf]);
        return s;
    }
};

inline Word256 sample_word256(KeyedRng& rng) noexcept {
    Word256 r;
    for (auto& word : r.w) word = rng.next_u64();
    return r;
}

} // namespace plsim
