#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace rbls {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a over the tag, so streams can be named ("signs", "rows", ...).
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Independent child seed for a named stream of `seed`.
constexpr Seed derive_seed(Seed seed, std::string_view tag) noexcept {
    return mix64(seed ^ mix64(tag_hash(tag)));
}

constexpr Seed derive_seed(Seed seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
    return mix64(mix64(mix64(mix64(seed) ^ a) ^ b) ^ c);
}

// ---------------------------------------------------------------------------
// Walker/Vose alias table: O(n) build, O(1) draw, sampling with replacement.
// ---------------------------------------------------------------------------
class AliasTable {
public:
    /// `weights` must be non-negative, finite and not all zero; they need not
    /// sum to one.
    explicit AliasTable(std::span<const double> weights);

    std::size_t size() const noexcept { return prob_.size(); }

    template <class URBG>
    std::size_t operator()(URBG& rng) const {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double u = unit(rng) * static_cast<double>(prob_.size());
        auto slot = static_cast<std::size_t>(u);
        if (slot >= prob_.size()) slot = prob_.size() - 1;
        return (u - static_cast<double>(slot)) < prob_[slot] ? slot : alias_[slot];
    }

    std::vector<std::size_t> sample(std::size_t count, Rng& rng) const;

private:
    std::vector<double> prob_;
    std::vector<std::size_t> alias_;
};

} // namespace rbls
