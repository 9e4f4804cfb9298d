#include "rbls/sampling.hpp"

#include "rbls/error.hpp"

#include <cmath>

namespace rbls {

AliasTable::AliasTable(std::span<const double> weights)
    : prob_(weights.size()), alias_(weights.size()) {
    const std::size_t n = weights.size();
    if (n == 0) throw Error(ErrorCode::InvalidInput, "alias table needs at least one weight");
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw Error(ErrorCode::InvalidInput, "alias weights must be finite and non-negative");
        total += w;
    }
    if (total <= 0.0) throw Error(ErrorCode::InvalidInput, "alias weights sum to zero");

    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        scaled[i] = weights[i] * static_cast<double>(n) / total;
        (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
        const std::size_t s = small.back();
        small.pop_back();
        const std::size_t l = large.back();
        prob_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    // Leftovers are 1 up to rounding.
    for (std::size_t i : large) {
        prob_[i] = 1.0;
        alias_[i] = i;
    }
    for (std::size_t i : small) {
        prob_[i] = 1.0;
        alias_[i] = i;
    }
}

std::vector<std::size_t> AliasTable::sample(std::size_t count, Rng& rng) const {
    std::vector<std::size_t> out(count);
    for (auto& v : out) v = (*this)(rng);
    return out;
}

} // namespace rbls
