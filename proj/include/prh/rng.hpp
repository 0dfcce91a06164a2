#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace prh {

/// Seeded generator with a fully specified derivation chain, so every draw is
/// reproducible across standard libraries. std::mt19937_64 is bit-exact by the
/// standard; the distributions on top of it are not, so they are written out:
///   uniform():  top 53 bits of one engine output, scaled by 2^-53, in [0, 1).
///   below(n):   Lemire's multiply-shift with rejection, in [0, n).
///   normal():   Box-Muller cosine branch from two uniform() draws; the sine
///               branch is discarded.
///   shuffle():  Fisher-Yates from the back, swapping i with below(i + 1).
class Rng {
public:
    static constexpr std::string_view kAlgorithm =
        "mt19937_64;u53;lemire;box-muller-cos;fisher-yates;v1";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform();
    std::uint64_t below(std::uint64_t n);
    double normal();

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace prh
