#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emo3d {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes);

// Deterministic 64-bit mixer; identical output on every platform, unlike
// the stdlib distributions.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next();
    double next_double();             // [0, 1)
    double next_gaussian();           // Box-Muller, one value per call pair
    std::uint32_t next_below(std::uint32_t bound); // [0, bound)

private:
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Pseudo-random unit vector seeded from the content bytes; pure function of
// (bytes, dim, salt).
std::vector<float> hash_unit_vector(std::string_view bytes, int dim, std::uint64_t salt);

} // namespace emo3d
