#include "emo3d/hash.hpp"

#include <cmath>
#include <numbers>

#include <openssl/evp.h>

#include "emo3d/error.hpp"

namespace emo3d {

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr)) {
        throw Error(ErrorKind::Io, "sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_hex(std::string_view text) {
    return sha256_hex(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t SplitMix64::next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SplitMix64::next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::next_gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) {
        u1 = next_double();
    }
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

std::uint32_t SplitMix64::next_below(std::uint32_t bound) {
    // rejection sampling keeps the result unbiased
    if (bound == 0) {
        return 0;
    }
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = next();
    while (x >= limit) {
        x = next();
    }
    return static_cast<std::uint32_t>(x % bound);
}

std::vector<float> hash_unit_vector(std::string_view bytes, int dim, std::uint64_t salt) {
    SplitMix64 rng(fnv1a64(bytes) ^ salt);
    std::vector<float> v(static_cast<std::size_t>(dim));
    double norm2 = 0.0;
    for (auto& x : v) {
        const double g = rng.next_gaussian();
        x = static_cast<float>(g);
        norm2 += g * g;
    }
    // double accumulation, float storage: same bytes for same input
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) {
        x = static_cast<float>(static_cast<double>(x) * inv);
    }
    return v;
}

} // namespace emo3d
