#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emo3d/error.hpp"

namespace emo3d {

inline constexpr int kEmotionCount = 8;
inline constexpr int kBlendshapeCount = 52;

// Canonical class order; every serialized 8-vector uses it.
enum class EmotionClass : int {
    happiness = 0,
    anger,
    surprise,
    sadness,
    disgust,
    contempt,
    fear,
    neutral,
};

const std::array<std::string, kEmotionCount>& emotion_class_names();
const std::string& emotion_name(int index);
std::optional<EmotionClass> emotion_from_name(std::string_view name);

// The 52 face blendshape channels in the order the face tracker emits them.
const std::array<std::string, kBlendshapeCount>& blendshape_channel_names();
int blendshape_channel_index(std::string_view name); // -1 if unknown

// 8 non-negative reals summing to 1 (abs tolerance 1e-6 at construction).
class EmotionDistribution {
public:
    EmotionDistribution(); // uniform

    // Validates: entries >= -1e-6 (tiny negatives clamped to 0), sum within
    // 1e-6 of 1. Throws Validation otherwise.
    static EmotionDistribution from_values(const std::array<double, kEmotionCount>& v);
    static EmotionDistribution uniform();

    double operator[](int i) const { return v_[static_cast<std::size_t>(i)]; }
    const std::array<double, kEmotionCount>& values() const { return v_; }
    int argmax() const; // ties -> lowest canonical index

    friend bool operator==(const EmotionDistribution&, const EmotionDistribution&) = default;

private:
    struct Unchecked {};
    EmotionDistribution(const std::array<double, kEmotionCount>& v, Unchecked) : v_(v) {}
    std::array<double, kEmotionCount> v_{};

    friend EmotionDistribution normalize_distribution(const std::array<double, kEmotionCount>&);
};

// 52 activations in [0,1]. Ingestion clamps values within [-1e-6, 1+1e-6].
class BlendshapeVector {
public:
    BlendshapeVector(); // all zeros

    static BlendshapeVector from_values(std::span<const double> v);
    static BlendshapeVector zeros();
    static BlendshapeVector ones();

    double operator[](int i) const { return w_[static_cast<std::size_t>(i)]; }
    const std::array<double, kBlendshapeCount>& values() const { return w_; }

    friend bool operator==(const BlendshapeVector&, const BlendshapeVector&) = default;

private:
    std::array<double, kBlendshapeCount> w_{};
};

enum class Split { train, val, test };

const char* split_name(Split s);
std::optional<Split> split_from_name(std::string_view name);

// One dataset record; intensity/presentation are only set for the primitive
// emotion-word subset.
struct Triad {
    std::string id;
    std::string text;
    std::optional<std::string> image_path;
    BlendshapeVector blendshapes;
    EmotionDistribution emotion;
    Split split = Split::train;
    std::optional<int> intensity;          // 1..3
    std::optional<std::string> presentation; // "a" or "b"
};

// ---- pure math --------------------------------------------------------

// Scales raw to unit mass. Entries in [-1e-6, 0) are clamped to 0 first.
// Throws NegativeMass (entry < -1e-6) or ZeroMass (all zero).
EmotionDistribution normalize_distribution(const std::array<double, kEmotionCount>& raw);

// sum_i phi(i) * ln(phi(i) / psi'(i)) with psi' = (psi + eps) / (1 + 8*eps).
// Terms with phi(i) == 0 contribute 0. Result clamped to >= 0.
double kl_divergence(const EmotionDistribution& phi, const EmotionDistribution& psi,
                     double eps = 1e-6);

// dot(a,b) / (|a| * |b|). Throws ZeroNorm on an all-zero input and
// Parameter on dimension mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(std::span<const float> a, std::span<const float> b);

// 1 at the argmax index, 0 elsewhere; ties break to the lowest index.
std::array<double, kEmotionCount> one_hot(const std::array<double, kEmotionCount>& v);

// (1/52) * sum (a_i - b_i)^2
double mse(const BlendshapeVector& a, const BlendshapeVector& b);

// ---- dataset file I/O --------------------------------------------------
//
// JSONL, one record per line:
// {"id": str, "text": str, "image_path": str|null,
//  "blendshapes": [52 floats], "emotion": [8 floats],
//  "split": "train"|"val"|"test"}

std::vector<Triad> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const std::vector<Triad>& triads);

struct SplitCounts {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
    std::size_t total() const { return train + val + test; }
};

SplitCounts count_splits(const std::vector<Triad>& triads);

} // namespace emo3d
