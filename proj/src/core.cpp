#include "emo3d/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace emo3d {

namespace {

constexpr double kMassTolerance = 1e-6;

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace

const std::array<std::string, kEmotionCount>& emotion_class_names() {
    static const std::array<std::string, kEmotionCount> names = {
        "happiness", "anger", "surprise", "sadness",
        "disgust",   "contempt", "fear", "neutral",
    };
    return names;
}

const std::string& emotion_name(int index) {
    return emotion_class_names()[static_cast<std::size_t>(index)];
}

std::optional<EmotionClass> emotion_from_name(std::string_view name) {
    const auto& names = emotion_class_names();
    for (int i = 0; i < kEmotionCount; ++i) {
        if (names[static_cast<std::size_t>(i)] == name) {
            return static_cast<EmotionClass>(i);
        }
    }
    return std::nullopt;
}

const std::array<std::string, kBlendshapeCount>& blendshape_channel_names() {
    // Channel order of the face-landmark tracker output. Treated as opaque
    // ordered channels everywhere except rig manifests.
    static const std::array<std::string, kBlendshapeCount> names = {
        "_neutral",
        "browDownLeft", "browDownRight", "browInnerUp",
        "browOuterUpLeft", "browOuterUpRight",
        "cheekPuff", "cheekSquintLeft", "cheekSquintRight",
        "eyeBlinkLeft", "eyeBlinkRight",
        "eyeLookDownLeft", "eyeLookDownRight",
        "eyeLookInLeft", "eyeLookInRight",
        "eyeLookOutLeft", "eyeLookOutRight",
        "eyeLookUpLeft", "eyeLookUpRight",
        "eyeSquintLeft", "eyeSquintRight",
        "eyeWideLeft", "eyeWideRight",
        "jawForward", "jawLeft", "jawOpen", "jawRight",
        "mouthClose",
        "mouthDimpleLeft", "mouthDimpleRight",
        "mouthFrownLeft", "mouthFrownRight",
        "mouthFunnel", "mouthLeft",
        "mouthLowerDownLeft", "mouthLowerDownRight",
        "mouthPressLeft", "mouthPressRight",
        "mouthPucker", "mouthRight",
        "mouthRollLower", "mouthRollUpper",
        "mouthShrugLower", "mouthShrugUpper",
        "mouthSmileLeft", "mouthSmileRight",
        "mouthStretchLeft", "mouthStretchRight",
        "mouthUpperUpLeft", "mouthUpperUpRight",
        "noseSneerLeft", "noseSneerRight",
    };
    return names;
}

int blendshape_channel_index(std::string_view name) {
    const auto& names = blendshape_channel_names();
    for (int i = 0; i < kBlendshapeCount; ++i) {
        if (names[static_cast<std::size_t>(i)] == name) {
            return i;
        }
    }
    return -1;
}

EmotionDistribution::EmotionDistribution() {
    v_.fill(1.0 / kEmotionCount);
}

EmotionDistribution EmotionDistribution::uniform() {
    return EmotionDistribution{};
}

EmotionDistribution EmotionDistribution::from_values(const std::array<double, kEmotionCount>& v) {
    std::array<double, kEmotionCount> out = v;
    if (!all_finite(out)) {
        throw Error(ErrorKind::Validation, "emotion distribution has non-finite entries");
    }
    double sum = 0.0;
    for (auto& x : out) {
        if (x < 0.0) {
            if (x < -kMassTolerance) {
                throw Error(ErrorKind::Validation,
                            "emotion distribution entry below -1e-6: " + std::to_string(x));
            }
            x = 0.0;
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > kMassTolerance) {
        throw Error(ErrorKind::Validation,
                    "emotion distribution sums to " + std::to_string(sum) + ", expected 1");
    }
    return EmotionDistribution(out, Unchecked{});
}

int EmotionDistribution::argmax() const {
    int best = 0;
    for (int i = 1; i < kEmotionCount; ++i) {
        if (v_[static_cast<std::size_t>(i)] > v_[static_cast<std::size_t>(best)]) {
            best = i;
        }
    }
    return best;
}

BlendshapeVector::BlendshapeVector() = default;

BlendshapeVector BlendshapeVector::zeros() {
    return BlendshapeVector{};
}

BlendshapeVector BlendshapeVector::ones() {
    std::array<double, kBlendshapeCount> v;
    v.fill(1.0);
    return from_values(v);
}

BlendshapeVector BlendshapeVector::from_values(std::span<const double> v) {
    if (v.size() != kBlendshapeCount) {
        throw Error(ErrorKind::Validation,
                    "blendshape vector has " + std::to_string(v.size()) + " values, expected 52");
    }
    BlendshapeVector out;
    for (int i = 0; i < kBlendshapeCount; ++i) {
        double x = v[static_cast<std::size_t>(i)];
        if (!std::isfinite(x)) {
            throw Error(ErrorKind::Validation, "blendshape weight not finite");
        }
        if (x < 0.0) {
            if (x < -kMassTolerance) {
                throw Error(ErrorKind::Validation,
                            "blendshape weight below -1e-6: " + std::to_string(x));
            }
            x = 0.0;
        } else if (x > 1.0) {
            if (x > 1.0 + kMassTolerance) {
                throw Error(ErrorKind::Validation,
                            "blendshape weight above 1+1e-6: " + std::to_string(x));
            }
            x = 1.0;
        }
        out.w_[static_cast<std::size_t>(i)] = x;
    }
    return out;
}

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "train";
}

std::optional<Split> split_from_name(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    return std::nullopt;
}

EmotionDistribution normalize_distribution(const std::array<double, kEmotionCount>& raw) {
    if (!all_finite(raw)) {
        throw Error(ErrorKind::Validation, "normalize_distribution: non-finite input");
    }
    std::array<double, kEmotionCount> v = raw;
    double sum = 0.0;
    for (auto& x : v) {
        if (x < 0.0) {
            if (x < -kMassTolerance) {
                throw Error(ErrorKind::NegativeMass,
                            "entry below -1e-6: " + std::to_string(x));
            }
            x = 0.0;
        }
        sum += x;
    }
    if (sum <= 0.0) {
        throw Error(ErrorKind::ZeroMass, "all entries zero");
    }
    for (auto& x : v) {
        x /= sum;
    }
    return EmotionDistribution(v, EmotionDistribution::Unchecked{});
}

double kl_divergence(const EmotionDistribution& phi, const EmotionDistribution& psi, double eps) {
    if (!(eps > 0.0)) {
        throw Error(ErrorKind::Parameter, "kl_divergence: eps must be > 0");
    }
    const double denom = 1.0 + kEmotionCount * eps;
    double kl = 0.0;
    for (int i = 0; i < kEmotionCount; ++i) {
        const double p = phi[i];
        if (p <= 0.0) {
            continue; // 0 * log 0 = 0
        }
        const double q = (psi[i] + eps) / denom;
        kl += p * std::log(p / q);
    }
    return kl < 0.0 ? 0.0 : kl;
}

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::Parameter, "cosine_similarity: dimension mismatch");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = static_cast<double>(a[i]);
        const double y = static_cast<double>(b[i]);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) {
        throw Error(ErrorKind::ZeroNorm, "cosine_similarity: zero-norm input");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

} // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    return cosine_impl(a, b);
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    return cosine_impl(a, b);
}

std::array<double, kEmotionCount> one_hot(const std::array<double, kEmotionCount>& v) {
    int best = 0;
    for (int i = 1; i < kEmotionCount; ++i) {
        if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) {
            best = i;
        }
    }
    std::array<double, kEmotionCount> out{};
    out[static_cast<std::size_t>(best)] = 1.0;
    return out;
}

double mse(const BlendshapeVector& a, const BlendshapeVector& b) {
    double sum = 0.0;
    for (int i = 0; i < kBlendshapeCount; ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum / kBlendshapeCount;
}

SplitCounts count_splits(const std::vector<Triad>& triads) {
    SplitCounts counts;
    for (const auto& t : triads) {
        switch (t.split) {
            case Split::train: ++counts.train; break;
            case Split::val: ++counts.val; break;
            case Split::test: ++counts.test; break;
        }
    }
    return counts;
}

} // namespace emo3d
