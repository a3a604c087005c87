#include "fixtures.hpp"

#include <algorithm>

namespace emo3d::testsupport {

BlendshapeVector class_signature(int cls, double jitter, SplitMix64& rng) {
    std::array<double, kBlendshapeCount> w{};
    for (auto& x : w) {
        x = 0.05 + jitter * 0.4 * rng.next_double();
    }
    for (int i = 6 * cls; i < 6 * (cls + 1); ++i) {
        w[static_cast<std::size_t>(i)] = 0.82 + jitter * 0.15 * (rng.next_double() - 0.5);
    }
    return BlendshapeVector::from_values(w);
}

EmotionDistribution class_distribution(int cls, double jitter, SplitMix64& rng) {
    std::array<double, kEmotionCount> p{};
    for (int i = 0; i < kEmotionCount; ++i) {
        p[static_cast<std::size_t>(i)] = 0.24 / 7.0;
    }
    p[static_cast<std::size_t>(cls)] = 0.76;
    if (jitter > 0.0) {
        for (auto& x : p) {
            x *= 1.0 + jitter * 0.3 * (rng.next_double() - 0.5);
        }
    }
    return normalize_distribution(p);
}

std::vector<Triad> synthetic_dataset(int train_per_class, int val_per_class, int test_per_class,
                                     std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<Triad> out;
    const int per_class = train_per_class + val_per_class + test_per_class;
    for (int cls = 0; cls < kEmotionCount; ++cls) {
        for (int i = 0; i < per_class; ++i) {
            Triad t;
            t.id = "syn-" + emotion_name(cls) + "-" + std::to_string(i);
            t.text = "synthetic portrait " + std::to_string(i) + " radiating pure " +
                     emotion_name(cls) + " energy";
            t.blendshapes = class_signature(cls, 1.0, rng);
            t.emotion = class_distribution(cls, 1.0, rng);
            t.split = i < train_per_class                   ? Split::train
                      : i < train_per_class + val_per_class ? Split::val
                                                            : Split::test;
            out.push_back(std::move(t));
        }
    }
    return out;
}

std::vector<Triad> planted_fixture() {
    SplitMix64 rng(404);
    std::vector<Triad> out;
    for (int cls = 0; cls < kEmotionCount; ++cls) {
        Triad t;
        t.id = "planted-" + emotion_name(cls);
        t.text = "a planted training face for " + emotion_name(cls);
        t.blendshapes = class_signature(cls, 0.0, rng);
        t.emotion = class_distribution(cls, 0.0, rng);
        t.split = Split::train;
        out.push_back(std::move(t));
    }
    return out;
}

OracleModel::OracleModel(const std::vector<Triad>& dataset) : FEGModel("oracle") {
    for (const auto& t : dataset) {
        by_text_[t.text] = t.blendshapes;
    }
    trained_ = true;
}

BlendshapeVector OracleModel::predict(const std::string& text) const {
    const auto it = by_text_.find(text);
    if (it == by_text_.end()) {
        throw Error(ErrorKind::Lookup, "oracle has no entry for \"" + text + "\"");
    }
    return it->second;
}

void OracleModel::save(const std::filesystem::path&) const {
    throw Error(ErrorKind::State, "oracle model is not serializable");
}

ShuffledClassModel::ShuffledClassModel(const PromptBank& bank, const std::vector<Triad>& dataset)
    : FEGModel("class-shuffled") {
    for (const auto& t : dataset) {
        by_text_[t.text] = t.blendshapes;
    }

    std::array<std::vector<const PromptBank::Prompt*>, kEmotionCount> by_class;
    for (const auto& p : bank.prompts) {
        by_class[static_cast<std::size_t>(p.emotion.argmax())].push_back(&p);
    }
    for (int cls = 0; cls < kEmotionCount; ++cls) {
        const auto& own = by_class[static_cast<std::size_t>(cls)];
        const auto& other = by_class[static_cast<std::size_t>((cls + 1) % kEmotionCount)];
        if (other.empty()) {
            throw Error(ErrorKind::Parameter, "shuffled model needs prompts in every class");
        }
        for (std::size_t r = 0; r < own.size(); ++r) {
            counterpart_[own[r]->text] = other[r % other.size()]->text;
        }
    }
    trained_ = true;
}

const std::string& ShuffledClassModel::counterpart_text(const std::string& text) const {
    const auto it = counterpart_.find(text);
    if (it == counterpart_.end()) {
        throw Error(ErrorKind::Lookup, "no counterpart for \"" + text + "\"");
    }
    return it->second;
}

BlendshapeVector ShuffledClassModel::predict(const std::string& text) const {
    const auto it = by_text_.find(counterpart_text(text));
    if (it == by_text_.end()) {
        throw Error(ErrorKind::Lookup, "counterpart blendshapes missing");
    }
    return it->second;
}

void ShuffledClassModel::save(const std::filesystem::path&) const {
    throw Error(ErrorKind::State, "shuffled model is not serializable");
}

FlakyModel::FlakyModel(const std::vector<Triad>& dataset, std::vector<std::string> failing_texts)
    : FEGModel("flaky"), oracle_(dataset), failing_(std::move(failing_texts)) {
    trained_ = true;
}

BlendshapeVector FlakyModel::predict(const std::string& text) const {
    if (std::find(failing_.begin(), failing_.end(), text) != failing_.end()) {
        throw Error(ErrorKind::Backend, "planted prediction failure");
    }
    return oracle_.predict(text);
}

void FlakyModel::save(const std::filesystem::path&) const {
    throw Error(ErrorKind::State, "flaky model is not serializable");
}

void plant_dataset(MockBackend& backend, const MockRenderer& renderer,
                   const std::vector<Triad>& dataset) {
    for (const auto& t : dataset) {
        backend.plant_pair(renderer.render(t.blendshapes), t.text);
    }
}

} // namespace emo3d::testsupport
