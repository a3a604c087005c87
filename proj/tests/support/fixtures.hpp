#pragma once

#include <map>
#include <string>
#include <vector>

#include "emo3d/core.hpp"
#include "emo3d/embedding.hpp"
#include "emo3d/hash.hpp"
#include "emo3d/metric.hpp"
#include "emo3d/models.hpp"
#include "emo3d/render.hpp"

namespace emo3d::testsupport {

// Distinct blendshape signature per class: a raised 6-channel block starting
// at channel 6*cls, optionally jittered per triad.
BlendshapeVector class_signature(int cls, double jitter, SplitMix64& rng);

// Concentrated distribution for a class (0.76 base mass), deterministically
// jittered with every component kept >= 0.02 so that the self-KL at the
// default eps stays below 1e-9.
EmotionDistribution class_distribution(int cls, double jitter, SplitMix64& rng);

// Synthetic 8-class dataset: per class, train/val/test triads with unique
// texts, one signature block per class.
std::vector<Triad> synthetic_dataset(int train_per_class, int val_per_class, int test_per_class,
                                     std::uint64_t seed);

// Eight planted training samples, one exact signature per class; the
// memorization fixture for the overfit-sanity checks.
std::vector<Triad> planted_fixture();

// Ground-truth lookup model: predicts the dataset's stored blendshapes.
class OracleModel : public FEGModel {
public:
    explicit OracleModel(const std::vector<Triad>& dataset);

    ModelType type() const override { return ModelType::bert_mlp; }
    BlendshapeVector predict(const std::string& text) const override;
    void save(const std::filesystem::path&) const override;

private:
    std::map<std::string, BlendshapeVector> by_text_;
};

// Class-shuffled adversary over a prompt bank: answers prompt (c, rank) with
// the ground-truth blendshapes of bank prompt ((c+1) % 8, rank).
class ShuffledClassModel : public FEGModel {
public:
    ShuffledClassModel(const PromptBank& bank, const std::vector<Triad>& dataset);

    ModelType type() const override { return ModelType::bert_mlp; }
    BlendshapeVector predict(const std::string& text) const override;
    void save(const std::filesystem::path&) const override;

    // which bank prompt the adversary imitates for a given prompt text
    const std::string& counterpart_text(const std::string& text) const;

private:
    std::map<std::string, std::string> counterpart_;
    std::map<std::string, BlendshapeVector> by_text_;
};

// Model whose predict throws for texts in the failure set.
class FlakyModel : public FEGModel {
public:
    FlakyModel(const std::vector<Triad>& dataset, std::vector<std::string> failing_texts);

    ModelType type() const override { return ModelType::bert_mlp; }
    BlendshapeVector predict(const std::string& text) const override;
    void save(const std::filesystem::path&) const override;

private:
    OracleModel oracle_;
    std::vector<std::string> failing_;
};

// Registers every dataset triad's mock-rendered ground-truth image with the
// backend, so embed_image(render(gt)) == embed_text(text).
void plant_dataset(MockBackend& backend, const MockRenderer& renderer,
                   const std::vector<Triad>& dataset);

} // namespace emo3d::testsupport
