#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emo3d/core.hpp"
#include "emo3d/embedding.hpp"
#include "emo3d/nn.hpp"

namespace emo3d {

enum class ModelType { bert_mlp, xlm_mlp, emotion_xlm, clip_mlp, autoencoder_clip };

const char* model_type_name(ModelType t);
std::optional<ModelType> model_type_from_name(std::string_view name);

enum class Pooling { mean, first_token };

// Sentence encoder standing in for the pretrained language models: one
// hash-seeded vector per whitespace token, pooled to a 768-dim sentence
// embedding. Deterministic, so checkpoints reload bit-exactly.
class LmBackend {
public:
    explicit LmBackend(std::string name = "mock-bert", int dim = 768,
                       Pooling pooling = Pooling::mean);

    int dim() const { return dim_; }
    const std::string& name() const { return name_; }
    Pooling pooling() const { return pooling_; }

    nn::Vector encode(const std::string& text) const;

private:
    std::string name_;
    int dim_;
    Pooling pooling_;
};

struct TrainConfig {
    int epochs = 500;
    int batch_size = 8;
    double learning_rate = 2.0;
    double lambda1 = 1.0;          // blendshape loss weight
    double lambda2 = 1.0;          // emotion loss weight
    double lambda_text = 1.0;      // latent/text alignment weight
    double lambda_image = 1.0;     // latent/image alignment weight
    double teacher_forcing_ratio = 0.5;
    std::uint64_t seed = 7;
    int hidden_width = 256;
    int hidden_layers = 2;
    Pooling pooling = Pooling::mean;
    bool variational = false;      // reparameterized latent
    double prior_weight = 0.0;     // prior-divergence weight in variational mode

    void validate() const;
};

struct TrainStats {
    std::vector<double> epoch_loss;
    double final_loss = 0.0;
    std::size_t training_pairs = 0;          // text+image pairs the model saw
    std::size_t ground_truth_batches = 0;    // teacher-forcing instrumentation
    std::size_t total_batches = 0;
};

// Uniform text -> blendshapes contract shared by every baseline.
class FEGModel {
public:
    virtual ~FEGModel() = default;

    const std::string& name() const { return name_; }
    virtual ModelType type() const = 0;

    // Pure function of (weights, text); throws State on an untrained model.
    virtual BlendshapeVector predict(const std::string& text) const = 0;

    virtual void save(const std::filesystem::path& dir) const = 0;

    const TrainStats& stats() const { return stats_; }
    bool trained() const { return trained_; }

protected:
    explicit FEGModel(std::string name) : name_(std::move(name)) {}
    void require_trained() const;

    std::string name_;
    TrainStats stats_;
    bool trained_ = false;
};

// Pretrained-LM baseline: MLP from the 768-dim sentence embedding to 52
// blendshape scores, trained with plain MSE.
class TextRegressorModel : public FEGModel {
public:
    TextRegressorModel(std::string name, std::shared_ptr<LmBackend> lm);

    ModelType type() const override;
    BlendshapeVector predict(const std::string& text) const override;
    void save(const std::filesystem::path& dir) const override;

    void train(const std::vector<Triad>& dataset, const TrainConfig& config);

    const LmBackend& lm() const { return *lm_; }
    nn::Mlp& net() { return net_; }

private:
    friend std::unique_ptr<FEGModel> load_model(const std::filesystem::path&,
                                                std::shared_ptr<EmbeddingBackend>);
    std::shared_ptr<LmBackend> lm_;
    nn::Mlp net_;
    TrainConfig config_;
};

// Emotion-XLM: emotion-extractor unit feeding a 784 -> 52 regression unit,
// trained with teacher forcing on the extractor output.
class EmotionXlmModel : public FEGModel {
public:
    explicit EmotionXlmModel(std::shared_ptr<LmBackend> lm, std::string name = "emotion_xlm");

    ModelType type() const override { return ModelType::emotion_xlm; }
    BlendshapeVector predict(const std::string& text) const override;
    void save(const std::filesystem::path& dir) const override;

    void train(const std::vector<Triad>& dataset, const TrainConfig& config);

    EmotionDistribution extract_emotion(const std::string& text) const;
    int regression_input_dim() const;

    nn::EmotionXlmNet& net();

private:
    friend std::unique_ptr<FEGModel> load_model(const std::filesystem::path&,
                                                std::shared_ptr<EmbeddingBackend>);
    std::shared_ptr<LmBackend> lm_;
    std::unique_ptr<nn::EmotionXlmNet> net_;
    TrainConfig config_;
};

// CLIP baseline: one MLP trained on the union of (text embedding, scores)
// and (image embedding, scores) pairs; prediction embeds the text only.
class ClipRegressorModel : public FEGModel {
public:
    explicit ClipRegressorModel(std::shared_ptr<EmbeddingBackend> backend,
                                std::string name = "clip_mlp");

    ModelType type() const override { return ModelType::clip_mlp; }
    BlendshapeVector predict(const std::string& text) const override;
    void save(const std::filesystem::path& dir) const override;

    // image_root resolves relative triad image paths; triads without a
    // readable image contribute a text pair only.
    void train(const std::vector<Triad>& dataset, const TrainConfig& config,
               const std::filesystem::path& image_root = {});

    const EmbeddingBackend& backend() const { return *backend_; }

private:
    friend std::unique_ptr<FEGModel> load_model(const std::filesystem::path&,
                                                std::shared_ptr<EmbeddingBackend>);
    std::shared_ptr<EmbeddingBackend> backend_;
    nn::Mlp net_;
    TrainConfig config_;
};

// Blendshape autoencoder whose latent is aligned to the joint text/image
// space; prediction decodes the text embedding.
class AutoencoderClipModel : public FEGModel {
public:
    explicit AutoencoderClipModel(std::shared_ptr<EmbeddingBackend> backend,
                                  std::string name = "autoencoder_clip");

    ModelType type() const override { return ModelType::autoencoder_clip; }
    BlendshapeVector predict(const std::string& text) const override;
    void save(const std::filesystem::path& dir) const override;

    void train(const std::vector<Triad>& dataset, const TrainConfig& config,
               const std::filesystem::path& image_root = {});

    nn::AutoencoderNet& net();
    const EmbeddingBackend& backend() const { return *backend_; }

private:
    friend std::unique_ptr<FEGModel> load_model(const std::filesystem::path&,
                                                std::shared_ptr<EmbeddingBackend>);
    std::shared_ptr<EmbeddingBackend> backend_;
    std::unique_ptr<nn::AutoencoderNet> net_;
    TrainConfig config_;
};

// ---- training entry points (one per baseline) ---------------------------

std::unique_ptr<TextRegressorModel> train_text_regressor(std::shared_ptr<LmBackend> lm,
                                                         const std::vector<Triad>& dataset,
                                                         const TrainConfig& config,
                                                         std::string name = "bert_mlp");

std::unique_ptr<EmotionXlmModel> train_emotion_xlm(std::shared_ptr<LmBackend> lm,
                                                   const std::vector<Triad>& dataset,
                                                   const TrainConfig& config);

std::unique_ptr<ClipRegressorModel> train_clip_regressor(
    std::shared_ptr<EmbeddingBackend> backend, const std::vector<Triad>& dataset,
    const TrainConfig& config, const std::filesystem::path& image_root = {});

std::unique_ptr<AutoencoderClipModel> train_blendshape_autoencoder(
    std::shared_ptr<EmbeddingBackend> backend, const std::vector<Triad>& dataset,
    const TrainConfig& config, const std::filesystem::path& image_root = {});

// ---- checkpoints ---------------------------------------------------------
//
// Checkpoint directory: manifest.json (model type, backend, dims, seed,
// config) + weights.bin. load(save(m)) predicts bit-exactly. joint_backend
// is required for clip_mlp / autoencoder_clip and must match the saved
// dimensionality (ConfigError otherwise).

std::unique_ptr<FEGModel> load_model(const std::filesystem::path& dir,
                                     std::shared_ptr<EmbeddingBackend> joint_backend = nullptr);

} // namespace emo3d
