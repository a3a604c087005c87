#include "emo3d/models.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>
#include <zlib.h>

#include "emo3d/hash.hpp"

namespace emo3d {

namespace {

using nlohmann::json;
using nn::Vector;

Vector to_vector(const std::array<double, kBlendshapeCount>& a) {
    Vector v(kBlendshapeCount);
    for (int i = 0; i < kBlendshapeCount; ++i) {
        v(i) = a[static_cast<std::size_t>(i)];
    }
    return v;
}

Vector to_vector(const std::array<double, kEmotionCount>& a) {
    Vector v(kEmotionCount);
    for (int i = 0; i < kEmotionCount; ++i) {
        v(i) = a[static_cast<std::size_t>(i)];
    }
    return v;
}

Vector to_vector(const std::vector<float>& a) {
    Vector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = a[i];
    }
    return v;
}

BlendshapeVector to_blendshapes(const Vector& v) {
    std::array<double, kBlendshapeCount> out{};
    for (int i = 0; i < kBlendshapeCount; ++i) {
        out[static_cast<std::size_t>(i)] = std::clamp(v(i), 0.0, 1.0);
    }
    return BlendshapeVector::from_values(out);
}

std::vector<const Triad*> train_split(const std::vector<Triad>& dataset) {
    std::vector<const Triad*> out;
    for (const auto& t : dataset) {
        if (t.split == Split::train) {
            out.push_back(&t);
        }
    }
    return out;
}

void shuffle_indices(std::vector<std::size_t>& order, SplitMix64& rng) {
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = rng.next_below(static_cast<std::uint32_t>(i));
        std::swap(order[i - 1], order[j]);
    }
}

void check_finite_loss(double loss, int epoch) {
    if (!std::isfinite(loss)) {
        throw Error(ErrorKind::Divergence,
                    "training loss not finite at epoch " + std::to_string(epoch));
    }
}

} // namespace

const char* model_type_name(ModelType t) {
    switch (t) {
        case ModelType::bert_mlp: return "bert_mlp";
        case ModelType::xlm_mlp: return "xlm_mlp";
        case ModelType::emotion_xlm: return "emotion_xlm";
        case ModelType::clip_mlp: return "clip_mlp";
        case ModelType::autoencoder_clip: return "autoencoder_clip";
    }
    return "unknown";
}

std::optional<ModelType> model_type_from_name(std::string_view name) {
    for (ModelType t : {ModelType::bert_mlp, ModelType::xlm_mlp, ModelType::emotion_xlm,
                        ModelType::clip_mlp, ModelType::autoencoder_clip}) {
        if (name == model_type_name(t)) {
            return t;
        }
    }
    return std::nullopt;
}

// ---- LmBackend -------------------------------------------------------------

LmBackend::LmBackend(std::string name, int dim, Pooling pooling)
    : name_(std::move(name)), dim_(dim), pooling_(pooling) {
    if (dim_ <= 0) {
        throw Error(ErrorKind::Config, "LmBackend: dim must be positive");
    }
}

Vector LmBackend::encode(const std::string& text) const {
    if (text.empty()) {
        throw Error(ErrorKind::Backend, "LmBackend: empty text");
    }
    const std::uint64_t salt = fnv1a64(name_);
    // token vectors are scaled to O(1) per-entry magnitude, matching the
    // scale of real transformer hidden states
    const double scale = std::sqrt(static_cast<double>(dim_));
    std::istringstream tokens(text);
    std::string token;
    Vector acc = Vector::Zero(dim_);
    int count = 0;
    while (tokens >> token) {
        const auto emb = hash_unit_vector(token, dim_, salt);
        for (int i = 0; i < dim_; ++i) {
            acc(i) += scale * emb[static_cast<std::size_t>(i)];
        }
        ++count;
        if (pooling_ == Pooling::first_token) {
            break;
        }
    }
    if (count == 0) {
        // punctuation-only text still embeds deterministically
        const auto emb = hash_unit_vector(text, dim_, salt);
        for (int i = 0; i < dim_; ++i) {
            acc(i) = scale * emb[static_cast<std::size_t>(i)];
        }
        count = 1;
    }
    return acc / static_cast<double>(count);
}

void TrainConfig::validate() const {
    if (epochs <= 0 || batch_size <= 0 || hidden_width <= 0 || hidden_layers <= 0) {
        throw Error(ErrorKind::Config, "TrainConfig: counts must be positive");
    }
    if (!(learning_rate > 0.0) || !(lambda1 > 0.0) || !(lambda2 > 0.0) ||
        !(lambda_text > 0.0) || !(lambda_image > 0.0)) {
        throw Error(ErrorKind::Config, "TrainConfig: rates and weights must be positive");
    }
    if (teacher_forcing_ratio < 0.0 || teacher_forcing_ratio > 1.0) {
        throw Error(ErrorKind::Config, "TrainConfig: teacher_forcing_ratio must be in [0,1]");
    }
    if (prior_weight < 0.0) {
        throw Error(ErrorKind::Config, "TrainConfig: prior_weight must be >= 0");
    }
}

void FEGModel::require_trained() const {
    if (!trained_) {
        throw Error(ErrorKind::State, "model \"" + name_ + "\" is not trained");
    }
}

// ---- TextRegressorModel ------------------------------------------------------

TextRegressorModel::TextRegressorModel(std::string name, std::shared_ptr<LmBackend> lm)
    : FEGModel(std::move(name)), lm_(std::move(lm)) {}

ModelType TextRegressorModel::type() const {
    return name_ == "xlm_mlp" ? ModelType::xlm_mlp : ModelType::bert_mlp;
}

BlendshapeVector TextRegressorModel::predict(const std::string& text) const {
    require_trained();
    return to_blendshapes(net_.forward(lm_->encode(text)));
}

void TextRegressorModel::train(const std::vector<Triad>& dataset, const TrainConfig& config) {
    config.validate();
    config_ = config;
    const auto triads = train_split(dataset);
    if (triads.empty()) {
        throw Error(ErrorKind::Data, "train split is empty");
    }

    std::vector<Vector> inputs;
    std::vector<Vector> targets;
    inputs.reserve(triads.size());
    targets.reserve(triads.size());
    for (const Triad* t : triads) {
        inputs.push_back(lm_->encode(t->text));
        targets.push_back(to_vector(t->blendshapes.values()));
    }

    SplitMix64 rng(config.seed);
    std::vector<int> dims{lm_->dim()};
    std::vector<nn::Activation> acts;
    for (int i = 0; i < config.hidden_layers; ++i) {
        dims.push_back(config.hidden_width);
        acts.push_back(nn::Activation::Tanh);
    }
    dims.push_back(kBlendshapeCount);
    acts.push_back(nn::Activation::Sigmoid);
    net_ = nn::Mlp(dims, acts, rng);

    stats_ = TrainStats{};
    stats_.training_pairs = inputs.size();
    std::vector<std::size_t> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_indices(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const double scale = 1.0 / static_cast<double>(end - start);
            net_.zero_grad();
            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                nn::Mlp::Trace trace;
                const Vector y = net_.forward(inputs[order[k]], trace);
                Vector dy;
                batch_loss += nn::mse_loss(y, targets[order[k]], dy, scale) * scale;
                net_.backward(dy, trace);
            }
            net_.sgd_step(config.learning_rate);
            epoch_loss += batch_loss * static_cast<double>(end - start);
            ++stats_.total_batches;
        }
        epoch_loss /= static_cast<double>(order.size());
        check_finite_loss(epoch_loss, epoch);
        stats_.epoch_loss.push_back(epoch_loss);
    }
    stats_.final_loss = stats_.epoch_loss.back();
    trained_ = true;
}

std::unique_ptr<TextRegressorModel> train_text_regressor(std::shared_ptr<LmBackend> lm,
                                                         const std::vector<Triad>& dataset,
                                                         const TrainConfig& config,
                                                         std::string name) {
    auto model = std::make_unique<TextRegressorModel>(std::move(name), std::move(lm));
    model->train(dataset, config);
    return model;
}

// ---- EmotionXlmModel ---------------------------------------------------------

EmotionXlmModel::EmotionXlmModel(std::shared_ptr<LmBackend> lm, std::string name)
    : FEGModel(std::move(name)), lm_(std::move(lm)) {}

BlendshapeVector EmotionXlmModel::predict(const std::string& text) const {
    require_trained();
    return to_blendshapes(net_->predict(lm_->encode(text)));
}

EmotionDistribution EmotionXlmModel::extract_emotion(const std::string& text) const {
    require_trained();
    const Vector v = net_->extract_emotion(lm_->encode(text));
    std::array<double, kEmotionCount> raw{};
    for (int i = 0; i < kEmotionCount; ++i) {
        raw[static_cast<std::size_t>(i)] = v(i);
    }
    return normalize_distribution(raw);
}

int EmotionXlmModel::regression_input_dim() const {
    if (net_) {
        return net_->regression_input_dim();
    }
    return lm_->dim() + 2 * kEmotionCount;
}

nn::EmotionXlmNet& EmotionXlmModel::net() {
    if (!net_) {
        throw Error(ErrorKind::State, "emotion_xlm has no network yet");
    }
    return *net_;
}

void EmotionXlmModel::train(const std::vector<Triad>& dataset, const TrainConfig& config) {
    config.validate();
    config_ = config;
    const auto triads = train_split(dataset);
    if (triads.empty()) {
        throw Error(ErrorKind::Data, "train split is empty");
    }

    std::vector<nn::EmotionXlmNet::Sample> samples;
    samples.reserve(triads.size());
    for (const Triad* t : triads) {
        nn::EmotionXlmNet::Sample s;
        s.text_emb = lm_->encode(t->text);
        s.target = to_vector(t->blendshapes.values());
        s.emotion = to_vector(t->emotion.values());
        samples.push_back(std::move(s));
    }

    net_ = std::make_unique<nn::EmotionXlmNet>(lm_->dim(), config.hidden_width,
                                               config.hidden_layers, kEmotionCount,
                                               kBlendshapeCount, config.seed);

    SplitMix64 rng(config.seed ^ 0x7f4a7c15ULL);
    stats_ = TrainStats{};
    stats_.training_pairs = samples.size();
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_indices(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::vector<nn::EmotionXlmNet::Sample> batch;
            batch.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) {
                batch.push_back(samples[order[k]]);
            }
            const bool use_gt = rng.next_double() < config.teacher_forcing_ratio;
            if (use_gt) {
                ++stats_.ground_truth_batches;
            }
            ++stats_.total_batches;
            net_->zero_grad();
            const double loss =
                net_->loss_and_grad(batch, config.lambda1, config.lambda2, use_gt);
            net_->sgd_step(config.learning_rate);
            epoch_loss += loss * static_cast<double>(end - start);
        }
        epoch_loss /= static_cast<double>(order.size());
        check_finite_loss(epoch_loss, epoch);
        stats_.epoch_loss.push_back(epoch_loss);
    }
    stats_.final_loss = stats_.epoch_loss.back();
    trained_ = true;
}

std::unique_ptr<EmotionXlmModel> train_emotion_xlm(std::shared_ptr<LmBackend> lm,
                                                   const std::vector<Triad>& dataset,
                                                   const TrainConfig& config) {
    auto model = std::make_unique<EmotionXlmModel>(std::move(lm));
    model->train(dataset, config);
    return model;
}

// ---- ClipRegressorModel --------------------------------------------------------

ClipRegressorModel::ClipRegressorModel(std::shared_ptr<EmbeddingBackend> backend,
                                       std::string name)
    : FEGModel(std::move(name)), backend_(std::move(backend)) {}

BlendshapeVector ClipRegressorModel::predict(const std::string& text) const {
    require_trained();
    return to_blendshapes(net_.forward(to_vector(backend_->embed_text(text))));
}

void ClipRegressorModel::train(const std::vector<Triad>& dataset, const TrainConfig& config,
                               const std::filesystem::path& image_root) {
    config.validate();
    config_ = config;
    const auto triads = train_split(dataset);

    // union of text pairs and image pairs; this is what doubles the
    // training set when every triad carries an image
    std::vector<Vector> inputs;
    std::vector<Vector> targets;
    for (const Triad* t : triads) {
        const Vector target = to_vector(t->blendshapes.values());
        inputs.push_back(to_vector(backend_->embed_text(t->text)));
        targets.push_back(target);
        if (t->image_path) {
            const auto path = image_root.empty() ? std::filesystem::path(*t->image_path)
                                                 : image_root / *t->image_path;
            try {
                const Image img = read_png(path);
                inputs.push_back(to_vector(backend_->embed_image(img)));
                targets.push_back(target);
            } catch (const Error& e) {
                std::cerr << "[clip_mlp] skipping image for " << t->id << ": " << e.what()
                          << "\n";
            }
        }
    }
    if (inputs.empty()) {
        throw Error(ErrorKind::Data, "no usable training pairs");
    }

    SplitMix64 rng(config.seed);
    std::vector<int> dims{backend_->dim()};
    std::vector<nn::Activation> acts;
    for (int i = 0; i < config.hidden_layers; ++i) {
        dims.push_back(config.hidden_width);
        acts.push_back(nn::Activation::Tanh);
    }
    dims.push_back(kBlendshapeCount);
    acts.push_back(nn::Activation::Sigmoid);
    net_ = nn::Mlp(dims, acts, rng);

    stats_ = TrainStats{};
    stats_.training_pairs = inputs.size();
    std::vector<std::size_t> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_indices(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const double scale = 1.0 / static_cast<double>(end - start);
            net_.zero_grad();
            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                nn::Mlp::Trace trace;
                const Vector y = net_.forward(inputs[order[k]], trace);
                Vector dy;
                batch_loss += nn::mse_loss(y, targets[order[k]], dy, scale) * scale;
                net_.backward(dy, trace);
            }
            net_.sgd_step(config.learning_rate);
            epoch_loss += batch_loss * static_cast<double>(end - start);
            ++stats_.total_batches;
        }
        epoch_loss /= static_cast<double>(order.size());
        check_finite_loss(epoch_loss, epoch);
        stats_.epoch_loss.push_back(epoch_loss);
    }
    stats_.final_loss = stats_.epoch_loss.back();
    trained_ = true;
}

std::unique_ptr<ClipRegressorModel> train_clip_regressor(
    std::shared_ptr<EmbeddingBackend> backend, const std::vector<Triad>& dataset,
    const TrainConfig& config, const std::filesystem::path& image_root) {
    auto model = std::make_unique<ClipRegressorModel>(std::move(backend));
    model->train(dataset, config, image_root);
    return model;
}

// ---- AutoencoderClipModel --------------------------------------------------------

AutoencoderClipModel::AutoencoderClipModel(std::shared_ptr<EmbeddingBackend> backend,
                                           std::string name)
    : FEGModel(std::move(name)), backend_(std::move(backend)) {}

BlendshapeVector AutoencoderClipModel::predict(const std::string& text) const {
    require_trained();
    return to_blendshapes(net_->decode(to_vector(backend_->embed_text(text))));
}

nn::AutoencoderNet& AutoencoderClipModel::net() {
    if (!net_) {
        throw Error(ErrorKind::State, "autoencoder_clip has no network yet");
    }
    return *net_;
}

void AutoencoderClipModel::train(const std::vector<Triad>& dataset, const TrainConfig& config,
                                 const std::filesystem::path& image_root) {
    config.validate();
    config_ = config;
    const auto triads = train_split(dataset);
    if (triads.empty()) {
        throw Error(ErrorKind::Data, "train split is empty");
    }

    std::vector<nn::AutoencoderNet::Sample> samples;
    samples.reserve(triads.size());
    for (const Triad* t : triads) {
        nn::AutoencoderNet::Sample s;
        s.blend = to_vector(t->blendshapes.values());
        s.text_emb = to_vector(backend_->embed_text(t->text));
        if (t->image_path) {
            const auto path = image_root.empty() ? std::filesystem::path(*t->image_path)
                                                 : image_root / *t->image_path;
            try {
                s.image_emb = to_vector(backend_->embed_image(read_png(path)));
            } catch (const Error& e) {
                std::cerr << "[autoencoder_clip] skipping image for " << t->id << ": "
                          << e.what() << "\n";
            }
        }
        samples.push_back(std::move(s));
    }

    net_ = std::make_unique<nn::AutoencoderNet>(kBlendshapeCount, config.hidden_width,
                                                backend_->dim(), config.seed,
                                                config.variational);

    SplitMix64 rng(config.seed ^ 0x9e3779b9ULL);
    SplitMix64 eps_rng(config.seed ^ 0x1ce4e5b9ULL);
    stats_ = TrainStats{};
    stats_.training_pairs = samples.size();
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_indices(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::vector<nn::AutoencoderNet::Sample> batch;
            batch.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) {
                batch.push_back(samples[order[k]]);
            }
            net_->zero_grad();
            const auto parts = net_->loss_and_grad(batch, config.lambda_text,
                                                   config.lambda_image, config.prior_weight,
                                                   &eps_rng);
            net_->sgd_step(config.learning_rate);
            epoch_loss += parts.total() * static_cast<double>(end - start);
            ++stats_.total_batches;
        }
        epoch_loss /= static_cast<double>(order.size());
        check_finite_loss(epoch_loss, epoch);
        stats_.epoch_loss.push_back(epoch_loss);
    }
    stats_.final_loss = stats_.epoch_loss.back();
    trained_ = true;
}

std::unique_ptr<AutoencoderClipModel> train_blendshape_autoencoder(
    std::shared_ptr<EmbeddingBackend> backend, const std::vector<Triad>& dataset,
    const TrainConfig& config, const std::filesystem::path& image_root) {
    auto model = std::make_unique<AutoencoderClipModel>(std::move(backend));
    model->train(dataset, config, image_root);
    return model;
}

// ---- checkpoints -------------------------------------------------------------

namespace {

constexpr char kWeightsMagic[8] = {'E', 'M', 'O', '3', 'D', 'W', 'T', 'S'};
constexpr std::uint32_t kCheckpointVersion = 1;

void write_weights(const std::filesystem::path& path, const std::vector<double>& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out.write(kWeightsMagic, 8);
    const std::uint32_t version = kCheckpointVersion;
    const std::uint64_t count = params.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(params.data()),
              static_cast<std::streamsize>(params.size() * sizeof(double)));
    const auto crc = static_cast<std::uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(params.data()),
              static_cast<uInt>(params.size() * sizeof(double))));
    out.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
    if (!out) {
        throw Error(ErrorKind::Io, "short write to " + path.string());
    }
}

std::vector<double> read_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Checkpoint, "cannot open " + path.string());
    }
    char magic[8];
    std::uint32_t version = 0;
    std::uint64_t count = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in || std::memcmp(magic, kWeightsMagic, 8) != 0) {
        throw Error(ErrorKind::Checkpoint, "bad weights magic in " + path.string());
    }
    if (version != kCheckpointVersion) {
        throw Error(ErrorKind::Checkpoint,
                    "unsupported checkpoint version " + std::to_string(version));
    }
    std::vector<double> params(count);
    in.read(reinterpret_cast<char*>(params.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    std::uint32_t stored_crc = 0;
    in.read(reinterpret_cast<char*>(&stored_crc), sizeof(stored_crc));
    if (!in) {
        throw Error(ErrorKind::Checkpoint, "truncated weights file " + path.string());
    }
    const auto crc = static_cast<std::uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(params.data()),
              static_cast<uInt>(params.size() * sizeof(double))));
    if (crc != stored_crc) {
        throw Error(ErrorKind::Checkpoint, "checksum mismatch in " + path.string());
    }
    return params;
}

json config_to_json(const TrainConfig& c) {
    return json{{"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"learning_rate", c.learning_rate},
                {"lambda1", c.lambda1},
                {"lambda2", c.lambda2},
                {"lambda_text", c.lambda_text},
                {"lambda_image", c.lambda_image},
                {"teacher_forcing_ratio", c.teacher_forcing_ratio},
                {"seed", c.seed},
                {"hidden_width", c.hidden_width},
                {"hidden_layers", c.hidden_layers},
                {"pooling", c.pooling == Pooling::mean ? "mean" : "first_token"},
                {"variational", c.variational},
                {"prior_weight", c.prior_weight}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lambda1 = j.value("lambda1", c.lambda1);
    c.lambda2 = j.value("lambda2", c.lambda2);
    c.lambda_text = j.value("lambda_text", c.lambda_text);
    c.lambda_image = j.value("lambda_image", c.lambda_image);
    c.teacher_forcing_ratio = j.value("teacher_forcing_ratio", c.teacher_forcing_ratio);
    c.seed = j.value("seed", c.seed);
    c.hidden_width = j.value("hidden_width", c.hidden_width);
    c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
    c.pooling = j.value("pooling", "mean") == std::string("first_token") ? Pooling::first_token
                                                                         : Pooling::mean;
    c.variational = j.value("variational", c.variational);
    c.prior_weight = j.value("prior_weight", c.prior_weight);
    return c;
}

void write_manifest(const std::filesystem::path& dir, const json& manifest) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write checkpoint manifest in " + dir.string());
    }
    out << manifest.dump(2) << "\n";
}

json read_manifest(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) {
        throw Error(ErrorKind::Checkpoint,
                    "cannot open checkpoint manifest " + (dir / "manifest.json").string());
    }
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Checkpoint, "bad checkpoint manifest: " + std::string(e.what()));
    }
    if (manifest.value("format_version", 0) != 1) {
        throw Error(ErrorKind::Checkpoint, "unsupported checkpoint format version");
    }
    return manifest;
}

} // namespace

void TextRegressorModel::save(const std::filesystem::path& dir) const {
    require_trained();
    json manifest{{"format_version", 1},
                  {"model_type", model_type_name(type())},
                  {"name", name_},
                  {"backend", {{"kind", "lm"},
                               {"name", lm_->name()},
                               {"dim", lm_->dim()},
                               {"pooling", lm_->pooling() == Pooling::mean ? "mean" : "first_token"}}},
                  {"config", config_to_json(config_)}};
    write_manifest(dir, manifest);
    std::vector<double> params(net_.param_count());
    net_.flat_params(params);
    write_weights(dir / "weights.bin", params);
}

void EmotionXlmModel::save(const std::filesystem::path& dir) const {
    require_trained();
    json manifest{{"format_version", 1},
                  {"model_type", model_type_name(type())},
                  {"name", name_},
                  {"backend", {{"kind", "lm"},
                               {"name", lm_->name()},
                               {"dim", lm_->dim()},
                               {"pooling", lm_->pooling() == Pooling::mean ? "mean" : "first_token"}}},
                  {"config", config_to_json(config_)}};
    write_manifest(dir, manifest);
    write_weights(dir / "weights.bin", net_->flat_params());
}

void ClipRegressorModel::save(const std::filesystem::path& dir) const {
    require_trained();
    json manifest{{"format_version", 1},
                  {"model_type", model_type_name(type())},
                  {"name", name_},
                  {"backend", {{"kind", "joint"}, {"name", backend_->name()}, {"dim", backend_->dim()}}},
                  {"config", config_to_json(config_)}};
    write_manifest(dir, manifest);
    std::vector<double> params(net_.param_count());
    net_.flat_params(params);
    write_weights(dir / "weights.bin", params);
}

void AutoencoderClipModel::save(const std::filesystem::path& dir) const {
    require_trained();
    json manifest{{"format_version", 1},
                  {"model_type", model_type_name(type())},
                  {"name", name_},
                  {"backend", {{"kind", "joint"}, {"name", backend_->name()}, {"dim", backend_->dim()}}},
                  {"config", config_to_json(config_)}};
    write_manifest(dir, manifest);
    write_weights(dir / "weights.bin", net_->flat_params());
}

std::unique_ptr<FEGModel> load_model(const std::filesystem::path& dir,
                                     std::shared_ptr<EmbeddingBackend> joint_backend) {
    const json manifest = read_manifest(dir);
    const std::string type_name = manifest.value("model_type", "");
    const auto type = model_type_from_name(type_name);
    if (!type) {
        throw Error(ErrorKind::Checkpoint, "unknown model type \"" + type_name + "\"");
    }
    const std::string name = manifest.value("name", type_name);
    const TrainConfig config = config_from_json(manifest.at("config"));
    const auto& backend_info = manifest.at("backend");
    const auto params = read_weights(dir / "weights.bin");

    auto apply_params = [&](auto& net, const char* what) {
        if (net.param_count() != params.size()) {
            throw Error(ErrorKind::Checkpoint,
                        std::string(what) + ": weight count mismatch (file " +
                            std::to_string(params.size()) + ", model " +
                            std::to_string(net.param_count()) + ")");
        }
        net.set_flat_params(params);
    };

    switch (*type) {
        case ModelType::bert_mlp:
        case ModelType::xlm_mlp: {
            auto lm = std::make_shared<LmBackend>(
                backend_info.at("name").get<std::string>(), backend_info.at("dim").get<int>(),
                backend_info.value("pooling", "mean") == std::string("first_token")
                    ? Pooling::first_token
                    : Pooling::mean);
            auto model = std::make_unique<TextRegressorModel>(name, lm);
            SplitMix64 rng(config.seed);
            std::vector<int> dims{lm->dim()};
            std::vector<nn::Activation> acts;
            for (int i = 0; i < config.hidden_layers; ++i) {
                dims.push_back(config.hidden_width);
                acts.push_back(nn::Activation::Tanh);
            }
            dims.push_back(kBlendshapeCount);
            acts.push_back(nn::Activation::Sigmoid);
            model->net_ = nn::Mlp(dims, acts, rng);
            apply_params(model->net_, "text regressor");
            model->config_ = config;
            model->trained_ = true;
            return model;
        }
        case ModelType::emotion_xlm: {
            auto lm = std::make_shared<LmBackend>(
                backend_info.at("name").get<std::string>(), backend_info.at("dim").get<int>(),
                backend_info.value("pooling", "mean") == std::string("first_token")
                    ? Pooling::first_token
                    : Pooling::mean);
            auto model = std::make_unique<EmotionXlmModel>(lm, name);
            model->net_ = std::make_unique<nn::EmotionXlmNet>(
                lm->dim(), config.hidden_width, config.hidden_layers, kEmotionCount,
                kBlendshapeCount, config.seed);
            apply_params(*model->net_, "emotion_xlm");
            model->config_ = config;
            model->trained_ = true;
            return model;
        }
        case ModelType::clip_mlp:
        case ModelType::autoencoder_clip: {
            if (!joint_backend) {
                throw Error(ErrorKind::Config,
                            "loading " + type_name + " requires a joint embedding backend");
            }
            const int saved_dim = backend_info.at("dim").get<int>();
            if (joint_backend->dim() != saved_dim) {
                throw Error(ErrorKind::Config,
                            "backend dim " + std::to_string(joint_backend->dim()) +
                                " does not match checkpoint dim " + std::to_string(saved_dim));
            }
            const std::string saved_name = backend_info.at("name").get<std::string>();
            if (joint_backend->name() != saved_name) {
                std::cerr << "[load_model] warning: checkpoint was trained with backend \""
                          << saved_name << "\", loading with \"" << joint_backend->name()
                          << "\"\n";
            }
            if (*type == ModelType::clip_mlp) {
                auto model = std::make_unique<ClipRegressorModel>(joint_backend, name);
                SplitMix64 rng(config.seed);
                std::vector<int> dims{joint_backend->dim()};
                std::vector<nn::Activation> acts;
                for (int i = 0; i < config.hidden_layers; ++i) {
                    dims.push_back(config.hidden_width);
                    acts.push_back(nn::Activation::Tanh);
                }
                dims.push_back(kBlendshapeCount);
                acts.push_back(nn::Activation::Sigmoid);
                model->net_ = nn::Mlp(dims, acts, rng);
                apply_params(model->net_, "clip regressor");
                model->config_ = config;
                model->trained_ = true;
                return model;
            }
            auto model = std::make_unique<AutoencoderClipModel>(joint_backend, name);
            model->net_ = std::make_unique<nn::AutoencoderNet>(
                kBlendshapeCount, config.hidden_width, joint_backend->dim(), config.seed,
                config.variational);
            apply_params(*model->net_, "autoencoder");
            model->config_ = config;
            model->trained_ = true;
            return model;
        }
    }
    throw Error(ErrorKind::Checkpoint, "unreachable model type");
}

} // namespace emo3d
