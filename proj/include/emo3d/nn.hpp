#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "emo3d/hash.hpp"

namespace emo3d::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Activation { Identity, Tanh, Sigmoid };

struct DenseLayer {
    Matrix W;
    Vector b;
    Activation act = Activation::Identity;

    Matrix gW;
    Vector gb;
};

// Fully connected net with manual backprop. Training math is double
// precision throughout; runs single-threaded so results depend only on the
// seed.
class Mlp {
public:
    Mlp() = default;
    Mlp(const std::vector<int>& dims, const std::vector<Activation>& acts, SplitMix64& rng);

    int input_dim() const;
    int output_dim() const;

    Vector forward(const Vector& x) const;

    // Keeps post-activations for the backward pass; xs[0] is the input,
    // xs[k+1] the output of layer k.
    struct Trace {
        std::vector<Vector> xs;
    };
    Vector forward(const Vector& x, Trace& trace) const;

    // dy is dL/d(output); accumulates parameter gradients and returns
    // dL/d(input).
    Vector backward(const Vector& dy, const Trace& trace);

    void zero_grad();
    void sgd_step(double lr);

    std::size_t param_count() const;
    void flat_params(std::span<double> out) const;
    void set_flat_params(std::span<const double> in);
    void flat_grads(std::span<double> out) const;

    std::vector<DenseLayer> layers;
};

// Per-sample mean-squared error, (1/dim) * sum (pred - target)^2, and its
// gradient w.r.t. pred scaled by `scale` (callers fold in the batch mean).
double mse_loss(const Vector& pred, const Vector& target, Vector& dpred, double scale);
double mse_value(const Vector& pred, const Vector& target);

// 1 - cos(ref, z). Accumulates weight * d/dz into dz. A zero-norm z gets
// loss 1 and zero gradient.
double cosine_alignment_loss(const Vector& ref, const Vector& z, Vector& dz, double weight);

// ---- Eq.1 net: emotion extractor + blendshape regressor ----------------

class EmotionXlmNet {
public:
    struct Sample {
        Vector text_emb;                 // text_dim
        Vector target;                   // out_dim blendshapes
        std::optional<Vector> emotion;   // emotion_dim label
    };

    EmotionXlmNet(int text_dim, int hidden_width, int hidden_layers, int emotion_dim,
                  int out_dim, std::uint64_t seed);

    // Combined loss lambda1 * MSE(blendshapes) + lambda2 * MSE(v, label),
    // averaged over the batch. use_ground_truth selects the teacher-forcing
    // branch for the whole batch. The emotion loss always trains the
    // extractor. Throws Data when a sample lacks an emotion label.
    double loss_and_grad(std::span<const Sample> batch, double lambda1, double lambda2,
                         bool use_ground_truth);

    Vector predict(const Vector& text_emb) const;
    Vector extract_emotion(const Vector& text_emb) const;

    int text_dim() const { return text_dim_; }
    int emotion_dim() const { return emotion_dim_; }
    int regression_input_dim() const { return text_dim_ + 2 * emotion_dim_; }

    void zero_grad();
    void sgd_step(double lr);

    std::size_t param_count() const;
    std::vector<double> flat_params() const;
    void set_flat_params(std::span<const double> in);
    std::vector<double> flat_grads() const;

    Mlp extractor;
    Mlp regressor;

private:
    int text_dim_;
    int emotion_dim_;
};

// ---- Eq.2-4 net: blendshape autoencoder aligned to a joint space --------

class AutoencoderNet {
public:
    struct Sample {
        Vector blend;                    // in_dim
        Vector text_emb;                 // latent_dim
        std::optional<Vector> image_emb; // latent_dim, image term skipped if absent
    };

    struct LossParts {
        double recon = 0.0;
        double text = 0.0;
        double image = 0.0;
        double prior = 0.0;
        double total() const { return recon + text + image + prior; }
    };

    AutoencoderNet(int in_dim, int hidden_width, int latent_dim, std::uint64_t seed,
                   bool variational = false);

    // Batch-mean loss MSE(decode(z), blend) + lt*(1-cos(text,z)) +
    // li*(1-cos(image,z)) [+ prior_weight * KL to the unit gaussian in
    // variational mode]. eps_rng drives the reparameterization draw.
    LossParts loss_and_grad(std::span<const Sample> batch, double lambda_text,
                            double lambda_image, double prior_weight, SplitMix64* eps_rng);

    Vector encode(const Vector& blend) const;  // latent mean in variational mode
    Vector decode(const Vector& z) const;
    Vector reconstruct(const Vector& blend) const;

    int latent_dim() const { return latent_dim_; }
    bool variational() const { return variational_; }

    void zero_grad();
    void sgd_step(double lr);

    std::size_t param_count() const;
    std::vector<double> flat_params() const;
    void set_flat_params(std::span<const double> in);
    std::vector<double> flat_grads() const;

    Mlp encoder;
    Mlp decoder;

private:
    int in_dim_;
    int latent_dim_;
    bool variational_;
};

} // namespace emo3d::nn
