#include "emo3d/nn.hpp"

#include <cmath>

#include "emo3d/core.hpp"
#include "emo3d/error.hpp"

namespace emo3d::nn {

namespace {

Vector apply_act(Activation act, const Vector& pre) {
    switch (act) {
        case Activation::Identity:
            return pre;
        case Activation::Tanh:
            return pre.array().tanh().matrix();
        case Activation::Sigmoid:
            return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
    }
    return pre;
}

// act'(pre) expressed through the post-activation value
Vector act_grad(Activation act, const Vector& post, const Vector& dy) {
    switch (act) {
        case Activation::Identity:
            return dy;
        case Activation::Tanh:
            return (dy.array() * (1.0 - post.array().square())).matrix();
        case Activation::Sigmoid:
            return (dy.array() * post.array() * (1.0 - post.array())).matrix();
    }
    return dy;
}

} // namespace

Mlp::Mlp(const std::vector<int>& dims, const std::vector<Activation>& acts, SplitMix64& rng) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1) {
        throw Error(ErrorKind::Config, "Mlp: dims/activations mismatch");
    }
    layers.resize(dims.size() - 1);
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const int fan_in = dims[k];
        const int fan_out = dims[k + 1];
        const double scale = std::sqrt(2.0 / (fan_in + fan_out));
        auto& layer = layers[k];
        layer.W.resize(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r) {
            for (int c = 0; c < fan_in; ++c) {
                layer.W(r, c) = scale * rng.next_gaussian();
            }
        }
        layer.b = Vector::Zero(fan_out);
        layer.act = acts[k];
        layer.gW = Matrix::Zero(fan_out, fan_in);
        layer.gb = Vector::Zero(fan_out);
    }
}

int Mlp::input_dim() const {
    return layers.empty() ? 0 : static_cast<int>(layers.front().W.cols());
}

int Mlp::output_dim() const {
    return layers.empty() ? 0 : static_cast<int>(layers.back().W.rows());
}

Vector Mlp::forward(const Vector& x) const {
    Vector h = x;
    for (const auto& layer : layers) {
        h = apply_act(layer.act, layer.W * h + layer.b);
    }
    return h;
}

Vector Mlp::forward(const Vector& x, Trace& trace) const {
    trace.xs.clear();
    trace.xs.reserve(layers.size() + 1);
    trace.xs.push_back(x);
    for (const auto& layer : layers) {
        trace.xs.push_back(apply_act(layer.act, layer.W * trace.xs.back() + layer.b));
    }
    return trace.xs.back();
}

Vector Mlp::backward(const Vector& dy, const Trace& trace) {
    Vector grad = dy;
    for (std::size_t k = layers.size(); k-- > 0;) {
        auto& layer = layers[k];
        const Vector dpre = act_grad(layer.act, trace.xs[k + 1], grad);
        layer.gW.noalias() += dpre * trace.xs[k].transpose();
        layer.gb += dpre;
        grad.noalias() = layer.W.transpose() * dpre;
    }
    return grad;
}

void Mlp::zero_grad() {
    for (auto& layer : layers) {
        layer.gW.setZero();
        layer.gb.setZero();
    }
}

void Mlp::sgd_step(double lr) {
    for (auto& layer : layers) {
        layer.W -= lr * layer.gW;
        layer.b -= lr * layer.gb;
    }
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) {
        n += static_cast<std::size_t>(layer.W.size()) + static_cast<std::size_t>(layer.b.size());
    }
    return n;
}

void Mlp::flat_params(std::span<double> out) const {
    std::size_t pos = 0;
    for (const auto& layer : layers) {
        for (int r = 0; r < layer.W.rows(); ++r) {
            for (int c = 0; c < layer.W.cols(); ++c) {
                out[pos++] = layer.W(r, c);
            }
        }
        for (int r = 0; r < layer.b.size(); ++r) {
            out[pos++] = layer.b(r);
        }
    }
}

void Mlp::set_flat_params(std::span<const double> in) {
    std::size_t pos = 0;
    for (auto& layer : layers) {
        for (int r = 0; r < layer.W.rows(); ++r) {
            for (int c = 0; c < layer.W.cols(); ++c) {
                layer.W(r, c) = in[pos++];
            }
        }
        for (int r = 0; r < layer.b.size(); ++r) {
            layer.b(r) = in[pos++];
        }
    }
}

void Mlp::flat_grads(std::span<double> out) const {
    std::size_t pos = 0;
    for (const auto& layer : layers) {
        for (int r = 0; r < layer.gW.rows(); ++r) {
            for (int c = 0; c < layer.gW.cols(); ++c) {
                out[pos++] = layer.gW(r, c);
            }
        }
        for (int r = 0; r < layer.gb.size(); ++r) {
            out[pos++] = layer.gb(r);
        }
    }
}

double mse_loss(const Vector& pred, const Vector& target, Vector& dpred, double scale) {
    const Vector diff = pred - target;
    dpred = (2.0 * scale / static_cast<double>(pred.size())) * diff;
    return diff.squaredNorm() / static_cast<double>(pred.size());
}

double mse_value(const Vector& pred, const Vector& target) {
    return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

double cosine_alignment_loss(const Vector& ref, const Vector& z, Vector& dz, double weight) {
    const double nz = z.norm();
    const double nr = ref.norm();
    if (nz < 1e-300 || nr < 1e-300) {
        return 1.0; // undefined direction; subgradient 0
    }
    const double dot = ref.dot(z);
    const double cosv = dot / (nr * nz);
    // d(1-cos)/dz = -(ref/(|ref||z|) - cos * z/|z|^2)
    dz += weight * (cosv / (nz * nz) * z - ref / (nr * nz));
    return 1.0 - cosv;
}

// ---- EmotionXlmNet --------------------------------------------------------

EmotionXlmNet::EmotionXlmNet(int text_dim, int hidden_width, int hidden_layers, int emotion_dim,
                             int out_dim, std::uint64_t seed)
    : text_dim_(text_dim), emotion_dim_(emotion_dim) {
    SplitMix64 rng(seed);
    {
        std::vector<int> dims{text_dim, hidden_width, emotion_dim};
        std::vector<Activation> acts{Activation::Tanh, Activation::Sigmoid};
        extractor = Mlp(dims, acts, rng);
    }
    {
        std::vector<int> dims{text_dim + 2 * emotion_dim};
        std::vector<Activation> acts;
        for (int i = 0; i < hidden_layers; ++i) {
            dims.push_back(hidden_width);
            acts.push_back(Activation::Tanh);
        }
        dims.push_back(out_dim);
        acts.push_back(Activation::Sigmoid);
        regressor = Mlp(dims, acts, rng);
    }
}

namespace {

Vector one_hot_vector(const Vector& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v(i) > v(best)) {
            best = i;
        }
    }
    Vector o = Vector::Zero(v.size());
    o(best) = 1.0;
    return o;
}

} // namespace

double EmotionXlmNet::loss_and_grad(std::span<const Sample> batch, double lambda1, double lambda2,
                                    bool use_ground_truth) {
    if (batch.empty()) {
        throw Error(ErrorKind::Data, "EmotionXlmNet: empty batch");
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const auto& sample : batch) {
        if (!sample.emotion) {
            throw Error(ErrorKind::Data, "EmotionXlmNet: sample lacks an emotion label");
        }
        Mlp::Trace te, tr;
        const Vector v = extractor.forward(sample.text_emb, te);
        const Vector o = one_hot_vector(v);

        Vector u(regression_input_dim());
        if (use_ground_truth) {
            u << sample.text_emb, *sample.emotion, one_hot_vector(*sample.emotion);
        } else {
            u << sample.text_emb, v, o;
        }
        const Vector y = regressor.forward(u, tr);

        Vector dy;
        const double blend_mse = mse_loss(y, sample.target, dy, lambda1 * inv_b);
        const Vector du = regressor.backward(dy, tr);

        Vector dv;
        const double emotion_mse = mse_loss(v, *sample.emotion, dv, lambda2 * inv_b);
        if (!use_ground_truth) {
            // regressor gradient flows back into the extractor through the
            // v slice; the one-hot slice is piecewise constant
            dv += du.segment(text_dim_, emotion_dim_);
        }
        extractor.backward(dv, te);

        loss += (lambda1 * blend_mse + lambda2 * emotion_mse) * inv_b;
    }
    return loss;
}

Vector EmotionXlmNet::predict(const Vector& text_emb) const {
    const Vector v = extractor.forward(text_emb);
    Vector u(regression_input_dim());
    u << text_emb, v, one_hot_vector(v);
    return regressor.forward(u);
}

Vector EmotionXlmNet::extract_emotion(const Vector& text_emb) const {
    return extractor.forward(text_emb);
}

void EmotionXlmNet::zero_grad() {
    extractor.zero_grad();
    regressor.zero_grad();
}

void EmotionXlmNet::sgd_step(double lr) {
    extractor.sgd_step(lr);
    regressor.sgd_step(lr);
}

std::size_t EmotionXlmNet::param_count() const {
    return extractor.param_count() + regressor.param_count();
}

std::vector<double> EmotionXlmNet::flat_params() const {
    std::vector<double> out(param_count());
    extractor.flat_params(std::span(out).subspan(0, extractor.param_count()));
    regressor.flat_params(std::span(out).subspan(extractor.param_count()));
    return out;
}

void EmotionXlmNet::set_flat_params(std::span<const double> in) {
    extractor.set_flat_params(in.subspan(0, extractor.param_count()));
    regressor.set_flat_params(in.subspan(extractor.param_count()));
}

std::vector<double> EmotionXlmNet::flat_grads() const {
    std::vector<double> out(param_count());
    extractor.flat_grads(std::span(out).subspan(0, extractor.param_count()));
    regressor.flat_grads(std::span(out).subspan(extractor.param_count()));
    return out;
}

// ---- AutoencoderNet --------------------------------------------------------

AutoencoderNet::AutoencoderNet(int in_dim, int hidden_width, int latent_dim, std::uint64_t seed,
                               bool variational)
    : in_dim_(in_dim), latent_dim_(latent_dim), variational_(variational) {
    SplitMix64 rng(seed);
    const int enc_out = variational ? 2 * latent_dim : latent_dim;
    {
        std::vector<int> dims{in_dim, hidden_width, enc_out};
        std::vector<Activation> acts{Activation::Tanh, Activation::Identity};
        encoder = Mlp(dims, acts, rng);
    }
    {
        std::vector<int> dims{latent_dim, hidden_width, in_dim};
        std::vector<Activation> acts{Activation::Tanh, Activation::Sigmoid};
        decoder = Mlp(dims, acts, rng);
    }
}

AutoencoderNet::LossParts AutoencoderNet::loss_and_grad(std::span<const Sample> batch,
                                                        double lambda_text, double lambda_image,
                                                        double prior_weight,
                                                        SplitMix64* eps_rng) {
    if (batch.empty()) {
        throw Error(ErrorKind::Data, "AutoencoderNet: empty batch");
    }
    if (variational_ && eps_rng == nullptr) {
        throw Error(ErrorKind::Config, "AutoencoderNet: variational mode needs an eps source");
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    LossParts parts;
    for (const auto& sample : batch) {
        Mlp::Trace te, td;
        const Vector enc_out = encoder.forward(sample.blend, te);

        Vector z, eps, sigma;
        if (variational_) {
            const Vector mu = enc_out.head(latent_dim_);
            const Vector logvar = enc_out.tail(latent_dim_);
            sigma = (0.5 * logvar.array()).exp().matrix();
            eps = Vector(latent_dim_);
            for (int i = 0; i < latent_dim_; ++i) {
                eps(i) = eps_rng->next_gaussian();
            }
            z = mu + sigma.cwiseProduct(eps);
        } else {
            z = enc_out;
        }

        const Vector r = decoder.forward(z, td);

        Vector dr;
        const double recon = mse_loss(r, sample.blend, dr, inv_b);
        Vector dz = decoder.backward(dr, td);

        Vector dz_align = Vector::Zero(latent_dim_);
        const double text_term =
            cosine_alignment_loss(sample.text_emb, z, dz_align, lambda_text * inv_b);
        double image_term = 0.0;
        if (sample.image_emb) {
            image_term =
                cosine_alignment_loss(*sample.image_emb, z, dz_align, lambda_image * inv_b);
        }
        dz += dz_align;

        parts.recon += recon * inv_b;
        parts.text += lambda_text * text_term * inv_b;
        parts.image += lambda_image * image_term * inv_b;

        if (variational_) {
            const Vector mu = enc_out.head(latent_dim_);
            const Vector logvar = enc_out.tail(latent_dim_);
            // KL(N(mu, sigma^2) || N(0, 1)) = 0.5 * sum(mu^2 + sigma^2 - logvar - 1)
            const double kl =
                0.5 * (mu.squaredNorm() + sigma.array().square().sum() - logvar.sum() -
                       latent_dim_);
            parts.prior += prior_weight * kl * inv_b;

            Vector denc(2 * latent_dim_);
            denc.head(latent_dim_) = dz + (prior_weight * inv_b) * mu;
            denc.tail(latent_dim_) =
                0.5 * dz.cwiseProduct(eps).cwiseProduct(sigma) +
                (prior_weight * inv_b * 0.5) * (sigma.array().square() - 1.0).matrix();
            encoder.backward(denc, te);
        } else {
            encoder.backward(dz, te);
        }
    }
    return parts;
}

Vector AutoencoderNet::encode(const Vector& blend) const {
    const Vector out = encoder.forward(blend);
    return variational_ ? out.head(latent_dim_).eval() : out;
}

Vector AutoencoderNet::decode(const Vector& z) const {
    return decoder.forward(z);
}

Vector AutoencoderNet::reconstruct(const Vector& blend) const {
    return decode(encode(blend));
}

void AutoencoderNet::zero_grad() {
    encoder.zero_grad();
    decoder.zero_grad();
}

void AutoencoderNet::sgd_step(double lr) {
    encoder.sgd_step(lr);
    decoder.sgd_step(lr);
}

std::size_t AutoencoderNet::param_count() const {
    return encoder.param_count() + decoder.param_count();
}

std::vector<double> AutoencoderNet::flat_params() const {
    std::vector<double> out(param_count());
    encoder.flat_params(std::span(out).subspan(0, encoder.param_count()));
    decoder.flat_params(std::span(out).subspan(encoder.param_count()));
    return out;
}

void AutoencoderNet::set_flat_params(std::span<const double> in) {
    encoder.set_flat_params(in.subspan(0, encoder.param_count()));
    decoder.set_flat_params(in.subspan(encoder.param_count()));
}

std::vector<double> AutoencoderNet::flat_grads() const {
    std::vector<double> out(param_count());
    encoder.flat_grads(std::span(out).subspan(0, encoder.param_count()));
    decoder.flat_grads(std::span(out).subspan(encoder.param_count()));
    return out;
}

} // namespace emo3d::nn
