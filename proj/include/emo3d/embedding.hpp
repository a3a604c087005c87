#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "emo3d/image.hpp"

namespace emo3d {

// Joint text/image encoder used by the CLIP-style baselines and the metric's
// retrieval step. Implementations must be deterministic (same input, same
// vector) and return L2-normalized vectors of length dim().
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;

    virtual int dim() const = 0;
    virtual const std::string& name() const = 0;

    virtual std::vector<float> embed_text(const std::string& text) const = 0;
    virtual std::vector<float> embed_image(const Image& image) const = 0;

    // Safe for concurrent read-only inference calls unless overridden.
    virtual bool thread_safe() const { return true; }
};

// Hash-seeded pseudo-random unit vectors; pure function of the input bytes,
// so every downstream test is reproducible without model weights. The
// planted-pair table maps an image content hash to a prompt text whose
// embedding the image should be given.
class MockBackend : public EmbeddingBackend {
public:
    explicit MockBackend(int dim = 64, std::string name = "mock");

    int dim() const override { return dim_; }
    const std::string& name() const override { return name_; }

    std::vector<float> embed_text(const std::string& text) const override;
    std::vector<float> embed_image(const Image& image) const override;

    // Planted-pair mode: embed_image(image) == embed_text(text) afterwards.
    void plant_pair(const Image& image, const std::string& text);
    void plant_pair_hash(const std::string& image_hash, const std::string& text);
    std::size_t planted_count() const { return planted_.size(); }

private:
    int dim_;
    std::string name_;
    std::unordered_map<std::string, std::string> planted_; // image hash -> text
};

// Joint linear-projection encoder loaded from a local weights file. Text is
// featurized with hashed character trigrams, images with a fixed grid of
// box-averaged RGB values; both are projected to dim() and L2-normalized.
// The file carries the dimensionality, so dim() is read at runtime.
class LinearFileBackend : public EmbeddingBackend {
public:
    explicit LinearFileBackend(const std::filesystem::path& weights_file);

    int dim() const override { return dim_; }
    const std::string& name() const override { return name_; }

    std::vector<float> embed_text(const std::string& text) const override;
    std::vector<float> embed_image(const Image& image) const override;

    int text_feature_count() const { return text_features_; }
    int image_grid() const { return image_grid_; }

    // Writes a seeded random weights file; used to materialize a backend
    // when no trained projection is at hand.
    static void write_random_weights(const std::filesystem::path& path, int dim,
                                     int text_features, int image_grid, std::uint64_t seed);

private:
    int dim_ = 0;
    int text_features_ = 0;
    int image_grid_ = 0;
    std::string name_;
    std::vector<float> text_proj_;  // dim x text_features, row-major
    std::vector<float> image_proj_; // dim x (grid*grid*3), row-major
};

// Content-addressed vector cache: <dir>/<backend>/<modality>/<sha256>.vec,
// little-endian float32. EMO3D_CACHE_DIR overrides the location when the
// constructor is given an empty path. Writes are serialized; reads are
// lock-free once the file exists.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }

    std::optional<std::vector<float>> load(const std::string& backend, const std::string& modality,
                                           const std::string& content_hash) const;
    void store(const std::string& backend, const std::string& modality,
               const std::string& content_hash, const std::vector<float>& vec);

private:
    std::filesystem::path dir_;
    mutable std::mutex write_mutex_;
};

// Backend decorator that memoizes through an EmbeddingCache.
class CachedBackend : public EmbeddingBackend {
public:
    CachedBackend(std::shared_ptr<EmbeddingBackend> inner, std::shared_ptr<EmbeddingCache> cache);

    int dim() const override { return inner_->dim(); }
    const std::string& name() const override { return inner_->name(); }
    bool thread_safe() const override { return inner_->thread_safe(); }

    std::vector<float> embed_text(const std::string& text) const override;
    std::vector<float> embed_image(const Image& image) const override;

private:
    std::shared_ptr<EmbeddingBackend> inner_;
    std::shared_ptr<EmbeddingCache> cache_;
};

// Batch helpers; element-wise equal to individual embed calls, order
// preserved. Parallel when the backend allows it; each item writes its own
// output slot. Throws EmptyBatch on an empty list and rewraps per-item
// failures with the item index.
std::vector<std::vector<float>> embed_text_batch(const EmbeddingBackend& backend,
                                                 const std::vector<std::string>& texts);
std::vector<std::vector<float>> embed_image_batch(const EmbeddingBackend& backend,
                                                  const std::vector<Image>& images);

// Serial references for the equivalence tests and the benchmark.
std::vector<std::vector<float>> embed_text_batch_serial(const EmbeddingBackend& backend,
                                                        const std::vector<std::string>& texts);

} // namespace emo3d
