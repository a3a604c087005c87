#include "emo3d/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "emo3d/error.hpp"
#include "emo3d/hash.hpp"
#include "emo3d/parallel.hpp"

namespace emo3d {

namespace {

constexpr std::uint64_t kTextSalt = 0x74657874ULL;  // "text"
constexpr std::uint64_t kImageSalt = 0x696d6167ULL; // "imag"

void l2_normalize(std::vector<float>& v) {
    double norm2 = 0.0;
    for (float x : v) {
        norm2 += static_cast<double>(x) * x;
    }
    if (norm2 <= 0.0) {
        // avoid a zero vector; deterministic fallback direction
        if (!v.empty()) {
            v[0] = 1.0f;
        }
        return;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) {
        x = static_cast<float>(static_cast<double>(x) * inv);
    }
}

} // namespace

// ---- MockBackend -------------------------------------------------------

MockBackend::MockBackend(int dim, std::string name) : dim_(dim), name_(std::move(name)) {
    if (dim <= 0) {
        throw Error(ErrorKind::Config, "MockBackend: dim must be positive");
    }
}

std::vector<float> MockBackend::embed_text(const std::string& text) const {
    if (text.empty()) {
        throw Error(ErrorKind::Backend, "embed_text: empty text");
    }
    return hash_unit_vector(text, dim_, kTextSalt ^ fnv1a64(name_));
}

std::vector<float> MockBackend::embed_image(const Image& image) const {
    if (image.empty()) {
        throw Error(ErrorKind::Image, "embed_image: empty image");
    }
    const std::string hash = image_content_hash(image);
    if (auto it = planted_.find(hash); it != planted_.end()) {
        return embed_text(it->second);
    }
    return hash_unit_vector(hash, dim_, kImageSalt ^ fnv1a64(name_));
}

void MockBackend::plant_pair(const Image& image, const std::string& text) {
    planted_[image_content_hash(image)] = text;
}

void MockBackend::plant_pair_hash(const std::string& image_hash, const std::string& text) {
    planted_[image_hash] = text;
}

// ---- LinearFileBackend --------------------------------------------------

namespace {

constexpr char kLinearMagic[8] = {'E', 'M', 'O', '3', 'D', 'L', 'I', 'N'};

struct LinearHeader {
    char magic[8];
    std::uint32_t version;
    std::uint32_t dim;
    std::uint32_t text_features;
    std::uint32_t image_grid;
};

} // namespace

LinearFileBackend::LinearFileBackend(const std::filesystem::path& weights_file) {
    std::ifstream in(weights_file, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Backend, "cannot open weights file " + weights_file.string());
    }
    LinearHeader header{};
    in.read(reinterpret_cast<char*>(&header), sizeof(header));
    if (!in || std::memcmp(header.magic, kLinearMagic, 8) != 0) {
        throw Error(ErrorKind::Backend, "bad weights file magic in " + weights_file.string());
    }
    if (header.version != 1) {
        throw Error(ErrorKind::Backend,
                    "unsupported weights version " + std::to_string(header.version));
    }
    dim_ = static_cast<int>(header.dim);
    text_features_ = static_cast<int>(header.text_features);
    image_grid_ = static_cast<int>(header.image_grid);
    if (dim_ <= 0 || text_features_ <= 0 || image_grid_ <= 0) {
        throw Error(ErrorKind::Backend, "degenerate dimensions in " + weights_file.string());
    }
    text_proj_.resize(static_cast<std::size_t>(dim_) * text_features_);
    image_proj_.resize(static_cast<std::size_t>(dim_) * image_grid_ * image_grid_ * 3);
    in.read(reinterpret_cast<char*>(text_proj_.data()),
            static_cast<std::streamsize>(text_proj_.size() * sizeof(float)));
    in.read(reinterpret_cast<char*>(image_proj_.data()),
            static_cast<std::streamsize>(image_proj_.size() * sizeof(float)));
    if (!in) {
        throw Error(ErrorKind::Backend, "truncated weights file " + weights_file.string());
    }
    name_ = "linear:" + weights_file.filename().string();
}

std::vector<float> LinearFileBackend::embed_text(const std::string& text) const {
    if (text.empty()) {
        throw Error(ErrorKind::Backend, "embed_text: empty text");
    }
    // hashed character trigram counts
    std::vector<float> features(static_cast<std::size_t>(text_features_), 0.0f);
    const std::string padded = "^" + text + "$";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
        const std::uint64_t h = fnv1a64(std::string_view(padded).substr(i, 3));
        features[h % static_cast<std::uint64_t>(text_features_)] += 1.0f;
    }
    std::vector<float> out(static_cast<std::size_t>(dim_), 0.0f);
    for (int d = 0; d < dim_; ++d) {
        double acc = 0.0;
        const float* row = text_proj_.data() + static_cast<std::size_t>(d) * text_features_;
        for (int f = 0; f < text_features_; ++f) {
            if (features[static_cast<std::size_t>(f)] != 0.0f) {
                acc += static_cast<double>(row[f]) * features[static_cast<std::size_t>(f)];
            }
        }
        out[static_cast<std::size_t>(d)] = static_cast<float>(acc);
    }
    l2_normalize(out);
    return out;
}

std::vector<float> LinearFileBackend::embed_image(const Image& image) const {
    if (image.empty()) {
        throw Error(ErrorKind::Image, "embed_image: empty image");
    }
    const int g = image_grid_;
    std::vector<double> cell(static_cast<std::size_t>(g) * g * 3, 0.0);
    std::vector<std::uint32_t> count(static_cast<std::size_t>(g) * g, 0);
    for (int y = 0; y < image.height; ++y) {
        const int gy = std::min(g - 1, y * g / image.height);
        for (int x = 0; x < image.width; ++x) {
            const int gx = std::min(g - 1, x * g / image.width);
            const std::size_t c = static_cast<std::size_t>(gy) * g + gx;
            for (int ch = 0; ch < 3; ++ch) {
                const int src = image.channels == 1 ? 0 : std::min(ch, image.channels - 1);
                cell[c * 3 + ch] += image.at(x, y, src) / 255.0;
            }
            ++count[c];
        }
    }
    std::vector<float> features(cell.size(), 0.0f);
    for (std::size_t c = 0; c < count.size(); ++c) {
        const double n = count[c] > 0 ? static_cast<double>(count[c]) : 1.0;
        for (int ch = 0; ch < 3; ++ch) {
            features[c * 3 + ch] = static_cast<float>(cell[c * 3 + ch] / n);
        }
    }
    std::vector<float> out(static_cast<std::size_t>(dim_), 0.0f);
    const int fcount = g * g * 3;
    for (int d = 0; d < dim_; ++d) {
        double acc = 0.0;
        const float* row = image_proj_.data() + static_cast<std::size_t>(d) * fcount;
        for (int f = 0; f < fcount; ++f) {
            acc += static_cast<double>(row[f]) * features[static_cast<std::size_t>(f)];
        }
        out[static_cast<std::size_t>(d)] = static_cast<float>(acc);
    }
    l2_normalize(out);
    return out;
}

void LinearFileBackend::write_random_weights(const std::filesystem::path& path, int dim,
                                             int text_features, int image_grid,
                                             std::uint64_t seed) {
    LinearHeader header{};
    std::memcpy(header.magic, kLinearMagic, 8);
    header.version = 1;
    header.dim = static_cast<std::uint32_t>(dim);
    header.text_features = static_cast<std::uint32_t>(text_features);
    header.image_grid = static_cast<std::uint32_t>(image_grid);

    SplitMix64 rng(seed);
    const std::size_t text_n = static_cast<std::size_t>(dim) * text_features;
    const std::size_t image_n = static_cast<std::size_t>(dim) * image_grid * image_grid * 3;
    std::vector<float> weights(text_n + image_n);
    for (auto& w : weights) {
        w = static_cast<float>(rng.next_gaussian() * 0.05);
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write weights file " + path.string());
    }
    out.write(reinterpret_cast<const char*>(&header), sizeof(header));
    out.write(reinterpret_cast<const char*>(weights.data()),
              static_cast<std::streamsize>(weights.size() * sizeof(float)));
    if (!out) {
        throw Error(ErrorKind::Io, "short write to " + path.string());
    }
}

// ---- EmbeddingCache ------------------------------------------------------

EmbeddingCache::EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (dir_.empty()) {
        if (const char* env = std::getenv("EMO3D_CACHE_DIR")) {
            dir_ = env;
        } else {
            dir_ = std::filesystem::temp_directory_path() / "emo3d-cache";
        }
    }
}

std::optional<std::vector<float>> EmbeddingCache::load(const std::string& backend,
                                                       const std::string& modality,
                                                       const std::string& content_hash) const {
    const auto path = dir_ / backend / modality / (content_hash + ".vec");
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    in.seekg(0);
    if (size <= 0 || size % static_cast<std::streamoff>(sizeof(float)) != 0) {
        return std::nullopt;
    }
    std::vector<float> vec(static_cast<std::size_t>(size) / sizeof(float));
    in.read(reinterpret_cast<char*>(vec.data()), size);
    if (!in) {
        return std::nullopt;
    }
    return vec;
}

void EmbeddingCache::store(const std::string& backend, const std::string& modality,
                           const std::string& content_hash, const std::vector<float>& vec) {
    std::lock_guard<std::mutex> lock(write_mutex_);
    const auto dir = dir_ / backend / modality;
    std::filesystem::create_directories(dir);
    const auto path = dir / (content_hash + ".vec");
    const auto tmp = dir / (content_hash + ".vec.tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw Error(ErrorKind::Io, "cannot write cache entry " + path.string());
        }
        out.write(reinterpret_cast<const char*>(vec.data()),
                  static_cast<std::streamsize>(vec.size() * sizeof(float)));
    }
    std::filesystem::rename(tmp, path);
}

// ---- CachedBackend -------------------------------------------------------

CachedBackend::CachedBackend(std::shared_ptr<EmbeddingBackend> inner,
                             std::shared_ptr<EmbeddingCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::vector<float> CachedBackend::embed_text(const std::string& text) const {
    const std::string hash = sha256_hex(text);
    if (auto hit = cache_->load(inner_->name(), "text", hash)) {
        return *hit;
    }
    auto vec = inner_->embed_text(text);
    cache_->store(inner_->name(), "text", hash, vec);
    return vec;
}

std::vector<float> CachedBackend::embed_image(const Image& image) const {
    const std::string hash = image_content_hash(image);
    if (auto hit = cache_->load(inner_->name(), "image", hash)) {
        return *hit;
    }
    auto vec = inner_->embed_image(image);
    cache_->store(inner_->name(), "image", hash, vec);
    return vec;
}

// ---- batch helpers --------------------------------------------------------

namespace {

template <typename Item, typename Fn>
std::vector<std::vector<float>> batch_impl(const std::vector<Item>& items, bool parallel, Fn&& fn) {
    if (items.empty()) {
        throw Error(ErrorKind::EmptyBatch, "embed batch: empty input list");
    }
    std::vector<std::vector<float>> out(items.size());
    std::vector<std::string> errors(items.size());
    auto body = [&](std::int64_t i) {
        try {
            out[static_cast<std::size_t>(i)] = fn(items[static_cast<std::size_t>(i)]);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    };
    if (parallel) {
        parallel_for(static_cast<std::int64_t>(items.size()), body);
    } else {
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(items.size()); ++i) {
            body(i);
        }
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i].empty()) {
            throw Error(ErrorKind::Backend,
                        "batch item " + std::to_string(i) + ": " + errors[i]);
        }
    }
    return out;
}

} // namespace

std::vector<std::vector<float>> embed_text_batch(const EmbeddingBackend& backend,
                                                 const std::vector<std::string>& texts) {
    return batch_impl(texts, backend.thread_safe(),
                      [&](const std::string& t) { return backend.embed_text(t); });
}

std::vector<std::vector<float>> embed_image_batch(const EmbeddingBackend& backend,
                                                  const std::vector<Image>& images) {
    return batch_impl(images, backend.thread_safe(),
                      [&](const Image& img) { return backend.embed_image(img); });
}

std::vector<std::vector<float>> embed_text_batch_serial(const EmbeddingBackend& backend,
                                                        const std::vector<std::string>& texts) {
    return batch_impl(texts, false,
                      [&](const std::string& t) { return backend.embed_text(t); });
}

} // namespace emo3d
