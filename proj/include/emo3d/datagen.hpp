#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "emo3d/core.hpp"
#include "emo3d/image.hpp"

namespace emo3d {

// ---- prompt templates -----------------------------------------------------
// Editable text files; {emotion}, {index}, {attempt} and {text} are
// substituted. The rendered prompt hashes go into the dataset manifest.

struct PromptTemplates {
    std::string describe;
    std::string distribution;

    static PromptTemplates defaults();
    static PromptTemplates load(const std::filesystem::path& dir);

    std::string describe_hash() const;
    std::string distribution_hash() const;
};

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& vars);

// ---- client interfaces ------------------------------------------------------

class TextGenClient {
public:
    virtual ~TextGenClient() = default;
    virtual const std::string& id() const = 0;
    // one completion per prompt
    virtual std::string complete(const std::string& prompt) = 0;
};

class ImageGenClient {
public:
    virtual ~ImageGenClient() = default;
    virtual const std::string& id() const = 0;
    // encoded PNG bytes for one prompt/variant pair
    virtual std::vector<std::uint8_t> generate_png(const std::string& prompt, int variant) = 0;
};

// Deterministic offline stand-ins; the default pipeline mode. The text stub
// composes descriptions from per-class word banks seeded by the prompt
// hash; the distribution stub reads the class word out of the prompt and
// returns a concentrated 8-vector with seeded jitter.
class StubTextGenClient : public TextGenClient {
public:
    explicit StubTextGenClient(std::uint64_t seed = 0);

    const std::string& id() const override { return id_; }
    std::string complete(const std::string& prompt) override;

    // scripted mode for tests: responses are served in order, then the
    // procedural generator takes over; nullopt entries throw ClientError
    void script(std::vector<std::optional<std::string>> responses);

private:
    std::string id_;
    std::uint64_t seed_;
    std::deque<std::optional<std::string>> scripted_;
};

class StubImageGenClient : public ImageGenClient {
public:
    explicit StubImageGenClient(std::uint64_t seed = 0, int size = 96);

    const std::string& id() const override { return id_; }
    std::vector<std::uint8_t> generate_png(const std::string& prompt, int variant) override;

private:
    std::string id_;
    std::uint64_t seed_;
    int size_;
};

// Blocking token bucket shared by the live clients.
class TokenBucket {
public:
    TokenBucket(double capacity, double refill_per_second);
    void acquire();

private:
    double capacity_;
    double refill_per_second_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

struct HttpClientConfig {
    std::string base_url;          // e.g. https://api.example.com
    std::string model;
    std::string api_key_env;       // env var holding the key
    int max_retries = 3;
    int timeout_seconds = 60;
    double rate_capacity = 2.0;    // token bucket size
    double rate_per_second = 0.5;  // refill rate
};

// OpenAI-style chat-completions client; live mode only.
class HttpTextGenClient : public TextGenClient {
public:
    explicit HttpTextGenClient(HttpClientConfig config);
    const std::string& id() const override { return id_; }
    std::string complete(const std::string& prompt) override;

private:
    HttpClientConfig config_;
    std::string id_;
    TokenBucket bucket_;
};

// OpenAI-style image-generations client; live mode only.
class HttpImageGenClient : public ImageGenClient {
public:
    explicit HttpImageGenClient(HttpClientConfig config);
    const std::string& id() const override { return id_; }
    std::vector<std::uint8_t> generate_png(const std::string& prompt, int variant) override;

private:
    HttpClientConfig config_;
    std::string id_;
    TokenBucket bucket_;
};

// Response caches keyed by (client id, prompt); warm caches make reruns
// replay byte-identically.
class CachedTextGenClient : public TextGenClient {
public:
    CachedTextGenClient(std::shared_ptr<TextGenClient> inner, std::filesystem::path dir);
    const std::string& id() const override { return inner_->id(); }
    std::string complete(const std::string& prompt) override;

private:
    std::shared_ptr<TextGenClient> inner_;
    std::filesystem::path dir_;
    std::mutex mutex_;
};

class CachedImageGenClient : public ImageGenClient {
public:
    CachedImageGenClient(std::shared_ptr<ImageGenClient> inner, std::filesystem::path dir);
    const std::string& id() const override { return inner_->id(); }
    std::vector<std::uint8_t> generate_png(const std::string& prompt, int variant) override;

private:
    std::shared_ptr<ImageGenClient> inner_;
    std::filesystem::path dir_;
    std::mutex mutex_;
};

// ---- blendshape extraction ---------------------------------------------------

class BlendshapeTracker {
public:
    virtual ~BlendshapeTracker() = default;
    virtual const std::string& id() const = 0;
    // 52 scores in [0,1]; throws NoFace when no face is found
    virtual BlendshapeVector extract(const Image& image) = 0;
};

class StubTracker : public BlendshapeTracker {
public:
    explicit StubTracker(BlendshapeVector planted = BlendshapeVector::zeros());

    const std::string& id() const override { return id_; }
    BlendshapeVector extract(const Image& image) override;

    void plant(const Image& image, const BlendshapeVector& value);
    void fail_on(const Image& image); // that image raises NoFace

private:
    std::string id_;
    BlendshapeVector planted_;
    std::map<std::string, BlendshapeVector> by_hash_;
    std::map<std::string, bool> fail_;
};

// Deterministic image-statistics adapter: 52 per-cell brightness features
// in [0,1]. Low-variance (blank) images raise NoFace.
class PixelStatTracker : public BlendshapeTracker {
public:
    PixelStatTracker();

    const std::string& id() const override { return id_; }
    BlendshapeVector extract(const Image& image) override;

private:
    std::string id_;
};

// ---- pipeline ops ------------------------------------------------------------

// count distinct descriptions for one emotion class; exact duplicates are
// regenerated up to a retry cap.
std::vector<std::string> generate_descriptions(TextGenClient& client,
                                               const PromptTemplates& templates,
                                               EmotionClass emotion_class, int count,
                                               int retry_cap = 5);

struct ExtractionResult {
    EmotionDistribution distribution;
    std::string raw_response; // kept for the audit trail
};

ExtractionResult extract_emotion_distribution(TextGenClient& client,
                                              const PromptTemplates& templates,
                                              const std::string& text);

BlendshapeVector extract_blendshapes(BlendshapeTracker& tracker, const Image& image);

struct TextItem {
    std::string text;
    EmotionDistribution emotion;
};

struct BuildOptions {
    std::array<double, 3> split_ratios{0.8, 0.1, 0.1}; // train/val/test, sums to 1
    int images_per_text = 1;
    double failure_cap = 0.5; // PipelineError above this failure fraction
};

struct BuildResult {
    std::filesystem::path dataset_path;
    std::filesystem::path manifest_path;
    std::size_t triads_written = 0;
    std::size_t skipped = 0;
};

// Assembles triads under out_dir: dataset.jsonl, images/<sha256>.png and
// manifest.json (template hashes, client ids, counts, skip log; no
// timestamps, so a rerun with warm caches is byte-identical).
BuildResult build_triads(const std::vector<TextItem>& items, ImageGenClient& image_client,
                         BlendshapeTracker& tracker, const std::filesystem::path& out_dir,
                         const BuildOptions& options, const PromptTemplates& templates);

// Split assignment by id hash against the cumulative ratios.
Split split_for_id(const std::string& id, const std::array<double, 3>& ratios);

// ---- emotion lexicon -----------------------------------------------------------

// word -> emotion vector map, TSV "word<TAB>8 floats", normalized on load.
class EmotionLexicon {
public:
    static EmotionLexicon load(const std::filesystem::path& path);
    static EmotionLexicon from_entries(
        const std::vector<std::pair<std::string, std::array<double, kEmotionCount>>>& entries);

    std::size_t size() const { return words_.size(); }
    bool contains(const std::string& word) const;
    const EmotionDistribution& at(const std::string& word) const;
    const std::map<std::string, EmotionDistribution>& entries() const { return words_; }

private:
    std::map<std::string, EmotionDistribution> words_;
};

// k nearest words by cosine similarity of emotion vectors, query excluded,
// descending, ties lexicographic.
std::vector<std::pair<std::string, double>> nearest_words(const EmotionLexicon& lexicon,
                                                          const std::string& word, int k);

} // namespace emo3d
