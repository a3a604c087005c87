#include "emo3d/datagen.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "emo3d/hash.hpp"

namespace emo3d {

namespace {

constexpr const char* kDefaultDescribeTemplate =
    "Write one vivid sentence describing a person's face showing {emotion}. "
    "Mention the word \"{emotion}\". Sample {index}, attempt {attempt}.";

constexpr const char* kDefaultDistributionTemplate =
    "Rate the emotional content of the following face description as eight "
    "comma-separated numbers in [0,1], ordered happiness, anger, surprise, "
    "sadness, disgust, contempt, fear, neutral. Description: {text}";

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open template " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

PromptTemplates PromptTemplates::defaults() {
    return {kDefaultDescribeTemplate, kDefaultDistributionTemplate};
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    PromptTemplates t;
    t.describe = read_text_file(dir / "describe.txt");
    t.distribution = read_text_file(dir / "distribution.txt");
    return t;
}

std::string PromptTemplates::describe_hash() const {
    return sha256_hex(describe);
}

std::string PromptTemplates::distribution_hash() const {
    return sha256_hex(distribution);
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& vars) {
    std::string out = tmpl;
    for (const auto& [key, value] : vars) {
        const std::string needle = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = out.find(needle, pos)) != std::string::npos) {
            out.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return out;
}

// ---- stub clients ------------------------------------------------------------

namespace {

struct ClassWords {
    const char* adjectives[4];
    const char* features[4];
};

// word banks per canonical class, indexed by EmotionClass
const ClassWords kClassWords[kEmotionCount] = {
    {{"beaming", "joyful", "radiant", "delighted"},
     {"a wide smile", "crinkled eyes", "lifted cheeks", "bright eyes"}},
    {{"furious", "seething", "irate", "enraged"},
     {"furrowed brows", "a clenched jaw", "narrowed eyes", "flared nostrils"}},
    {{"astonished", "startled", "amazed", "stunned"},
     {"raised eyebrows", "a dropped jaw", "wide-open eyes", "an open mouth"}},
    {{"mournful", "sorrowful", "dejected", "gloomy"},
     {"downturned lips", "heavy eyelids", "a trembling chin", "distant eyes"}},
    {{"revolted", "queasy", "repulsed", "sickened"},
     {"a wrinkled nose", "a curled lip", "squinted eyes", "a recoiling head"}},
    {{"scornful", "disdainful", "smug", "dismissive"},
     {"a one-sided smirk", "a raised chin", "half-lidded eyes", "a slanted mouth"}},
    {{"terrified", "anxious", "panicked", "alarmed"},
     {"wide eyes", "a pale face", "tense lips", "raised inner brows"}},
    {{"calm", "composed", "placid", "unreadable"},
     {"relaxed brows", "a resting mouth", "steady eyes", "a loose jaw"}},
};

int class_in_prompt(const std::string& prompt) {
    // longest-name match wins so "happiness" is not shadowed by substrings
    for (int c = 0; c < kEmotionCount; ++c) {
        if (prompt.find(emotion_name(c)) != std::string::npos) {
            return c;
        }
    }
    for (int c = 0; c < kEmotionCount; ++c) {
        for (const char* adj : kClassWords[static_cast<std::size_t>(c)].adjectives) {
            if (prompt.find(adj) != std::string::npos) {
                return c;
            }
        }
    }
    return -1;
}

} // namespace

StubTextGenClient::StubTextGenClient(std::uint64_t seed) : id_("stub-text"), seed_(seed) {}

void StubTextGenClient::script(std::vector<std::optional<std::string>> responses) {
    scripted_.assign(responses.begin(), responses.end());
}

std::string StubTextGenClient::complete(const std::string& prompt) {
    if (!scripted_.empty()) {
        auto response = scripted_.front();
        scripted_.pop_front();
        if (!response) {
            throw Error(ErrorKind::Client, "scripted stub failure");
        }
        return *response;
    }

    SplitMix64 rng(fnv1a64(prompt) ^ seed_);
    if (const auto marker = prompt.find("Description:"); marker != std::string::npos) {
        // distribution-extraction request: concentrate on the class that the
        // description itself mentions, uniform-ish otherwise
        const int cls = class_in_prompt(prompt.substr(marker));
        std::array<double, kEmotionCount> v{};
        for (auto& x : v) {
            x = 0.02 + 0.04 * rng.next_double();
        }
        if (cls >= 0) {
            v[static_cast<std::size_t>(cls)] = 0.65 + 0.2 * rng.next_double();
        }
        std::ostringstream out;
        for (int i = 0; i < kEmotionCount; ++i) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%.4f", v[static_cast<std::size_t>(i)]);
            out << (i ? ", " : "") << buf;
        }
        return out.str();
    }

    const int cls = std::max(0, class_in_prompt(prompt));
    const auto& bank = kClassWords[static_cast<std::size_t>(cls)];
    const char* adj = bank.adjectives[rng.next_below(4)];
    const char* f1 = bank.features[rng.next_below(4)];
    const char* f2 = bank.features[rng.next_below(4)];
    std::ostringstream out;
    out << "A " << adj << " face with " << f1;
    if (std::string(f1) != f2) {
        out << " and " << f2;
    }
    out << ", the unmistakable look of " << emotion_name(cls) << " (take "
        << rng.next_below(100000) << ").";
    return out.str();
}

StubImageGenClient::StubImageGenClient(std::uint64_t seed, int size)
    : id_("stub-image"), seed_(seed), size_(size) {}

std::vector<std::uint8_t> StubImageGenClient::generate_png(const std::string& prompt,
                                                           int variant) {
    SplitMix64 rng(fnv1a64(prompt) ^ seed_ ^ (static_cast<std::uint64_t>(variant) << 32));

    // schematic face: tinted background, oval head, two eyes, one mouth
    Image img = Image::solid(size_, size_,
                             static_cast<std::uint8_t>(120 + rng.next_below(40)),
                             static_cast<std::uint8_t>(120 + rng.next_below(40)),
                             static_cast<std::uint8_t>(130 + rng.next_below(40)));
    const double cx = size_ / 2.0;
    const double cy = size_ / 2.0;
    const double rx = size_ * (0.30 + 0.05 * rng.next_double());
    const double ry = size_ * (0.38 + 0.05 * rng.next_double());
    const int skin = 170 + static_cast<int>(rng.next_below(50));
    const double eye_dx = rx * 0.45;
    const double eye_y = cy - ry * 0.25;
    const double eye_r = size_ * (0.035 + 0.02 * rng.next_double());
    const double mouth_y = cy + ry * (0.35 + 0.15 * rng.next_double());
    const double mouth_w = rx * (0.5 + 0.3 * rng.next_double());
    const double mouth_h = size_ * (0.02 + 0.03 * rng.next_double());

    for (int y = 0; y < size_; ++y) {
        for (int x = 0; x < size_; ++x) {
            const double fx = (x - cx) / rx;
            const double fy = (y - cy) / ry;
            if (fx * fx + fy * fy <= 1.0) {
                const int shade = skin - static_cast<int>(25.0 * (fx * fx + fy * fy));
                img.at(x, y, 0) = static_cast<std::uint8_t>(shade);
                img.at(x, y, 1) = static_cast<std::uint8_t>(shade * 0.85);
                img.at(x, y, 2) = static_cast<std::uint8_t>(shade * 0.75);
            }
            for (double sx : {cx - eye_dx, cx + eye_dx}) {
                const double ex = x - sx;
                const double ey = y - eye_y;
                if (ex * ex + ey * ey <= eye_r * eye_r) {
                    img.at(x, y, 0) = 30;
                    img.at(x, y, 1) = 30;
                    img.at(x, y, 2) = 40;
                }
            }
            const double mx = (x - cx) / mouth_w;
            const double my = (y - mouth_y) / mouth_h;
            if (mx * mx + my * my <= 1.0) {
                img.at(x, y, 0) = 140;
                img.at(x, y, 1) = 50;
                img.at(x, y, 2) = 60;
            }
        }
    }
    return encode_png(img);
}

// ---- token bucket ---------------------------------------------------------

TokenBucket::TokenBucket(double capacity, double refill_per_second)
    : capacity_(capacity), refill_per_second_(refill_per_second), tokens_(capacity),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    for (;;) {
        const auto now = std::chrono::steady_clock::now();
        const double elapsed = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(capacity_, tokens_ + elapsed * refill_per_second_);
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const double wait = (1.0 - tokens_) / refill_per_second_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        lock.lock();
    }
}

// ---- live clients -----------------------------------------------------------

namespace {

std::string require_api_key(const std::string& env_name) {
    const char* key = std::getenv(env_name.c_str());
    if (key == nullptr || *key == '\0') {
        throw Error(ErrorKind::Client, "environment variable " + env_name + " is not set");
    }
    return key;
}

std::vector<std::uint8_t> base64_decode(const std::string& input) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<std::uint8_t> out;
    int buffer = 0;
    int bits = 0;
    for (char c : input) {
        if (c == '=' || c == '\n' || c == '\r') {
            continue;
        }
        const int v = value_of(c);
        if (v < 0) {
            throw Error(ErrorKind::Parse, "invalid base64 payload");
        }
        buffer = (buffer << 6) | v;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((buffer >> bits) & 0xff));
        }
    }
    return out;
}

nlohmann::json post_json(const HttpClientConfig& config, TokenBucket& bucket,
                         const std::string& path, const nlohmann::json& body) {
    const std::string key = require_api_key(config.api_key_env);
    std::string last_error;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::seconds(1 << std::min(attempt, 5)));
        }
        bucket.acquire();
        httplib::Client client(config.base_url);
        client.set_read_timeout(config.timeout_seconds, 0);
        client.set_connection_timeout(config.timeout_seconds, 0);
        httplib::Headers headers{{"Authorization", "Bearer " + key}};
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "transport error " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw Error(ErrorKind::Client,
                        "HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Parse, "bad JSON response: " + std::string(e.what()));
        }
    }
    throw Error(ErrorKind::Client,
                "request to " + path + " failed after " + std::to_string(config.max_retries + 1) +
                    " attempts: " + last_error);
}

} // namespace

HttpTextGenClient::HttpTextGenClient(HttpClientConfig config)
    : config_(std::move(config)), id_("http-text:" + config_.model),
      bucket_(config_.rate_capacity, config_.rate_per_second) {}

std::string HttpTextGenClient::complete(const std::string& prompt) {
    const nlohmann::json body{
        {"model", config_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
    const auto response = post_json(config_, bucket_, "/v1/chat/completions", body);
    try {
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, "unexpected completion payload: " + std::string(e.what()));
    }
}

HttpImageGenClient::HttpImageGenClient(HttpClientConfig config)
    : config_(std::move(config)), id_("http-image:" + config_.model),
      bucket_(config_.rate_capacity, config_.rate_per_second) {}

std::vector<std::uint8_t> HttpImageGenClient::generate_png(const std::string& prompt,
                                                           int variant) {
    const nlohmann::json body{{"model", config_.model},
                              {"prompt", prompt + " (variation " + std::to_string(variant) + ")"},
                              {"n", 1},
                              {"response_format", "b64_json"}};
    const auto response = post_json(config_, bucket_, "/v1/images/generations", body);
    try {
        return base64_decode(response.at("data").at(0).at("b64_json").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, "unexpected image payload: " + std::string(e.what()));
    }
}

// ---- cached clients ----------------------------------------------------------

CachedTextGenClient::CachedTextGenClient(std::shared_ptr<TextGenClient> inner,
                                         std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {}

std::string CachedTextGenClient::complete(const std::string& prompt) {
    const auto path = dir_ / "text" / (sha256_hex(inner_->id() + "\n" + prompt) + ".txt");
    {
        std::ifstream in(path, std::ios::binary);
        if (in) {
            std::ostringstream buf;
            buf << in.rdbuf();
            return buf.str();
        }
    }
    const std::string response = inner_->complete(prompt);
    std::lock_guard<std::mutex> lock(mutex_);
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << response;
    return response;
}

CachedImageGenClient::CachedImageGenClient(std::shared_ptr<ImageGenClient> inner,
                                           std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {}

std::vector<std::uint8_t> CachedImageGenClient::generate_png(const std::string& prompt,
                                                             int variant) {
    const auto path =
        dir_ / "image" /
        (sha256_hex(inner_->id() + "\n" + prompt + "\n#" + std::to_string(variant)) + ".png");
    {
        std::ifstream in(path, std::ios::binary);
        if (in) {
            return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                             std::istreambuf_iterator<char>());
        }
    }
    const auto bytes = inner_->generate_png(prompt, variant);
    std::lock_guard<std::mutex> lock(mutex_);
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    return bytes;
}

// ---- trackers -------------------------------------------------------------

StubTracker::StubTracker(BlendshapeVector planted) : id_("stub-tracker"), planted_(planted) {}

BlendshapeVector StubTracker::extract(const Image& image) {
    const std::string hash = image_content_hash(image);
    if (fail_.contains(hash)) {
        throw Error(ErrorKind::NoFace, "no face detected (planted failure)");
    }
    if (auto it = by_hash_.find(hash); it != by_hash_.end()) {
        return it->second;
    }
    return planted_;
}

void StubTracker::plant(const Image& image, const BlendshapeVector& value) {
    by_hash_[image_content_hash(image)] = value;
}

void StubTracker::fail_on(const Image& image) {
    fail_[image_content_hash(image)] = true;
}

PixelStatTracker::PixelStatTracker() : id_("pixelstat-tracker") {}

BlendshapeVector PixelStatTracker::extract(const Image& image) {
    if (image.empty()) {
        throw Error(ErrorKind::Image, "empty image");
    }
    // luminance statistics; a flat image has no face to track
    const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
    double mean = 0.0;
    std::vector<double> lum(n);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            double v;
            if (image.channels >= 3) {
                v = (0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) +
                     0.114 * image.at(x, y, 2)) / 255.0;
            } else {
                v = image.at(x, y, 0) / 255.0;
            }
            lum[static_cast<std::size_t>(y) * image.width + x] = v;
            mean += v;
        }
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : lum) {
        var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(n);
    if (std::sqrt(var) < 0.008) {
        throw Error(ErrorKind::NoFace, "no face detected (flat image)");
    }

    // 13x4 grid of mean cell luminance -> 52 channels
    constexpr int kCols = 13;
    constexpr int kRows = 4;
    std::array<double, kBlendshapeCount> cells{};
    std::array<double, kBlendshapeCount> counts{};
    for (int y = 0; y < image.height; ++y) {
        const int gy = std::min(kRows - 1, y * kRows / image.height);
        for (int x = 0; x < image.width; ++x) {
            const int gx = std::min(kCols - 1, x * kCols / image.width);
            const std::size_t cell = static_cast<std::size_t>(gy) * kCols + gx;
            cells[cell] += lum[static_cast<std::size_t>(y) * image.width + x];
            counts[cell] += 1.0;
        }
    }
    for (int i = 0; i < kBlendshapeCount; ++i) {
        if (counts[static_cast<std::size_t>(i)] > 0.0) {
            cells[static_cast<std::size_t>(i)] =
                std::clamp(cells[static_cast<std::size_t>(i)] / counts[static_cast<std::size_t>(i)],
                           0.0, 1.0);
        }
    }
    return BlendshapeVector::from_values(cells);
}

// ---- pipeline ops -----------------------------------------------------------

std::vector<std::string> generate_descriptions(TextGenClient& client,
                                               const PromptTemplates& templates,
                                               EmotionClass emotion_class, int count,
                                               int retry_cap) {
    if (count < 1) {
        throw Error(ErrorKind::Parameter, "generate_descriptions: count must be >= 1");
    }
    std::vector<std::string> out;
    std::set<std::string> seen;
    const std::string emotion = emotion_name(static_cast<int>(emotion_class));
    for (int index = 0; index < count; ++index) {
        bool accepted = false;
        bool last_was_duplicate = false;
        std::string last_client_error;
        for (int attempt = 0; attempt <= retry_cap; ++attempt) {
            std::string text;
            try {
                text = client.complete(render_template(
                    templates.describe, {{"emotion", emotion},
                                         {"index", std::to_string(index)},
                                         {"attempt", std::to_string(attempt)}}));
            } catch (const std::exception& e) {
                last_client_error = e.what();
                last_was_duplicate = false;
                continue;
            }
            if (text.empty() || seen.contains(text)) {
                last_was_duplicate = true;
                continue;
            }
            seen.insert(text);
            out.push_back(std::move(text));
            accepted = true;
            break;
        }
        if (!accepted) {
            if (last_was_duplicate) {
                throw Error(ErrorKind::Generation,
                            "duplicate cap exceeded for description " + std::to_string(index));
            }
            throw Error(ErrorKind::Client,
                        "client failed after " + std::to_string(retry_cap + 1) +
                            " attempts: " + last_client_error);
        }
    }
    return out;
}

ExtractionResult extract_emotion_distribution(TextGenClient& client,
                                              const PromptTemplates& templates,
                                              const std::string& text) {
    if (text.empty()) {
        throw Error(ErrorKind::Parameter, "extract_emotion_distribution: empty text");
    }
    const std::string raw =
        client.complete(render_template(templates.distribution, {{"text", text}}));

    std::array<double, kEmotionCount> values{};
    int found = 0;
    const char* p = raw.c_str();
    while (*p != '\0') {
        char* end = nullptr;
        const double v = std::strtod(p, &end);
        if (end == p) {
            ++p;
            continue;
        }
        if (found < kEmotionCount) {
            values[static_cast<std::size_t>(found)] = v;
        }
        ++found;
        p = end;
    }
    if (found != kEmotionCount) {
        throw Error(ErrorKind::Parse,
                    "expected 8 numbers, got " + std::to_string(found) + " in response: " + raw);
    }
    return {normalize_distribution(values), raw};
}

BlendshapeVector extract_blendshapes(BlendshapeTracker& tracker, const Image& image) {
    if (image.empty()) {
        throw Error(ErrorKind::Image, "extract_blendshapes: empty image");
    }
    return tracker.extract(image);
}

Split split_for_id(const std::string& id, const std::array<double, 3>& ratios) {
    SplitMix64 rng(fnv1a64(id));
    const double u = rng.next_double();
    if (u < ratios[0]) {
        return Split::train;
    }
    if (u < ratios[0] + ratios[1]) {
        return Split::val;
    }
    return Split::test;
}

BuildResult build_triads(const std::vector<TextItem>& items, ImageGenClient& image_client,
                         BlendshapeTracker& tracker, const std::filesystem::path& out_dir,
                         const BuildOptions& options, const PromptTemplates& templates) {
    const double ratio_sum =
        options.split_ratios[0] + options.split_ratios[1] + options.split_ratios[2];
    if (std::abs(ratio_sum - 1.0) > 1e-9 || options.split_ratios[0] < 0.0 ||
        options.split_ratios[1] < 0.0 || options.split_ratios[2] < 0.0) {
        throw Error(ErrorKind::Parameter, "split ratios must be non-negative and sum to 1");
    }
    if (options.images_per_text < 1) {
        throw Error(ErrorKind::Parameter, "images_per_text must be >= 1");
    }

    std::filesystem::create_directories(out_dir / "images");

    std::vector<Triad> triads;
    nlohmann::ordered_json skip_log = nlohmann::ordered_json::array();
    std::size_t attempts = 0;
    std::size_t failures = 0;

    for (std::size_t i = 0; i < items.size(); ++i) {
        for (int variant = 0; variant < options.images_per_text; ++variant) {
            ++attempts;
            char id_buf[32];
            std::snprintf(id_buf, sizeof(id_buf), "t%06zu_%d", i, variant);
            const std::string id = id_buf;
            try {
                const auto png = image_client.generate_png(items[i].text, variant);
                const Image image = decode_png(png);
                const BlendshapeVector blend = extract_blendshapes(tracker, image);

                const std::string sha = sha256_hex(png);
                const std::string rel_path = "images/" + sha + ".png";
                const auto abs_path = out_dir / rel_path;
                if (!std::filesystem::exists(abs_path)) {
                    std::ofstream img_out(abs_path, std::ios::binary);
                    if (!img_out) {
                        throw Error(ErrorKind::Io, "cannot write " + abs_path.string());
                    }
                    img_out.write(reinterpret_cast<const char*>(png.data()),
                                  static_cast<std::streamsize>(png.size()));
                }

                Triad t;
                t.id = id;
                t.text = items[i].text;
                t.image_path = rel_path;
                t.blendshapes = blend;
                t.emotion = items[i].emotion;
                t.split = split_for_id(id, options.split_ratios);
                triads.push_back(std::move(t));
            } catch (const std::exception& e) {
                ++failures;
                skip_log.push_back({{"id", id}, {"reason", e.what()}});
            }
        }
    }

    if (attempts > 0 &&
        static_cast<double>(failures) / static_cast<double>(attempts) > options.failure_cap) {
        throw Error(ErrorKind::Pipeline,
                    std::to_string(failures) + "/" + std::to_string(attempts) +
                        " pipeline items failed (cap " + std::to_string(options.failure_cap) +
                        ")");
    }

    BuildResult result;
    result.dataset_path = out_dir / "dataset.jsonl";
    result.manifest_path = out_dir / "manifest.json";
    result.triads_written = triads.size();
    result.skipped = failures;
    save_dataset(result.dataset_path, triads);

    const SplitCounts counts = count_splits(triads);
    nlohmann::ordered_json manifest;
    manifest["templates"] = {{"describe_sha256", templates.describe_hash()},
                             {"distribution_sha256", templates.distribution_hash()}};
    manifest["clients"] = {{"image", image_client.id()}, {"tracker", tracker.id()}};
    manifest["options"] = {{"split_ratios", options.split_ratios},
                           {"images_per_text", options.images_per_text},
                           {"failure_cap", options.failure_cap}};
    manifest["counts"] = {{"texts", items.size()},
                          {"triads", triads.size()},
                          {"skipped", failures},
                          {"train", counts.train},
                          {"val", counts.val},
                          {"test", counts.test}};
    manifest["skip_log"] = skip_log;
    std::ofstream manifest_out(result.manifest_path, std::ios::binary);
    if (!manifest_out) {
        throw Error(ErrorKind::Io, "cannot write " + result.manifest_path.string());
    }
    manifest_out << manifest.dump(2) << "\n";
    return result;
}

// ---- emotion lexicon -----------------------------------------------------------

EmotionLexicon EmotionLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open lexicon " + path.string());
    }
    EmotionLexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream row(line);
        std::string word;
        row >> word;
        std::array<double, kEmotionCount> values{};
        for (int i = 0; i < kEmotionCount; ++i) {
            if (!(row >> values[static_cast<std::size_t>(i)])) {
                throw Error(ErrorKind::Parse,
                            "lexicon line " + std::to_string(line_no) + ": expected 8 numbers");
            }
        }
        try {
            lex.words_[word] = normalize_distribution(values);
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse,
                        "lexicon line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return lex;
}

EmotionLexicon EmotionLexicon::from_entries(
    const std::vector<std::pair<std::string, std::array<double, kEmotionCount>>>& entries) {
    EmotionLexicon lex;
    for (const auto& [word, values] : entries) {
        lex.words_[word] = normalize_distribution(values);
    }
    return lex;
}

bool EmotionLexicon::contains(const std::string& word) const {
    return words_.contains(word);
}

const EmotionDistribution& EmotionLexicon::at(const std::string& word) const {
    const auto it = words_.find(word);
    if (it == words_.end()) {
        throw Error(ErrorKind::Lookup, "word \"" + word + "\" not in lexicon");
    }
    return it->second;
}

std::vector<std::pair<std::string, double>> nearest_words(const EmotionLexicon& lexicon,
                                                          const std::string& word, int k) {
    const EmotionDistribution& query = lexicon.at(word);
    if (k < 1 || static_cast<std::size_t>(k) > lexicon.size() - 1) {
        throw Error(ErrorKind::Parameter,
                    "nearest_words: k must be in [1, lexicon size - 1]");
    }
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(lexicon.size() - 1);
    for (const auto& [other, dist] : lexicon.entries()) {
        if (other == word) {
            continue;
        }
        scored.emplace_back(other,
                            cosine_similarity(std::span(query.values()), std::span(dist.values())));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    scored.resize(static_cast<std::size_t>(k));
    return scored;
}

} // namespace emo3d
