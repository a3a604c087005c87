#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "emo3d/embedding.hpp"
#include "emo3d/error.hpp"
#include "emo3d/hash.hpp"

using namespace emo3d;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "emo3d-test-embed" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

Image checker(int w, int h, std::uint8_t a, std::uint8_t b) {
    Image img = Image::solid(w, h, a, a, a);
    for (int y = 0; y < h; ++y) {
        for (int x = (y % 2); x < w; x += 2) {
            img.at(x, y, 0) = b;
            img.at(x, y, 1) = b;
            img.at(x, y, 2) = b;
        }
    }
    return img;
}

double unit_norm_error(const std::vector<float>& v) {
    double n2 = 0.0;
    for (float x : v) {
        n2 += static_cast<double>(x) * x;
    }
    return std::abs(std::sqrt(n2) - 1.0);
}

} // namespace

TEST_CASE("mock backend text embedding is deterministic and unit length") {
    const MockBackend backend(64);
    const auto v1 = backend.embed_text("happy face");
    const auto v2 = backend.embed_text("happy face");
    CHECK(v1 == v2);
    CHECK(v1.size() == 64);
    CHECK(unit_norm_error(v1) < 1e-6);
    CHECK(backend.embed_text("sad face") != v1);
    CHECK_THROWS_AS(backend.embed_text(""), Error);
}

TEST_CASE("mock backend image embedding is deterministic; distinct images differ") {
    const MockBackend backend(64);
    const Image black = Image::solid(32, 32, 0, 0, 0);
    const auto v1 = backend.embed_image(black);
    CHECK(v1 == backend.embed_image(black));
    CHECK(v1.size() == 64);

    // collision check over a small fixture set
    std::vector<Image> fixtures;
    for (int i = 0; i < 8; ++i) {
        fixtures.push_back(checker(24, 24, static_cast<std::uint8_t>(10 * i),
                                   static_cast<std::uint8_t>(255 - 10 * i)));
    }
    for (std::size_t a = 0; a < fixtures.size(); ++a) {
        for (std::size_t b = a + 1; b < fixtures.size(); ++b) {
            CHECK(backend.embed_image(fixtures[a]) != backend.embed_image(fixtures[b]));
        }
    }
}

TEST_CASE("planted-pair mode maps an image to a prompt's text embedding") {
    MockBackend backend(32);
    const Image tagged = checker(16, 16, 20, 200);
    backend.plant_pair(tagged, "prompt seven");
    CHECK(backend.embed_image(tagged) == backend.embed_text("prompt seven"));
    // untagged images keep their own hash-seeded embedding
    const Image other = checker(16, 16, 30, 180);
    CHECK(backend.embed_image(other) != backend.embed_text("prompt seven"));
}

TEST_CASE("batch embedding equals single calls bit-for-bit and preserves order") {
    const MockBackend backend(48);
    const std::vector<std::string> texts{"one", "two", "three", "four", "five"};
    const auto batch = embed_text_batch(backend, texts);
    REQUIRE(batch.size() == texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        CHECK(batch[i] == backend.embed_text(texts[i]));
    }

    const auto single = embed_text_batch(backend, {"one"});
    CHECK(single.size() == 1);
    CHECK(single[0] == backend.embed_text("one"));

    const auto serial = embed_text_batch_serial(backend, texts);
    CHECK(serial == batch);
}

TEST_CASE("empty batch raises EmptyBatch") {
    const MockBackend backend(16);
    try {
        embed_text_batch(backend, {});
        FAIL("expected EmptyBatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyBatch);
    }
}

TEST_CASE("batch failures carry the item index") {
    const MockBackend backend(16);
    try {
        embed_text_batch(backend, {"fine", "", "also fine"});
        FAIL("expected Backend error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("item 1") != std::string::npos);
    }
}

TEST_CASE("cache round trip is bit-identical with the documented layout") {
    const auto dir = fresh_dir("cache");
    EmbeddingCache cache(dir);
    const std::vector<float> vec = hash_unit_vector("payload", 96, 1);
    cache.store("mock", "text", "abc123", vec);
    const auto hit = cache.load("mock", "text", "abc123");
    REQUIRE(hit.has_value());
    CHECK(*hit == vec);
    CHECK(std::filesystem::exists(dir / "mock" / "text" / "abc123.vec"));
    CHECK(std::filesystem::file_size(dir / "mock" / "text" / "abc123.vec") ==
          96 * sizeof(float));
    CHECK(!cache.load("mock", "text", "missing").has_value());
}

TEST_CASE("cached backend serves identical vectors after the first call") {
    const auto dir = fresh_dir("cached-backend");
    auto inner = std::make_shared<MockBackend>(32);
    CachedBackend cached(inner, std::make_shared<EmbeddingCache>(dir));
    const auto cold = cached.embed_text("memoized");
    const auto warm = cached.embed_text("memoized");
    CHECK(cold == warm);
    CHECK(cold == inner->embed_text("memoized"));

    const Image img = checker(16, 16, 5, 250);
    CHECK(cached.embed_image(img) == inner->embed_image(img));
    CHECK(cached.embed_image(img) == inner->embed_image(img));
}

TEST_CASE("EMO3D_CACHE_DIR overrides an empty cache path") {
    const auto dir = fresh_dir("env-cache");
    setenv("EMO3D_CACHE_DIR", dir.c_str(), 1);
    const EmbeddingCache cache({});
    CHECK(cache.dir() == dir);
    unsetenv("EMO3D_CACHE_DIR");
}

TEST_CASE("linear file backend reads its dimensionality from the weights file") {
    const auto dir = fresh_dir("linear");
    const auto weights = dir / "weights.bin";
    LinearFileBackend::write_random_weights(weights, 96, 256, 8, 17);

    const LinearFileBackend backend(weights);
    CHECK(backend.dim() == 96);
    CHECK(backend.text_feature_count() == 256);
    CHECK(backend.image_grid() == 8);

    const auto v1 = backend.embed_text("a joyful face");
    CHECK(v1.size() == 96);
    CHECK(v1 == backend.embed_text("a joyful face"));
    CHECK(unit_norm_error(v1) < 1e-6);
    CHECK(backend.embed_text("a mournful face") != v1);

    const Image img = checker(20, 20, 40, 220);
    const auto iv = backend.embed_image(img);
    CHECK(iv.size() == 96);
    CHECK(iv == backend.embed_image(img));
    CHECK(unit_norm_error(iv) < 1e-6);
    CHECK(backend.embed_image(checker(20, 20, 90, 140)) != iv);
}

TEST_CASE("linear backend rejects a truncated weights file") {
    const auto dir = fresh_dir("linear-bad");
    const auto weights = dir / "weights.bin";
    LinearFileBackend::write_random_weights(weights, 16, 64, 4, 3);
    std::filesystem::resize_file(weights, std::filesystem::file_size(weights) / 2);
    try {
        LinearFileBackend backend(weights);
        FAIL("expected BackendError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Backend);
    }
}
