#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "emo3d/datagen.hpp"
#include "emo3d/hash.hpp"

using namespace emo3d;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "emo3d-test-datagen" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("generate_descriptions passes scripted texts through") {
    StubTextGenClient client;
    client.script({std::string("first face"), std::string("second face"),
                   std::string("third face")});
    const auto texts = generate_descriptions(client, PromptTemplates::defaults(),
                                             EmotionClass::happiness, 3);
    CHECK(texts == std::vector<std::string>{"first face", "second face", "third face"});
}

TEST_CASE("generate_descriptions drops an exact duplicate and retries") {
    StubTextGenClient client;
    client.script({std::string("same text"), std::string("same text"),
                   std::string("a fresh text")});
    const auto texts = generate_descriptions(client, PromptTemplates::defaults(),
                                             EmotionClass::anger, 2);
    CHECK(texts == std::vector<std::string>{"same text", "a fresh text"});
}

TEST_CASE("generate_descriptions raises ClientError when every call fails") {
    StubTextGenClient client;
    std::vector<std::optional<std::string>> failures(12, std::nullopt);
    client.script(failures);
    try {
        generate_descriptions(client, PromptTemplates::defaults(), EmotionClass::fear, 1, 3);
        FAIL("expected ClientError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Client);
    }
}

TEST_CASE("generate_descriptions raises GenerationError when duplicates never stop") {
    StubTextGenClient client;
    std::vector<std::optional<std::string>> dupes(12, std::string("always the same"));
    client.script(dupes);
    try {
        generate_descriptions(client, PromptTemplates::defaults(), EmotionClass::fear, 2, 3);
        FAIL("expected GenerationError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Generation);
    }
}

TEST_CASE("procedural stub emits distinct, emotion-bearing descriptions") {
    StubTextGenClient client(3);
    const auto texts = generate_descriptions(client, PromptTemplates::defaults(),
                                             EmotionClass::sadness, 6);
    CHECK(texts.size() == 6);
    for (const auto& t : texts) {
        CHECK(t.find("sadness") != std::string::npos);
    }
    CHECK(std::set<std::string>(texts.begin(), texts.end()).size() == 6);
}

TEST_CASE("extract_emotion_distribution parses and normalizes the response") {
    StubTextGenClient client;
    client.script({std::string("0.7, 0, 0.3, 0, 0, 0, 0, 0")});
    const auto result =
        extract_emotion_distribution(client, PromptTemplates::defaults(), "a mixed face");
    CHECK(result.distribution[0] == doctest::Approx(0.7));
    CHECK(result.distribution[2] == doctest::Approx(0.3));
    CHECK(result.raw_response == "0.7, 0, 0.3, 0, 0, 0, 0, 0");

    // values summing to 2 normalize to sum 1
    client.script({std::string("[0.5, 0.5, 0.25, 0.25, 0.125, 0.125, 0.125, 0.125]")});
    const auto scaled =
        extract_emotion_distribution(client, PromptTemplates::defaults(), "another face");
    double sum = 0.0;
    for (int i = 0; i < 8; ++i) {
        sum += scaled.distribution[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(scaled.distribution[0] == doctest::Approx(0.25));
}

TEST_CASE("extract_emotion_distribution rejects a 7-number response") {
    StubTextGenClient client;
    client.script({std::string("1, 2, 3, 4, 5, 6, 7")});
    try {
        extract_emotion_distribution(client, PromptTemplates::defaults(), "short face");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(std::string(e.what()).find("got 7") != std::string::npos);
    }
}

TEST_CASE("stub tracker returns planted vectors; blank images raise NoFace on pixelstat") {
    std::array<double, 52> planted{};
    for (int i = 0; i < 52; ++i) {
        planted[static_cast<std::size_t>(i)] = (i % 10) / 10.0;
    }
    StubTracker stub(BlendshapeVector::from_values(planted));
    const Image any = Image::solid(20, 20, 100, 120, 140);
    const auto out = stub.extract(any);
    for (int i = 0; i < 52; ++i) {
        CHECK(out[i] == planted[static_cast<std::size_t>(i)]);
    }

    PixelStatTracker pixelstat;
    const Image blank = Image::solid(32, 32, 128, 128, 128);
    try {
        pixelstat.extract(blank);
        FAIL("expected NoFaceError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoFace);
    }
}

TEST_CASE("pixelstat tracker on the bundled reference face matches the frozen fixture") {
    // reference face = the stub image generator's output for a fixed prompt
    StubImageGenClient images(1234);
    const Image face = decode_png(images.generate_png("reference face portrait", 0));
    PixelStatTracker tracker;
    const auto scores = tracker.extract(face);
    for (int i = 0; i < 52; ++i) {
        CHECK(scores[i] >= 0.0);
        CHECK(scores[i] <= 1.0);
    }
    // frozen regression values from the first run of this adapter
    CHECK(scores[0] == doctest::Approx(0.52336078).epsilon(1e-6));  // background cell
    CHECK(scores[17] == doctest::Approx(0.48165598).epsilon(1e-6)); // eye region
    CHECK(scores[19] == doctest::Approx(0.73188487).epsilon(1e-6)); // bright nose band
}

TEST_CASE("build_triads assembles valid triads with stub clients") {
    const auto out_dir = fresh_dir("build");
    StubTextGenClient text_client(1);
    StubImageGenClient image_client(2);
    StubTracker tracker;

    std::vector<TextItem> items;
    for (int i = 0; i < 4; ++i) {
        std::array<double, 8> e{};
        e[static_cast<std::size_t>(i)] = 1.0;
        items.push_back({"face number " + std::to_string(i), normalize_distribution(e)});
    }
    const auto result = build_triads(items, image_client, tracker, out_dir, BuildOptions{},
                                     PromptTemplates::defaults());
    CHECK(result.triads_written == 4);
    CHECK(result.skipped == 0);

    const auto triads = load_dataset(result.dataset_path);
    REQUIRE(triads.size() == 4);
    for (const auto& t : triads) {
        REQUIRE(t.image_path.has_value());
        CHECK(std::filesystem::exists(out_dir / *t.image_path));
    }
}

TEST_CASE("a NoFace failure is skipped and logged, not fatal") {
    const auto out_dir = fresh_dir("skip");
    StubImageGenClient image_client(2);
    StubTracker tracker;
    // make the second item's image fail
    const Image second = decode_png(image_client.generate_png("face 1", 0));
    tracker.fail_on(second);

    std::vector<TextItem> items;
    for (int i = 0; i < 4; ++i) {
        std::array<double, 8> e{};
        e[0] = 1.0;
        items.push_back({"face " + std::to_string(i), normalize_distribution(e)});
    }
    const auto result = build_triads(items, image_client, tracker, out_dir, BuildOptions{},
                                     PromptTemplates::defaults());
    CHECK(result.triads_written == 3);
    CHECK(result.skipped == 1);

    std::ifstream manifest(result.manifest_path);
    const std::string manifest_text((std::istreambuf_iterator<char>(manifest)),
                                    std::istreambuf_iterator<char>());
    CHECK(manifest_text.find("t000001_0") != std::string::npos);
    CHECK(manifest_text.find("NoFace") != std::string::npos);
}

TEST_CASE("build_triads raises PipelineError above the failure cap") {
    const auto out_dir = fresh_dir("cap");
    StubImageGenClient image_client(2);
    StubTracker tracker;
    std::vector<TextItem> items;
    for (int i = 0; i < 4; ++i) {
        std::array<double, 8> e{};
        e[0] = 1.0;
        items.push_back({"face " + std::to_string(i), normalize_distribution(e)});
        tracker.fail_on(decode_png(image_client.generate_png(items.back().text, 0)));
    }
    BuildOptions options;
    options.failure_cap = 0.5;
    try {
        build_triads(items, image_client, tracker, out_dir, options, PromptTemplates::defaults());
        FAIL("expected PipelineError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Pipeline);
    }
}

TEST_CASE("hash split assignment lands within 3% of the requested ratios") {
    const std::array<double, 3> ratios{0.8, 0.1, 0.1};
    std::array<std::size_t, 3> counts{};
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
        switch (split_for_id("id-" + std::to_string(i), ratios)) {
            case Split::train: ++counts[0]; break;
            case Split::val: ++counts[1]; break;
            case Split::test: ++counts[2]; break;
        }
    }
    for (int s = 0; s < 3; ++s) {
        const double frac = static_cast<double>(counts[static_cast<std::size_t>(s)]) / n;
        CHECK(std::abs(frac - ratios[static_cast<std::size_t>(s)]) <= 0.03);
    }
    // deterministic
    CHECK(split_for_id("abc", ratios) == split_for_id("abc", ratios));
}

TEST_CASE("pipeline replay is byte-identical with stub clients") {
    const auto dir1 = fresh_dir("replay1");
    const auto dir2 = fresh_dir("replay2");

    auto run = [](const std::filesystem::path& out_dir) {
        StubTextGenClient text_client(9);
        StubImageGenClient image_client(9);
        PixelStatTracker tracker;
        const auto templates = PromptTemplates::defaults();
        std::vector<TextItem> items;
        for (int c = 0; c < 8; ++c) {
            const auto texts = generate_descriptions(text_client, templates,
                                                     static_cast<EmotionClass>(c), 2);
            for (const auto& text : texts) {
                items.push_back(
                    {text, extract_emotion_distribution(text_client, templates, text).distribution});
            }
        }
        BuildOptions options;
        options.images_per_text = 2;
        return build_triads(items, image_client, tracker, out_dir, options, templates);
    };

    const auto r1 = run(dir1);
    const auto r2 = run(dir2);
    CHECK(file_bytes(r1.dataset_path) == file_bytes(r2.dataset_path));
    CHECK(file_bytes(r1.manifest_path) == file_bytes(r2.manifest_path));

    // ingest-after-emit round trip: every emitted triad passes validation
    const auto triads = load_dataset(r1.dataset_path);
    CHECK(triads.size() == r1.triads_written);
}

TEST_CASE("cached text client replays the first response") {
    const auto dir = fresh_dir("cache");
    auto inner = std::make_shared<StubTextGenClient>();
    inner->script({std::string("cached response"), std::string("other response")});
    CachedTextGenClient cached(inner, dir);
    CHECK(cached.complete("prompt") == "cached response");
    // second call hits the cache, not the script
    CHECK(cached.complete("prompt") == "cached response");
    CHECK(cached.complete("different prompt") == "other response");
}

// ---- lexicon -------------------------------------------------------------------

TEST_CASE("lexicon TSV load normalizes vectors and errors on bad rows") {
    const auto dir = fresh_dir("lexicon");
    const auto path = dir / "lex.tsv";
    {
        std::ofstream out(path);
        out << "# comment line\n";
        out << "joy\t2 0 0 0 0 0 0 0\n";
        out << "gloom\t0 0 0 1 0 0 0 1\n";
    }
    const auto lex = EmotionLexicon::load(path);
    CHECK(lex.size() == 2);
    CHECK(lex.at("joy")[0] == doctest::Approx(1.0));
    CHECK(lex.at("gloom")[3] == doctest::Approx(0.5));
    CHECK_THROWS_AS(lex.at("missing"), Error);

    {
        std::ofstream out(path);
        out << "broken\t1 2 3\n";
    }
    CHECK_THROWS_AS(EmotionLexicon::load(path), Error);
}

TEST_CASE("nearest_words: a planted identical vector ranks first with similarity 1") {
    const auto lex = EmotionLexicon::from_entries({
        {"surprise", {0, 0, 1, 0, 0, 0, 0, 0}},
        {"shock", {0, 0, 1, 0, 0, 0, 0, 0}},
        {"calm", {0, 0, 0, 0, 0, 0, 0, 1}},
        {"delight", {1, 0, 0.2, 0, 0, 0, 0, 0}},
    });
    const auto ranked = nearest_words(lex, "surprise", 3);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].first == "shock");
    CHECK(ranked[0].second == doctest::Approx(1.0));
    // non-increasing similarities
    for (std::size_t i = 0; i + 1 < ranked.size(); ++i) {
        CHECK(ranked[i].second >= ranked[i + 1].second);
    }
}

TEST_CASE("nearest_words: k = size-1 returns every other word") {
    const auto lex = EmotionLexicon::from_entries({
        {"a", {1, 0, 0, 0, 0, 0, 0, 0}},
        {"b", {0, 1, 0, 0, 0, 0, 0, 0}},
        {"c", {0, 0, 1, 0, 0, 0, 0, 0}},
    });
    const auto ranked = nearest_words(lex, "a", 2);
    CHECK(ranked.size() == 2);
    CHECK_THROWS_AS(nearest_words(lex, "a", 3), Error);
    CHECK_THROWS_AS(nearest_words(lex, "zzz", 1), Error);
}

TEST_CASE("nearest_words matches a brute-force oracle on a 50-word fixture") {
    SplitMix64 rng(77);
    std::vector<std::pair<std::string, std::array<double, 8>>> entries;
    for (int i = 0; i < 50; ++i) {
        std::array<double, 8> v{};
        for (auto& x : v) {
            x = 0.05 + rng.next_double();
        }
        entries.emplace_back("w" + std::to_string(i), v);
    }
    const auto lex = EmotionLexicon::from_entries(entries);

    const std::string query = "w17";
    const auto& qv = lex.at(query);
    std::vector<std::pair<std::string, double>> oracle;
    for (const auto& [word, dist] : lex.entries()) {
        if (word == query) {
            continue;
        }
        double dot = 0.0, qq = 0.0, dd = 0.0;
        for (int i = 0; i < 8; ++i) {
            dot += qv[i] * dist[i];
            qq += qv[i] * qv[i];
            dd += dist[i] * dist[i];
        }
        oracle.emplace_back(word, dot / (std::sqrt(qq) * std::sqrt(dd)));
    }
    std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });

    const auto ranked = nearest_words(lex, query, 49);
    REQUIRE(ranked.size() == oracle.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        CHECK(ranked[i].first == oracle[i].first);
        CHECK(ranked[i].second == doctest::Approx(oracle[i].second).epsilon(1e-12));
    }
}

#ifdef EMO3D_SOURCE_DIR
TEST_CASE("shipped template files match the embedded defaults") {
    const auto shipped = PromptTemplates::load(std::filesystem::path(EMO3D_SOURCE_DIR) / "templates");
    const auto defaults = PromptTemplates::defaults();
    CHECK(shipped.describe == defaults.describe);
    CHECK(shipped.distribution == defaults.distribution);
}

TEST_CASE("bundled sample lexicon loads and answers nearest-word queries") {
    const auto lex = EmotionLexicon::load(std::filesystem::path(EMO3D_SOURCE_DIR) /
                                          "assets" / "lexicon_sample.tsv");
    CHECK(lex.size() >= 20);
    const auto near = nearest_words(lex, "surprise", 3);
    REQUIRE(near.size() == 3);
    // the surprise-dominant words cluster together
    CHECK((near[0].first == "astonishment" || near[0].first == "amazement" ||
           near[0].first == "shock"));
}
#endif

TEST_CASE("prompt template rendering and hashing") {
    const auto templates = PromptTemplates::defaults();
    const auto rendered = render_template(templates.describe, {{"emotion", "fear"},
                                                               {"index", "3"},
                                                               {"attempt", "0"}});
    CHECK(rendered.find("fear") != std::string::npos);
    CHECK(rendered.find("{emotion}") == std::string::npos);
    CHECK(templates.describe_hash().size() == 64);

    const auto dir = fresh_dir("templates");
    {
        std::ofstream(dir / "describe.txt") << "custom {emotion} template";
        std::ofstream(dir / "distribution.txt") << "custom distribution: {text}";
    }
    const auto loaded = PromptTemplates::load(dir);
    CHECK(loaded.describe == "custom {emotion} template");
    CHECK(loaded.describe_hash() != templates.describe_hash());
}
