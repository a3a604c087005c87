#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "emo3d/core.hpp"
#include "emo3d/hash.hpp"

using namespace emo3d;

namespace {

// independent summation oracle for Eq. 5: straightforward loop, no shared
// code with kl_divergence
double kl_oracle(const std::array<double, 8>& phi, const std::array<double, 8>& psi,
                 double eps) {
    double total = 0.0;
    for (int i = 0; i < 8; ++i) {
        if (phi[static_cast<std::size_t>(i)] == 0.0) {
            continue;
        }
        const double smoothed = (psi[static_cast<std::size_t>(i)] + eps) / (1.0 + 8.0 * eps);
        total += phi[static_cast<std::size_t>(i)] *
                 std::log(phi[static_cast<std::size_t>(i)] / smoothed);
    }
    return total;
}

EmotionDistribution random_interior_distribution(SplitMix64& rng) {
    // min component >= ~0.02 keeps the self-KL at eps=1e-6 below 1e-9
    std::array<double, 8> v{};
    for (auto& x : v) {
        x = 0.2 + rng.next_double();
    }
    return normalize_distribution(v);
}

EmotionDistribution random_distribution(SplitMix64& rng) {
    std::array<double, 8> v{};
    for (auto& x : v) {
        x = rng.next_double();
    }
    return normalize_distribution(v);
}

} // namespace

TEST_CASE("normalize_distribution scales to unit mass") {
    const auto d = normalize_distribution({2, 0, 0, 0, 0, 0, 0, 0});
    CHECK(d[0] == doctest::Approx(1.0));
    for (int i = 1; i < 8; ++i) {
        CHECK(d[i] == 0.0);
    }

    const auto u = normalize_distribution({1, 1, 1, 1, 1, 1, 1, 1});
    for (int i = 0; i < 8; ++i) {
        CHECK(u[i] == doctest::Approx(0.125));
    }
}

TEST_CASE("normalize_distribution error cases") {
    CHECK_THROWS_WITH_AS(normalize_distribution({0, 0, 0, 0, 0, 0, 0, 0}), doctest::Contains("ZeroMass"),
                         Error);
    CHECK_THROWS_AS(normalize_distribution({1, -0.5, 0, 0, 0, 0, 0, 0}), Error);
    try {
        normalize_distribution({1, -0.5, 0, 0, 0, 0, 0, 0});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NegativeMass);
    }
    // magnitude <= 1e-6 clamps to zero
    const auto d = normalize_distribution({1, -1e-7, 0, 0, 0, 0, 0, 0});
    CHECK(d[0] == doctest::Approx(1.0));
    CHECK(d[1] == 0.0);
}

TEST_CASE("normalize_distribution is idempotent") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::array<double, 8> raw{};
        for (auto& x : raw) {
            x = 3.0 * rng.next_double();
        }
        raw[0] += 1e-9; // keep away from all-zero
        const auto once = normalize_distribution(raw);
        const auto twice = normalize_distribution(once.values());
        for (int i = 0; i < 8; ++i) {
            CHECK(twice[i] == doctest::Approx(once[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("kl_divergence identity and closed forms") {
    const auto uniform = EmotionDistribution::uniform();
    CHECK(kl_divergence(uniform, uniform, 1e-6) == doctest::Approx(0.0).epsilon(1e-15));

    // phi one-hot vs uniform: smoothing keeps uniform fixed, so the value is
    // exactly ln 8
    const auto onehot = normalize_distribution({1, 0, 0, 0, 0, 0, 0, 0});
    const double got = kl_divergence(onehot, uniform, 1e-9);
    CHECK(got == doctest::Approx(std::log(8.0)).epsilon(1e-9));

    // uniform vs one-hot: large but finite; matches the summation oracle
    const double rev = kl_divergence(uniform, onehot, 1e-6);
    CHECK(std::isfinite(rev));
    CHECK(rev == doctest::Approx(kl_oracle(uniform.values(), onehot.values(), 1e-6)).epsilon(1e-9));
    CHECK(rev > 1.0);
}

TEST_CASE("kl_divergence matches the summation oracle on random pairs") {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const auto phi = random_distribution(rng);
        const auto psi = random_distribution(rng);
        const double got = kl_divergence(phi, psi, 1e-6);
        const double want = kl_oracle(phi.values(), psi.values(), 1e-6);
        CHECK(got == doctest::Approx(std::max(0.0, want)).epsilon(1e-12));
        CHECK(got >= 0.0);
    }
}

TEST_CASE("kl_divergence self-divergence stays tiny") {
    SplitMix64 rng(13);
    // interior distributions at the default eps
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_interior_distribution(rng);
        CHECK(kl_divergence(p, p, 1e-6) <= 1e-9);
    }
    // arbitrary distributions (including near-one-hot) at a smaller eps
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_distribution(rng);
        CHECK(kl_divergence(p, p, 1e-10) <= 1e-9);
    }
    const auto onehot = normalize_distribution({1, 0, 0, 0, 0, 0, 0, 0});
    CHECK(kl_divergence(onehot, onehot, 1e-10) <= 1e-9);
}

TEST_CASE("cosine_similarity basics") {
    const std::vector<double> a{1.0, 0.0};
    const std::vector<double> b{1.0, 1.0};
    CHECK(cosine_similarity(std::span(a), std::span(a)) == doctest::Approx(1.0));
    const std::vector<double> perp{0.0, 3.0};
    CHECK(cosine_similarity(std::span(a), std::span(perp)) == doctest::Approx(0.0));
    CHECK(cosine_similarity(std::span(a), std::span(b)) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

    const std::vector<double> zero{0.0, 0.0};
    try {
        cosine_similarity(std::span(a), std::span(zero));
        FAIL("expected ZeroNorm");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ZeroNorm);
    }
}

TEST_CASE("cosine_similarity scale invariance") {
    SplitMix64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(16);
        for (auto& x : a) {
            x = rng.next_gaussian();
        }
        const double c = 0.01 + 10.0 * rng.next_double();
        std::vector<double> scaled(a);
        for (auto& x : scaled) {
            x *= c;
        }
        CHECK(cosine_similarity(std::span(a), std::span(scaled)) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("one_hot picks argmax, ties to the lowest index") {
    const auto a = one_hot({0.1, 0.7, 0.2, 0, 0, 0, 0, 0});
    CHECK(a == std::array<double, 8>{0, 1, 0, 0, 0, 0, 0, 0});
    const auto tie = one_hot({0.5, 0.5, 0, 0, 0, 0, 0, 0});
    CHECK(tie == std::array<double, 8>{1, 0, 0, 0, 0, 0, 0, 0});
    const auto uni = one_hot({0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125});
    CHECK(uni == std::array<double, 8>{1, 0, 0, 0, 0, 0, 0, 0});
}

TEST_CASE("one_hot always sums to exactly one with one nonzero") {
    SplitMix64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        std::array<double, 8> v{};
        for (auto& x : v) {
            x = rng.next_gaussian();
        }
        const auto o = one_hot(v);
        double sum = 0.0;
        int nonzero = 0;
        for (double x : o) {
            sum += x;
            nonzero += x != 0.0 ? 1 : 0;
        }
        CHECK(sum == 1.0);
        CHECK(nonzero == 1);
    }
}

TEST_CASE("mse basics and brute-force oracle") {
    const auto zeros = BlendshapeVector::zeros();
    CHECK(mse(zeros, zeros) == 0.0);

    std::array<double, 52> tenth{};
    tenth.fill(0.1);
    const auto b = BlendshapeVector::from_values(tenth);
    CHECK(mse(zeros, b) == doctest::Approx(0.01).epsilon(1e-12));

    SplitMix64 rng(37);
    for (int trial = 0; trial < 20; ++trial) {
        std::array<double, 52> x{}, y{};
        for (auto& v : x) {
            v = rng.next_double();
        }
        for (auto& v : y) {
            v = rng.next_double();
        }
        const auto bx = BlendshapeVector::from_values(x);
        const auto by = BlendshapeVector::from_values(y);
        double expected = 0.0;
        for (int i = 0; i < 52; ++i) {
            expected += (x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)]) *
                        (x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)]);
        }
        expected /= 52.0;
        CHECK(mse(bx, by) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(mse(bx, by) == mse(by, bx));
    }
}

TEST_CASE("BlendshapeVector ingestion clamps within tolerance and rejects beyond") {
    std::array<double, 52> v{};
    v[0] = -5e-7;
    v[1] = 1.0 + 5e-7;
    const auto b = BlendshapeVector::from_values(v);
    CHECK(b[0] == 0.0);
    CHECK(b[1] == 1.0);

    v[2] = -1e-3;
    CHECK_THROWS_AS(BlendshapeVector::from_values(v), Error);
    v[2] = 1.001;
    CHECK_THROWS_AS(BlendshapeVector::from_values(v), Error);
}

TEST_CASE("emotion class names round-trip") {
    CHECK(emotion_name(0) == "happiness");
    CHECK(emotion_name(7) == "neutral");
    CHECK(emotion_from_name("sadness") == EmotionClass::sadness);
    CHECK(!emotion_from_name("boredom").has_value());
    CHECK(blendshape_channel_names().size() == 52);
    CHECK(blendshape_channel_index("jawOpen") == 25);
    CHECK(blendshape_channel_index("nosuch") == -1);
}

// ---- dataset I/O -----------------------------------------------------------

namespace {

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "emo3d-test-core";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string valid_record(const std::string& id, const std::string& split = "train") {
    std::string blend = "[";
    for (int i = 0; i < 52; ++i) {
        blend += i ? ",0.5" : "0.5";
    }
    blend += "]";
    return "{\"id\":\"" + id +
           "\",\"text\":\"a calm face\",\"image_path\":null,\"blendshapes\":" + blend +
           ",\"emotion\":[1,0,0,0,0,0,0,0],\"split\":\"" + split + "\"}";
}

} // namespace

TEST_CASE("load_dataset accepts a valid fixture and reports splits") {
    const auto path = temp_file("ok.jsonl");
    {
        std::ofstream out(path);
        out << valid_record("a", "train") << "\n"
            << valid_record("b", "val") << "\n"
            << valid_record("c", "test") << "\n";
    }
    const auto triads = load_dataset(path);
    REQUIRE(triads.size() == 3);
    const auto counts = count_splits(triads);
    CHECK(counts.train == 1);
    CHECK(counts.val == 1);
    CHECK(counts.test == 1);
    CHECK(triads[0].id == "a");
    CHECK(!triads[0].image_path.has_value());
}

TEST_CASE("load_dataset rejects a 51-value blendshape record") {
    const auto path = temp_file("short.jsonl");
    {
        std::string blend = "[";
        for (int i = 0; i < 51; ++i) {
            blend += i ? ",0.5" : "0.5";
        }
        blend += "]";
        std::ofstream out(path);
        out << "{\"id\":\"x\",\"text\":\"t\",\"image_path\":null,\"blendshapes\":" << blend
            << ",\"emotion\":[1,0,0,0,0,0,0,0],\"split\":\"train\"}\n";
    }
    try {
        load_dataset(path);
        FAIL("expected ValidationError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
        CHECK(std::string(e.what()).find("x") != std::string::npos);
    }
}

TEST_CASE("load_dataset rejects emotion mass far from one") {
    const auto path = temp_file("mass.jsonl");
    {
        std::string blend = "[";
        for (int i = 0; i < 52; ++i) {
            blend += i ? ",0" : "0";
        }
        blend += "]";
        std::ofstream out(path);
        out << "{\"id\":\"y\",\"text\":\"t\",\"image_path\":null,\"blendshapes\":" << blend
            << ",\"emotion\":[0.8,0,0,0,0,0,0,0],\"split\":\"train\"}\n";
    }
    try {
        load_dataset(path);
        FAIL("expected ValidationError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
    }
}

TEST_CASE("load_dataset reports the malformed line number") {
    const auto path = temp_file("broken.jsonl");
    {
        std::ofstream out(path);
        out << valid_record("a") << "\n" << "this is not json\n";
    }
    try {
        load_dataset(path);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("load_dataset rejects duplicate ids") {
    const auto path = temp_file("dup.jsonl");
    {
        std::ofstream out(path);
        out << valid_record("same") << "\n" << valid_record("same") << "\n";
    }
    try {
        load_dataset(path);
        FAIL("expected ValidationError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
        CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
    }
}

TEST_CASE("save/load dataset round trip") {
    SplitMix64 rng(91);
    std::vector<Triad> triads;
    for (int i = 0; i < 5; ++i) {
        Triad t;
        t.id = "rt-" + std::to_string(i);
        t.text = "round trip record " + std::to_string(i);
        if (i % 2 == 0) {
            t.image_path = "images/x" + std::to_string(i) + ".png";
        }
        std::array<double, 52> w{};
        for (auto& x : w) {
            x = rng.next_double();
        }
        t.blendshapes = BlendshapeVector::from_values(w);
        std::array<double, 8> e{};
        for (auto& x : e) {
            x = 0.1 + rng.next_double();
        }
        t.emotion = normalize_distribution(e);
        t.split = i < 3 ? Split::train : Split::test;
        if (i == 4) {
            // primitive emotion-word subset carries intensity/presentation
            t.intensity = 2;
            t.presentation = "b";
        }
        triads.push_back(std::move(t));
    }
    const auto path = temp_file("roundtrip.jsonl");
    save_dataset(path, triads);
    const auto loaded = load_dataset(path);
    REQUIRE(loaded.size() == triads.size());
    for (std::size_t i = 0; i < triads.size(); ++i) {
        CHECK(loaded[i].id == triads[i].id);
        CHECK(loaded[i].text == triads[i].text);
        CHECK(loaded[i].image_path == triads[i].image_path);
        CHECK(loaded[i].split == triads[i].split);
        for (int j = 0; j < 52; ++j) {
            CHECK(loaded[i].blendshapes[j] == triads[i].blendshapes[j]);
        }
        for (int j = 0; j < 8; ++j) {
            CHECK(loaded[i].emotion[j] == triads[i].emotion[j]);
        }
        CHECK(loaded[i].intensity == triads[i].intensity);
        CHECK(loaded[i].presentation == triads[i].presentation);
    }
}
