#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "emo3d/analysis.hpp"
#include "emo3d/hash.hpp"

using namespace emo3d;

namespace {

Triad make_triad(const std::string& id, const std::string& text, int cls) {
    Triad t;
    t.id = id;
    t.text = text;
    std::array<double, 8> e{};
    e[static_cast<std::size_t>(cls)] = 1.0;
    t.emotion = EmotionDistribution::from_values(e);
    t.split = Split::train;
    return t;
}

// 20-triad fixture spread over all classes with hand-checkable texts
std::vector<Triad> fixture20() {
    std::vector<Triad> out;
    int id = 0;
    const char* texts[20] = {
        "Calm face. Quiet eyes.",
        "A beaming smile spreads wide!",
        "Wide eyes stare... the mouth drops open.",
        "Tears well up; the lips tremble.",
        "A wrinkled nose and a curled lip.",
        "The chin lifts with a slanted smirk.",
        "Pale cheeks, trembling hands, wide eyes!",
        "A flat, unreadable expression rests.",
        "Bright eyes crinkle with joy. Joy wins.",
        "Brows slam down; the jaw clenches hard.",
        "Eyebrows raised high, mouth agape.",
        "Heavy eyelids droop toward the floor.",
        "A queasy grimace twists the mouth.",
        "Half-lidded eyes dismiss the room.",
        "Breath catches; eyes dart everywhere.",
        "Features settle into neutral stillness.",
        "Laughter lines frame a radiant grin.",
        "A snarl bares clenched teeth.",
        "A gasp escapes the open mouth.",
        "Shoulders sag beneath silent grief.",
    };
    for (int i = 0; i < 20; ++i) {
        out.push_back(make_triad("fx-" + std::to_string(id++), texts[i], i % 8));
    }
    return out;
}

} // namespace

TEST_CASE("assign_class follows argmax with lowest-index ties") {
    Triad sad = make_triad("a", "text", 3);
    CHECK(assign_class(sad) == EmotionClass::sadness);

    Triad uniform = make_triad("b", "text", 0);
    uniform.emotion = EmotionDistribution::uniform();
    CHECK(assign_class(uniform) == EmotionClass::happiness);

    Triad mixed = make_triad("c", "text", 0);
    mixed.emotion = EmotionDistribution::from_values({0.4, 0.35, 0.25, 0, 0, 0, 0, 0});
    CHECK(assign_class(mixed) == EmotionClass::happiness);
}

TEST_CASE("compute_stats on the documented single-triad example") {
    const std::vector<Triad> dataset{make_triad("one", "Calm face. Quiet eyes.", 0)};
    const auto stats = compute_stats(dataset);
    const auto& s = stats[0];
    CHECK(s.num_prompts == 1);
    CHECK(s.num_words == 4);
    CHECK(s.avg_sentence_len == doctest::Approx(2.0));
    CHECK(s.avg_word_len == doctest::Approx((4 + 4 + 5 + 4) / 4.0)); // 4.25
    CHECK(s.num_unique_words == 4);
    // single triad: zero std in every dimension
    for (int i = 0; i < 8; ++i) {
        CHECK(s.emotion_std[static_cast<std::size_t>(i)] == 0.0);
    }
    CHECK(s.word_count_histogram.at(4) == 1);
}

TEST_CASE("compute_stats matches an independent brute-force oracle on 20 triads") {
    const auto dataset = fixture20();
    const auto stats = compute_stats(dataset);

    // oracle: re-derive every column with separate, obvious code
    std::array<std::size_t, 8> words{}, chars{}, sentences{}, prompts{};
    std::array<std::set<std::string>, 8> unique;
    std::array<std::array<double, 8>, 8> mean{};
    for (const auto& t : dataset) {
        int best = 0;
        for (int i = 1; i < 8; ++i) {
            if (t.emotion[i] > t.emotion[best]) {
                best = i;
            }
        }
        const auto cls = static_cast<std::size_t>(best);
        ++prompts[cls];

        // tokenizer oracle: manual scan
        std::string token;
        std::vector<std::string> tokens;
        for (char c : t.text + " ") {
            if (std::isspace(static_cast<unsigned char>(c))) {
                while (!token.empty() && std::ispunct(static_cast<unsigned char>(token.front()))) {
                    token.erase(token.begin());
                }
                while (!token.empty() && std::ispunct(static_cast<unsigned char>(token.back()))) {
                    token.pop_back();
                }
                if (!token.empty()) {
                    tokens.push_back(token);
                }
                token.clear();
            } else {
                token.push_back(c);
            }
        }
        words[cls] += tokens.size();
        for (auto w : tokens) {
            chars[cls] += w.size();
            std::transform(w.begin(), w.end(), w.begin(), ::tolower);
            unique[cls].insert(w);
        }
        std::size_t sentence_words = 0;
        for (char c : t.text) {
            if (c == '.' || c == '!' || c == '?') {
                if (sentence_words > 0) {
                    ++sentences[cls];
                }
                sentence_words = 0;
            } else if (!std::isspace(static_cast<unsigned char>(c)) &&
                       !std::ispunct(static_cast<unsigned char>(c))) {
                ++sentence_words;
            }
        }
        if (sentence_words > 0) {
            ++sentences[cls];
        }
        for (int i = 0; i < 8; ++i) {
            mean[cls][static_cast<std::size_t>(i)] += t.emotion[i];
        }
    }

    std::size_t total_assigned = 0;
    for (int c = 0; c < 8; ++c) {
        const auto& s = stats[static_cast<std::size_t>(c)];
        total_assigned += s.num_prompts;
        CHECK(s.num_prompts == prompts[static_cast<std::size_t>(c)]);
        CHECK(s.num_words == words[static_cast<std::size_t>(c)]);
        CHECK(s.num_unique_words == unique[static_cast<std::size_t>(c)].size());
        if (words[static_cast<std::size_t>(c)] > 0) {
            CHECK(s.avg_word_len ==
                  doctest::Approx(static_cast<double>(chars[static_cast<std::size_t>(c)]) /
                                  static_cast<double>(words[static_cast<std::size_t>(c)])));
            CHECK(s.avg_sentence_len ==
                  doctest::Approx(static_cast<double>(words[static_cast<std::size_t>(c)]) /
                                  static_cast<double>(sentences[static_cast<std::size_t>(c)])));
        }
        for (int i = 0; i < 8; ++i) {
            const double m = prompts[static_cast<std::size_t>(c)] > 0
                                 ? mean[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] /
                                       static_cast<double>(prompts[static_cast<std::size_t>(c)])
                                 : 0.0;
            CHECK(s.emotion_mean[static_cast<std::size_t>(i)] == doctest::Approx(m));
        }
    }
    // assignment is total
    CHECK(total_assigned == dataset.size());
}

TEST_CASE("stats are additive over a disjoint concatenation") {
    const auto dataset = fixture20();
    const std::vector<Triad> first(dataset.begin(), dataset.begin() + 10);
    std::vector<Triad> second(dataset.begin() + 10, dataset.end());

    const auto all = compute_stats(dataset);
    const auto a = compute_stats(first);
    const auto b = compute_stats(second);
    for (int c = 0; c < 8; ++c) {
        CHECK(all[static_cast<std::size_t>(c)].num_words ==
              a[static_cast<std::size_t>(c)].num_words + b[static_cast<std::size_t>(c)].num_words);
        CHECK(all[static_cast<std::size_t>(c)].num_prompts ==
              a[static_cast<std::size_t>(c)].num_prompts +
                  b[static_cast<std::size_t>(c)].num_prompts);
    }
}

TEST_CASE("frequent_words ranks a planted high-frequency word first") {
    std::vector<Triad> dataset;
    dataset.push_back(make_triad("p1", "eyes eyes eyes eyes eyes", 2));
    dataset.push_back(make_triad("p2", "mouth mouth brow", 2));
    dataset.push_back(make_triad("p3", "jaw brow", 2));
    const auto ranked = frequent_words(dataset, EmotionClass::surprise, 10);
    REQUIRE(!ranked.empty());
    CHECK(ranked[0].first == "eyes");
    CHECK(ranked[0].second == 5);
    // non-increasing counts
    for (std::size_t i = 0; i + 1 < ranked.size(); ++i) {
        CHECK(ranked[i].second >= ranked[i + 1].second);
    }
}

TEST_CASE("frequent_words: top_n above vocabulary returns the full ranking") {
    std::vector<Triad> dataset{make_triad("p1", "alpha beta gamma", 1)};
    const auto ranked = frequent_words(dataset, EmotionClass::anger, 100);
    CHECK(ranked.size() == 3);
}

TEST_CASE("frequent_words filters stopwords, folds case, breaks ties lexicographically") {
    std::vector<Triad> dataset{
        make_triad("p1", "The Wide WIDE the eyes EYES zzz aaa", 4),
    };
    const auto ranked = frequent_words(dataset, EmotionClass::disgust, 10);
    // "the" is a stopword; wide and eyes both appear twice; aaa/zzz once
    REQUIRE(ranked.size() == 4);
    CHECK(ranked[0].first == "eyes");
    CHECK(ranked[1].first == "wide");
    CHECK(ranked[0].second == 2);
    CHECK(ranked[2].first == "aaa");
    CHECK(ranked[3].first == "zzz");
}

TEST_CASE("frequent_words on an empty class raises EmptyClassError") {
    std::vector<Triad> dataset{make_triad("p1", "text", 0)};
    try {
        frequent_words(dataset, EmotionClass::fear, 5);
        FAIL("expected EmptyClassError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyClass);
    }
}

TEST_CASE("frequent_words matches a brute-force counter oracle on the 20-triad fixture") {
    const auto dataset = fixture20();
    for (int cls = 0; cls < 8; ++cls) {
        std::map<std::string, std::size_t> counter;
        const std::set<std::string> stop(stopword_list().begin(), stopword_list().end());
        for (const auto& t : dataset) {
            if (t.emotion.argmax() != cls) {
                continue;
            }
            for (auto token : tokenize(t.text)) {
                std::transform(token.begin(), token.end(), token.begin(), ::tolower);
                if (!stop.contains(token)) {
                    ++counter[token];
                }
            }
        }
        std::vector<std::pair<std::string, std::size_t>> expected(counter.begin(), counter.end());
        std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) {
                return a.second > b.second;
            }
            return a.first < b.first;
        });
        CHECK(frequent_words(dataset, static_cast<EmotionClass>(cls), expected.size()) ==
              expected);
    }
}

TEST_CASE("stats JSON export carries every class") {
    const auto stats = compute_stats(fixture20());
    const std::string payload = stats_to_json(stats);
    for (int c = 0; c < 8; ++c) {
        CHECK(payload.find("\"" + emotion_name(c) + "\"") != std::string::npos);
    }
    CHECK(payload.find("word_count_histogram") != std::string::npos);
}

TEST_CASE("word histogram uses bin width 2") {
    std::vector<Triad> dataset{
        make_triad("a", "one", 0),           // 1 word -> bin 0
        make_triad("b", "one two", 0),       // 2 -> bin 2
        make_triad("c", "one two three", 0), // 3 -> bin 2
    };
    const auto stats = compute_stats(dataset);
    CHECK(stats[0].word_count_histogram.at(0) == 1);
    CHECK(stats[0].word_count_histogram.at(2) == 2);
}
