#include "emo3d/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace emo3d {

namespace {

bool is_edge_punct(char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

std::string strip_token(const std::string& raw) {
    std::size_t begin = 0;
    std::size_t end = raw.size();
    while (begin < end && is_edge_punct(raw[begin])) {
        ++begin;
    }
    while (end > begin && is_edge_punct(raw[end - 1])) {
        --end;
    }
    return raw.substr(begin, end - begin);
}

std::string fold_case(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::istringstream stream(text);
    std::string raw;
    std::vector<std::string> tokens;
    while (stream >> raw) {
        std::string token = strip_token(raw);
        if (!token.empty()) {
            tokens.push_back(std::move(token));
        }
    }
    return tokens;
}

std::size_t sentence_count(const std::string& text) {
    // segments delimited by . ! ? that contain at least one word
    std::size_t count = 0;
    bool segment_has_word = false;
    for (char c : text) {
        if (c == '.' || c == '!' || c == '?') {
            if (segment_has_word) {
                ++count;
            }
            segment_has_word = false;
        } else if (!std::isspace(static_cast<unsigned char>(c)) &&
                   !is_edge_punct(c)) {
            segment_has_word = true;
        }
    }
    if (segment_has_word) {
        ++count;
    }
    return count;
}

const std::vector<std::string>& stopword_list() {
    static const std::vector<std::string> words = {
        "a",     "an",    "and",   "are",   "as",    "at",    "be",    "by",   "for",
        "from",  "has",   "have",  "he",    "her",   "his",   "i",     "in",   "is",
        "it",    "its",   "of",    "on",    "or",    "s",     "she",   "that", "the",
        "their", "them",  "there", "they",  "this",  "to",    "was",   "were", "with",
        "you",   "your",  "we",    "our",   "but",   "not",   "no",    "so",   "up",
        "down",  "out",   "into",  "over",  "under", "while", "who",   "what", "when",
        "where", "which", "how",   "all",   "each",  "both",  "more",  "most", "some",
        "such",  "only",  "own",   "same",  "than",  "too",   "very",  "can",  "will",
        "just",  "him",   "my",    "me",    "do",    "does",  "did",   "had",  "if",
    };
    return words;
}

EmotionClass assign_class(const Triad& triad) {
    return static_cast<EmotionClass>(triad.emotion.argmax());
}

std::array<ClassStats, kEmotionCount> compute_stats(const std::vector<Triad>& dataset) {
    if (dataset.empty()) {
        throw Error(ErrorKind::Parameter, "compute_stats: empty dataset");
    }

    std::array<ClassStats, kEmotionCount> stats{};
    std::array<std::unordered_set<std::string>, kEmotionCount> unique;
    std::array<std::size_t, kEmotionCount> char_total{};
    std::array<std::size_t, kEmotionCount> sentence_total{};
    std::array<std::array<double, kEmotionCount>, kEmotionCount> sum{};
    std::array<std::array<double, kEmotionCount>, kEmotionCount> sum_sq{};

    for (const auto& t : dataset) {
        const auto cls = static_cast<std::size_t>(assign_class(t));
        auto& s = stats[cls];
        ++s.num_prompts;

        const auto tokens = tokenize(t.text);
        s.num_words += tokens.size();
        for (const auto& token : tokens) {
            char_total[cls] += token.size();
            unique[cls].insert(fold_case(token));
        }
        sentence_total[cls] += sentence_count(t.text);
        s.word_count_histogram[(tokens.size() / 2) * 2] += 1;

        for (int i = 0; i < kEmotionCount; ++i) {
            const double v = t.emotion[i];
            sum[cls][static_cast<std::size_t>(i)] += v;
            sum_sq[cls][static_cast<std::size_t>(i)] += v * v;
        }
    }

    for (int c = 0; c < kEmotionCount; ++c) {
        auto& s = stats[static_cast<std::size_t>(c)];
        s.num_unique_words = unique[static_cast<std::size_t>(c)].size();
        if (s.num_words > 0) {
            s.avg_word_len = static_cast<double>(char_total[static_cast<std::size_t>(c)]) /
                             static_cast<double>(s.num_words);
        }
        if (sentence_total[static_cast<std::size_t>(c)] > 0) {
            s.avg_sentence_len = static_cast<double>(s.num_words) /
                                 static_cast<double>(sentence_total[static_cast<std::size_t>(c)]);
        }
        if (s.num_prompts > 0) {
            const double n = static_cast<double>(s.num_prompts);
            for (int i = 0; i < kEmotionCount; ++i) {
                const double mean = sum[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] / n;
                const double var =
                    sum_sq[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] / n -
                    mean * mean;
                s.emotion_mean[static_cast<std::size_t>(i)] = mean;
                s.emotion_std[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, var));
            }
        }
    }
    return stats;
}

std::vector<std::pair<std::string, std::size_t>> frequent_words(const std::vector<Triad>& dataset,
                                                                EmotionClass cls,
                                                                std::size_t top_n) {
    static const std::unordered_set<std::string> stopwords(stopword_list().begin(),
                                                           stopword_list().end());
    std::unordered_map<std::string, std::size_t> counts;
    bool class_seen = false;
    for (const auto& t : dataset) {
        if (assign_class(t) != cls) {
            continue;
        }
        class_seen = true;
        for (const auto& token : tokenize(t.text)) {
            const std::string folded = fold_case(token);
            if (!stopwords.contains(folded)) {
                ++counts[folded];
            }
        }
    }
    if (!class_seen) {
        throw Error(ErrorKind::EmptyClass,
                    "no triads in class " + emotion_name(static_cast<int>(cls)));
    }

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    if (ranked.size() > top_n) {
        ranked.resize(top_n);
    }
    return ranked;
}

std::string stats_to_json(const std::array<ClassStats, kEmotionCount>& stats) {
    nlohmann::ordered_json out;
    for (int c = 0; c < kEmotionCount; ++c) {
        const auto& s = stats[static_cast<std::size_t>(c)];
        nlohmann::ordered_json j;
        j["num_prompts"] = s.num_prompts;
        j["num_words"] = s.num_words;
        j["num_unique_words"] = s.num_unique_words;
        j["avg_word_len"] = s.avg_word_len;
        j["avg_sentence_len"] = s.avg_sentence_len;
        j["emotion_mean"] = s.emotion_mean;
        j["emotion_std"] = s.emotion_std;
        nlohmann::ordered_json hist;
        for (const auto& [bin, count] : s.word_count_histogram) {
            hist[std::to_string(bin)] = count;
        }
        j["word_count_histogram"] = hist;
        out[emotion_name(c)] = j;
    }
    return out.dump(2) + "\n";
}

} // namespace emo3d
