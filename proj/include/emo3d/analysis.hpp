#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "emo3d/core.hpp"

namespace emo3d {

// Per-class corpus statistics. Tokenization: split on whitespace after
// stripping punctuation at token edges; word length counts characters of
// the stripped token; sentence boundaries are . ! ?; unique words are
// case-folded; emotion std is the population std; histogram bin width is 2
// words per prompt.
struct ClassStats {
    std::size_t num_prompts = 0;
    std::size_t num_words = 0;
    std::size_t num_unique_words = 0;
    double avg_word_len = 0.0;
    double avg_sentence_len = 0.0;
    std::array<double, kEmotionCount> emotion_mean{};
    std::array<double, kEmotionCount> emotion_std{};
    std::map<std::size_t, std::size_t> word_count_histogram; // bin start -> prompts
};

// argmax of the triad's emotion distribution; ties to the lowest index.
EmotionClass assign_class(const Triad& triad);

std::array<ClassStats, kEmotionCount> compute_stats(const std::vector<Triad>& dataset);

// Stopword-filtered, case-folded token frequencies for one class, ties by
// lexicographic order. Throws EmptyClass when the class has no triads.
std::vector<std::pair<std::string, std::size_t>> frequent_words(const std::vector<Triad>& dataset,
                                                                EmotionClass cls,
                                                                std::size_t top_n);

// Tokenizer internals, exposed for the analysis oracles.
std::vector<std::string> tokenize(const std::string& text);
std::size_t sentence_count(const std::string& text);
const std::vector<std::string>& stopword_list();

std::string stats_to_json(const std::array<ClassStats, kEmotionCount>& stats);

} // namespace emo3d
