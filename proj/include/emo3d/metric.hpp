#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emo3d/core.hpp"
#include "emo3d/embedding.hpp"
#include "emo3d/models.hpp"
#include "emo3d/render.hpp"

namespace emo3d {

// Fixed evaluation prompt set, class-stratified, with precomputed
// L2-normalized text embeddings (row i belongs to prompt i).
struct PromptBank {
    struct Prompt {
        std::string id;
        std::string text;
        EmotionDistribution emotion;
    };

    std::vector<Prompt> prompts;
    std::vector<std::vector<float>> embeddings;
    std::string backend_name;

    int size() const { return static_cast<int>(prompts.size()); }
};

// Stratified sample from the test split: floor(n/8) prompts per
// argmax-emotion class, remainder to the lowest class indices, uniform
// within class under the seed. Throws Stratification listing deficient
// classes.
PromptBank select_prompt_bank(const std::vector<Triad>& dataset, int n, std::uint64_t seed,
                              const EmbeddingBackend& backend);

// Cosine similarities between one query and every bank row. Parallel kernel
// plus the serial reference used by tests and the benchmark.
std::vector<double> bank_similarities(std::span<const float> query,
                                      const std::vector<std::vector<float>>& rows);
std::vector<double> bank_similarities_serial(std::span<const float> query,
                                             const std::vector<std::vector<float>>& rows);

// Indices of the k most similar bank rows, descending similarity, ties to
// the lower index. Throws Parameter unless 1 <= k <= n.
std::vector<int> retrieve_top_k(std::span<const float> image_emb, const PromptBank& bank, int k);

struct Emo3dScore {
    double kl = 0.0;
    double score = 0.5; // sigmoid(kl) in [0.5, 1)
};

// KL(phi || mean of retrieved) pushed through the logistic function. The
// retrieved mean is renormalized after averaging (a no-op for exact
// inputs).
Emo3dScore emo3d_score(const EmotionDistribution& phi,
                       std::span<const EmotionDistribution> retrieved, double eps = 1e-6);

struct MetricResult {
    struct PerPrompt {
        std::string prompt_id;
        double kl = 0.0;
        double emo3d = 0.5;
        bool failed = false;
        std::string error;
    };

    std::vector<PerPrompt> per_prompt; // bank order
    double mean_emo3d = 0.0;
    std::optional<double> mean_mse;
    int k = 0;
    int n = 0;
    std::string backend_name;
    std::string rig_name;
    std::size_t failures = 0;
};

// Full pipeline per bank prompt: predict -> render -> embed image ->
// retrieve top-k -> score against the prompt's own distribution. Failed
// prompts are excluded from the mean and counted; more than 10% failures
// raises Evaluation.
MetricResult evaluate_emo3d(const FEGModel& model, const PromptBank& bank,
                            const Renderer& renderer, const EmbeddingBackend& backend, int k,
                            double eps = 1e-6);

// Mean over triads of mse(predict(text), ground truth). Throws Parameter on
// an empty test set.
double evaluate_mse(const FEGModel& model, const std::vector<Triad>& testset);

// Table-2 style report: rows sorted by ascending mean Emo3D (lower is
// better), ties by model name.
struct ReportRow {
    std::string model;
    std::optional<double> mse;
    double emo3d = 0.0;
    int k = 0;
    int n = 0;
    std::string backend;
    std::string rig;
    std::size_t failures = 0;
};

std::vector<ReportRow> sorted_report_rows(std::vector<ReportRow> rows);
std::string report_text(const std::vector<ReportRow>& rows);  // aligned table
std::string report_csv(const std::vector<ReportRow>& rows);   // model,mse,emo3d,k,n,backend,rig,failures

} // namespace emo3d
