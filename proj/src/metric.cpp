#include "emo3d/metric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "emo3d/hash.hpp"
#include "emo3d/parallel.hpp"

namespace emo3d {

PromptBank select_prompt_bank(const std::vector<Triad>& dataset, int n, std::uint64_t seed,
                              const EmbeddingBackend& backend) {
    if (n < 1) {
        throw Error(ErrorKind::Parameter, "select_prompt_bank: n must be >= 1");
    }

    std::array<std::vector<const Triad*>, kEmotionCount> by_class;
    for (const auto& t : dataset) {
        if (t.split == Split::test) {
            by_class[static_cast<std::size_t>(t.emotion.argmax())].push_back(&t);
        }
    }

    // floor(n/8) per class, remainder to the lowest class indices
    std::array<int, kEmotionCount> quota{};
    for (int c = 0; c < kEmotionCount; ++c) {
        quota[static_cast<std::size_t>(c)] = n / kEmotionCount;
    }
    for (int c = 0; c < n % kEmotionCount; ++c) {
        ++quota[static_cast<std::size_t>(c)];
    }

    std::string deficient;
    for (int c = 0; c < kEmotionCount; ++c) {
        const auto have = static_cast<int>(by_class[static_cast<std::size_t>(c)].size());
        if (have < quota[static_cast<std::size_t>(c)]) {
            if (!deficient.empty()) {
                deficient += ", ";
            }
            deficient += emotion_name(c) + " (" + std::to_string(have) + "/" +
                         std::to_string(quota[static_cast<std::size_t>(c)]) + ")";
        }
    }
    if (!deficient.empty()) {
        throw Error(ErrorKind::Stratification, "deficient classes: " + deficient);
    }

    PromptBank bank;
    bank.backend_name = backend.name();
    SplitMix64 rng(seed);
    for (int c = 0; c < kEmotionCount; ++c) {
        auto& pool = by_class[static_cast<std::size_t>(c)];
        // partial Fisher-Yates draw of quota[c] prompts
        const int want = quota[static_cast<std::size_t>(c)];
        for (int i = 0; i < want; ++i) {
            const auto j =
                i + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(pool.size() - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
            const Triad* t = pool[static_cast<std::size_t>(i)];
            bank.prompts.push_back({t->id, t->text, t->emotion});
        }
    }

    std::vector<std::string> texts;
    texts.reserve(bank.prompts.size());
    for (const auto& p : bank.prompts) {
        texts.push_back(p.text);
    }
    bank.embeddings = embed_text_batch(backend, texts);
    for (auto& row : bank.embeddings) {
        double norm2 = 0.0;
        for (float x : row) {
            norm2 += static_cast<double>(x) * x;
        }
        if (norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (auto& x : row) {
                x = static_cast<float>(static_cast<double>(x) * inv);
            }
        }
    }
    return bank;
}

namespace {

double row_cosine(std::span<const float> query, const std::vector<float>& row) {
    double dot = 0.0, qq = 0.0, rr = 0.0;
    const std::size_t d = std::min(query.size(), row.size());
    for (std::size_t i = 0; i < d; ++i) {
        const double a = query[i];
        const double b = row[i];
        dot += a * b;
        qq += a * a;
        rr += b * b;
    }
    if (qq == 0.0 || rr == 0.0) {
        throw Error(ErrorKind::ZeroNorm, "similarity: zero-norm vector");
    }
    return dot / (std::sqrt(qq) * std::sqrt(rr));
}

std::vector<double> similarities_impl(std::span<const float> query,
                                      const std::vector<std::vector<float>>& rows,
                                      bool parallel) {
    std::vector<double> sims(rows.size());
    auto body = [&](std::int64_t i) {
        sims[static_cast<std::size_t>(i)] = row_cosine(query, rows[static_cast<std::size_t>(i)]);
    };
    if (parallel) {
        parallel_for(static_cast<std::int64_t>(rows.size()), body);
    } else {
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(rows.size()); ++i) {
            body(i);
        }
    }
    return sims;
}

} // namespace

std::vector<double> bank_similarities(std::span<const float> query,
                                      const std::vector<std::vector<float>>& rows) {
    return similarities_impl(query, rows, true);
}

std::vector<double> bank_similarities_serial(std::span<const float> query,
                                             const std::vector<std::vector<float>>& rows) {
    return similarities_impl(query, rows, false);
}

std::vector<int> retrieve_top_k(std::span<const float> image_emb, const PromptBank& bank, int k) {
    const int n = bank.size();
    if (k < 1 || k > n) {
        throw Error(ErrorKind::Parameter,
                    "retrieve_top_k: k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(n) + "]");
    }
    const auto sims = bank_similarities(image_emb, bank.embeddings);
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
        const double sa = sims[static_cast<std::size_t>(a)];
        const double sb = sims[static_cast<std::size_t>(b)];
        if (sa != sb) {
            return sa > sb;
        }
        return a < b;
    });
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

Emo3dScore emo3d_score(const EmotionDistribution& phi,
                       std::span<const EmotionDistribution> retrieved, double eps) {
    if (retrieved.empty()) {
        throw Error(ErrorKind::Parameter, "emo3d_score: no retrieved distributions");
    }
    std::array<double, kEmotionCount> mean{};
    for (const auto& r : retrieved) {
        for (int i = 0; i < kEmotionCount; ++i) {
            mean[static_cast<std::size_t>(i)] += r[i];
        }
    }
    for (auto& x : mean) {
        x /= static_cast<double>(retrieved.size());
    }
    const EmotionDistribution psi_bar = normalize_distribution(mean);

    Emo3dScore out;
    out.kl = kl_divergence(phi, psi_bar, eps);
    out.score = 1.0 / (1.0 + std::exp(-out.kl));
    return out;
}

MetricResult evaluate_emo3d(const FEGModel& model, const PromptBank& bank,
                            const Renderer& renderer, const EmbeddingBackend& backend, int k,
                            double eps) {
    if (bank.backend_name != backend.name()) {
        throw Error(ErrorKind::Parameter,
                    "bank was built with backend \"" + bank.backend_name +
                        "\", evaluation uses \"" + backend.name() + "\"");
    }
    const int n = bank.size();
    if (n == 0) {
        throw Error(ErrorKind::Parameter, "evaluate_emo3d: empty prompt bank");
    }
    if (k < 1 || k > n) {
        throw Error(ErrorKind::Parameter, "evaluate_emo3d: k outside [1, n]");
    }

    MetricResult result;
    result.per_prompt.resize(static_cast<std::size_t>(n));
    result.k = k;
    result.n = n;
    result.backend_name = backend.name();
    result.rig_name = renderer.rig_name();

    // per-prompt slots; aggregation below is serial and index-ordered, so
    // the result is identical at any worker count
    parallel_for(n, [&](std::int64_t i) {
        auto& slot = result.per_prompt[static_cast<std::size_t>(i)];
        const auto& prompt = bank.prompts[static_cast<std::size_t>(i)];
        slot.prompt_id = prompt.id;
        try {
            const BlendshapeVector blend = model.predict(prompt.text);
            const Image img = renderer.render(blend);
            const auto emb = backend.embed_image(img);
            const auto top = retrieve_top_k(emb, bank, k);
            std::vector<EmotionDistribution> retrieved;
            retrieved.reserve(top.size());
            for (int j : top) {
                retrieved.push_back(bank.prompts[static_cast<std::size_t>(j)].emotion);
            }
            const Emo3dScore score = emo3d_score(prompt.emotion, retrieved, eps);
            slot.kl = score.kl;
            slot.emo3d = score.score;
        } catch (const std::exception& e) {
            slot.failed = true;
            slot.error = e.what();
        }
    });

    double sum = 0.0;
    std::size_t ok = 0;
    for (const auto& slot : result.per_prompt) {
        if (slot.failed) {
            ++result.failures;
        } else {
            sum += slot.emo3d;
            ++ok;
        }
    }
    if (result.failures * 10 > static_cast<std::size_t>(n)) {
        throw Error(ErrorKind::Evaluation,
                    std::to_string(result.failures) + "/" + std::to_string(n) +
                        " prompts failed (limit 10%)");
    }
    result.mean_emo3d = ok > 0 ? sum / static_cast<double>(ok) : 0.0;
    return result;
}

double evaluate_mse(const FEGModel& model, const std::vector<Triad>& testset) {
    if (testset.empty()) {
        throw Error(ErrorKind::Parameter, "evaluate_mse: empty test set");
    }
    double sum = 0.0;
    for (const auto& t : testset) {
        sum += mse(model.predict(t.text), t.blendshapes);
    }
    return sum / static_cast<double>(testset.size());
}

std::vector<ReportRow> sorted_report_rows(std::vector<ReportRow> rows) {
    std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.emo3d != b.emo3d) {
            return a.emo3d < b.emo3d;
        }
        return a.model < b.model;
    });
    return rows;
}

namespace {

std::string format_double(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

} // namespace

std::string report_text(const std::vector<ReportRow>& rows) {
    const auto sorted = sorted_report_rows(rows);
    std::size_t name_width = 5;
    for (const auto& r : sorted) {
        name_width = std::max(name_width, r.model.size());
    }
    std::ostringstream out;
    out << std::string(name_width + 22, '-') << "\n";
    out << "Model";
    out << std::string(name_width - 5 + 2, ' ') << "MSE       Emo3D\n";
    out << std::string(name_width + 22, '-') << "\n";
    for (const auto& r : sorted) {
        out << r.model << std::string(name_width - r.model.size() + 2, ' ');
        const std::string mse_s = r.mse ? format_double(*r.mse, "%.6g") : std::string("-");
        out << mse_s << std::string(mse_s.size() < 10 ? 10 - mse_s.size() : 1, ' ');
        out << format_double(r.emo3d, "%.4f") << "\n";
    }
    out << std::string(name_width + 22, '-') << "\n";
    return out.str();
}

std::string report_csv(const std::vector<ReportRow>& rows) {
    const auto sorted = sorted_report_rows(rows);
    std::ostringstream out;
    out << "model,mse,emo3d,k,n,backend,rig,failures\n";
    for (const auto& r : sorted) {
        out << r.model << ",";
        if (r.mse) {
            out << format_double(*r.mse, "%.9g");
        }
        out << "," << format_double(r.emo3d, "%.9g") << "," << r.k << "," << r.n << ","
            << r.backend << "," << r.rig << "," << r.failures << "\n";
    }
    return out.str();
}

} // namespace emo3d
