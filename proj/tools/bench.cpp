// Serial vs OpenMP kernel comparison: rasterization, blendshape
// application, bank similarities and batch embedding.

#include <benchmark/benchmark.h>

#include "emo3d/embedding.hpp"
#include "emo3d/hash.hpp"
#include "emo3d/metric.hpp"
#include "emo3d/render.hpp"

namespace {

using namespace emo3d;

const FaceRig& bench_rig() {
    static const FaceRig rig = FaceRig::builtin();
    return rig;
}

BlendshapeVector bench_weights() {
    std::array<double, kBlendshapeCount> w{};
    SplitMix64 rng(11);
    for (auto& x : w) {
        x = rng.next_double();
    }
    return BlendshapeVector::from_values(w);
}

void bm_apply_blendshapes_serial(benchmark::State& state) {
    const auto w = bench_weights();
    for (auto _ : state) {
        benchmark::DoNotOptimize(apply_blendshapes_serial(bench_rig(), w));
    }
}
BENCHMARK(bm_apply_blendshapes_serial);

void bm_apply_blendshapes_parallel(benchmark::State& state) {
    const auto w = bench_weights();
    for (auto _ : state) {
        benchmark::DoNotOptimize(apply_blendshapes(bench_rig(), w));
    }
}
BENCHMARK(bm_apply_blendshapes_parallel);

void bm_render_serial(benchmark::State& state) {
    const auto vertices = apply_blendshapes_serial(bench_rig(), bench_weights());
    const RenderConfig config;
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_frontal_serial(vertices, bench_rig().faces, config));
    }
}
BENCHMARK(bm_render_serial);

void bm_render_parallel(benchmark::State& state) {
    const auto vertices = apply_blendshapes_serial(bench_rig(), bench_weights());
    const RenderConfig config;
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_frontal(vertices, bench_rig().faces, config));
    }
}
BENCHMARK(bm_render_parallel);

std::vector<std::vector<float>> bench_bank_rows(int n, int d) {
    std::vector<std::vector<float>> rows(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rows[static_cast<std::size_t>(i)] =
            hash_unit_vector("row-" + std::to_string(i), d, 5);
    }
    return rows;
}

void bm_bank_similarities_serial(benchmark::State& state) {
    const auto rows = bench_bank_rows(static_cast<int>(state.range(0)), 512);
    const auto query = hash_unit_vector("query", 512, 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(bank_similarities_serial(query, rows));
    }
}
BENCHMARK(bm_bank_similarities_serial)->Arg(1000)->Arg(10000);

void bm_bank_similarities_parallel(benchmark::State& state) {
    const auto rows = bench_bank_rows(static_cast<int>(state.range(0)), 512);
    const auto query = hash_unit_vector("query", 512, 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(bank_similarities(query, rows));
    }
}
BENCHMARK(bm_bank_similarities_parallel)->Arg(1000)->Arg(10000);

std::vector<std::string> bench_texts(int n) {
    std::vector<std::string> texts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        texts[static_cast<std::size_t>(i)] =
            "a slightly different description of a face number " + std::to_string(i);
    }
    return texts;
}

void bm_embed_batch_serial(benchmark::State& state) {
    const MockBackend backend(512);
    const auto texts = bench_texts(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(embed_text_batch_serial(backend, texts));
    }
}
BENCHMARK(bm_embed_batch_serial)->Arg(256);

void bm_embed_batch_parallel(benchmark::State& state) {
    const MockBackend backend(512);
    const auto texts = bench_texts(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(embed_text_batch(backend, texts));
    }
}
BENCHMARK(bm_embed_batch_parallel)->Arg(256);

} // namespace

BENCHMARK_MAIN();
