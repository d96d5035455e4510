#include <benchmark/benchmark.h>

#include "rfa/dsp.hpp"
#include "rfa/extract.hpp"
#include "rfa/render.hpp"
#include "rfa/scene.hpp"

namespace {

rfa::SceneSpec lte_scene(std::uint32_t fft_size, std::uint64_t blocks) {
  rfa::SceneSpec s;
  s.settings = {806e6, 20e6, 30.0, fft_size};
  s.noise_floor_db = -70.0;
  s.emitters.push_back({rfa::EmitterKind::lte_like, 0.0, 18e6, 15.0, 1.0, 1, 3});
  s.duration_blocks = blocks;
  return s;
}

void BM_Spectrum(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  const auto block = rfa::generate_all(lte_scene(n, 1)).front();
  auto fft = rfa::make_fft(n);
  const rfa::PipelineConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rfa::compute_spectrum(block, cfg, rfa::WindowKind::hann, fft.get()));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Spectrum)->Arg(512)->Arg(2048)->Arg(8192);

void BM_SceneBlock(benchmark::State& state) {
  auto source = rfa::generate_scene(lte_scene(2048, ~std::uint64_t{0}));
  for (auto _ : state) benchmark::DoNotOptimize(source->next());
}
BENCHMARK(BM_SceneBlock);

void BM_PipelineBlock(benchmark::State& state) {
  const auto blocks = rfa::generate_all(lte_scene(2048, 64));
  rfa::SpectrumPipeline chain(blocks.front().settings, rfa::PipelineConfig{});
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(chain.process(blocks[i]));
    i = (i + 1) % blocks.size();
  }
}
BENCHMARK(BM_PipelineBlock);

void BM_RenderWaterfall(benchmark::State& state) {
  rfa::SpectrumPipeline chain({806e6, 20e6, 30.0, 2048}, rfa::PipelineConfig{});
  for (const auto& b : rfa::generate_all(lte_scene(2048, 800))) chain.process(b);
  const auto rows = chain.waterfall().snapshot();
  const rfa::RenderSpec spec;
  for (auto _ : state) benchmark::DoNotOptimize(rfa::render_waterfall(rows, spec));
}
BENCHMARK(BM_RenderWaterfall)->Unit(benchmark::kMillisecond);

void BM_ExtractAttributes(benchmark::State& state) {
  const std::string text =
      "Continuous block spanning the full 20 MHz channel; high SNR; cellular family; no co-channel interference.";
  for (auto _ : state) benchmark::DoNotOptimize(rfa::extract_attributes(text));
}
BENCHMARK(BM_ExtractAttributes);

}  // namespace

BENCHMARK_MAIN();
