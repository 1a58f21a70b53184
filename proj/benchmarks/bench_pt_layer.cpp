#include <benchmark/benchmark.h>

#include "ptl/gradcheck.hpp"
#include "ptl/optim.hpp"
#include "ptl/pt_layer.hpp"
#include "ptl/random.hpp"

namespace {

using namespace ptl;

ImageTensor noise(Shape s, std::uint64_t seed) {
    Rng rng(seed);
    ImageTensor t(s);
    for (double& v : t.data()) v = rng.uniform();
    return t;
}

KernelSpec kernel_arg(int k) { return k == 0 ? KernelSpec::bilinear() : KernelSpec::bicubic(); }

void BM_Forward(benchmark::State& state) {
    const auto size = static_cast<std::size_t>(state.range(0));
    const auto m = static_cast<std::size_t>(state.range(1));
    const ImageTensor in = noise(Shape{1, size, size, 3}, 1);
    const PTLayer layer = make_layer(m, kernel_arg(static_cast<int>(state.range(2))), IdentityJitter{2});
    for (auto _ : state) benchmark::DoNotOptimize(layer.forward(in));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(size * size * m));
}
BENCHMARK(BM_Forward)->ArgsProduct({{32, 64, 128}, {1, 4}, {0, 1}});

void BM_Backward(benchmark::State& state) {
    const auto size = static_cast<std::size_t>(state.range(0));
    const auto m = static_cast<std::size_t>(state.range(1));
    const ImageTensor in = noise(Shape{1, size, size, 3}, 1);
    const PTLayer layer = make_layer(m, kernel_arg(static_cast<int>(state.range(2))), IdentityJitter{2});
    const ForwardResult fwd = layer.forward(in);
    const ImageTensor upstream = noise(fwd.output.shape(), 3);
    for (auto _ : state) benchmark::DoNotOptimize(layer.backward(fwd.cache, upstream));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(size * size * m));
}
BENCHMARK(BM_Backward)->ArgsProduct({{32, 64, 128}, {1, 4}, {0, 1}});

void BM_RectifierEpochs(benchmark::State& state) {
    const ImageTensor original = noise(Shape{1, 32, 32, 1}, 4);
    const HomographyParams p{1.02, 0.01, 0.5, -0.01, 0.99, -0.3, 0.0005, 0.0002};
    const ImageTensor distorted = PTLayer({Homography::from_params(p)}, KernelSpec::bilinear()).forward(original).output;
    const std::vector<ImagePair> pairs{{distorted, original}};
    TrainConfig cfg;
    cfg.epochs = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(train_rectifier(pairs, cfg));
}
BENCHMARK(BM_RectifierEpochs)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_GradcheckSuite(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(run_gradcheck_suite(1, 10, kernel_arg(static_cast<int>(state.range(0)))));
}
BENCHMARK(BM_GradcheckSuite)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
