#include <benchmark/benchmark.h>

#include "nrbf/clustering.hpp"
#include "nrbf/heads.hpp"
#include "nrbf/matrix.hpp"
#include "nrbf/rng.hpp"

namespace {

using namespace nrbf;

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
    return m;
}

void BM_matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const Matrix a = random_matrix(n, n, rng);
    const Matrix b = random_matrix(n, n, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matmul(a, b));
    }
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_rbf_posterior(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    RBFHead head;
    head.num_classes = 10;
    head.centers = random_matrix(30, 64, rng);
    for (int c = 0; c < 10; ++c)
        for (int j = 0; j < 3; ++j) head.center_labels.push_back(c);
    const Matrix emb = random_matrix(batch, 64, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rbf_posterior(head, emb));
    }
}
BENCHMARK(BM_rbf_posterior)->Arg(32)->Arg(256);

void BM_rbf_grads(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    RBFHead head;
    head.num_classes = 10;
    head.centers = random_matrix(30, 64, rng);
    std::vector<int> labels;
    for (int c = 0; c < 10; ++c)
        for (int j = 0; j < 3; ++j) head.center_labels.push_back(c);
    for (std::size_t i = 0; i < batch; ++i) {
        labels.push_back(static_cast<int>(rng.uniform_index(10)));
    }
    const Matrix emb = random_matrix(batch, 64, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rbf_loss_and_grads(head, emb, labels));
    }
}
BENCHMARK(BM_rbf_grads)->Arg(32)->Arg(256);

void BM_kmeans(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(4);
    const Matrix pts = random_matrix(n, 16, rng);
    for (auto _ : state) {
        Rng r(5);
        benchmark::DoNotOptimize(kmeans(pts, 8, r, 50, 1e-6, 3));
    }
}
BENCHMARK(BM_kmeans)->Arg(200)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
