#include <doctest.h>

#include <cmath>

#include "nrbf/extractor.hpp"
#include "nrbf/gradcheck.hpp"

using namespace nrbf;

namespace {

Matrix random_batch(std::size_t b, std::size_t d, Rng& rng) {
    Matrix m(b, d);
    for (double& v : m.data()) v = rng.uniform(-1.5, 1.5);
    return m;
}

// Loss linear in the embedding: sum of c_ij * emb_ij for a fixed random c.
// Its embedding gradient is exactly c, which isolates the extractor backward.
double linear_probe_loss(FeatureExtractor fe, const Matrix& x, const Matrix& c) {
    const EmbeddingBatch emb = fe.forward(x);
    double loss = 0.0;
    for (std::size_t i = 0; i < emb.values.size(); ++i) {
        loss += c.data()[i] * emb.values.data()[i];
    }
    return loss;
}

}  // namespace

TEST_CASE("init: glorot bound, zero biases, unit gamma") {
    Rng rng(1);
    const FeatureExtractor fe = FeatureExtractor::init({4, 4}, rng);
    REQUIRE(fe.layers().size() == 1);
    const double limit = std::sqrt(6.0 / 8.0);
    for (double w : fe.layers()[0].weights.data()) CHECK(std::abs(w) <= limit);
    for (double b : fe.layers()[0].biases) CHECK(b == 0.0);
    for (double g : fe.batchnorm().gamma) CHECK(g == 1.0);
    for (double b : fe.batchnorm().beta) CHECK(b == 0.0);
    for (double m : fe.batchnorm().running_mean) CHECK(m == 0.0);
    for (double v : fe.batchnorm().running_var) CHECK(v == 1.0);
}

TEST_CASE("init determinism") {
    Rng a(2), b(2);
    const FeatureExtractor f1 = FeatureExtractor::init({3, 5, 2}, a);
    const FeatureExtractor f2 = FeatureExtractor::init({3, 5, 2}, b);
    for (std::size_t l = 0; l < f1.layers().size(); ++l) {
        CHECK(f1.layers()[l].weights.data() == f2.layers()[l].weights.data());
    }
}

TEST_CASE("forward: batch norm is a fixed point on normalized input") {
    Rng rng(3);
    FeatureExtractor fe = FeatureExtractor::init({2, 2}, rng);
    // Identity affine layer.
    fe.layers()[0].weights = Matrix(2, 2, {1, 0, 0, 1});
    // Batch with exact zero mean and unit (biased) variance per feature.
    const Matrix x(2, 2, {1.0, -1.0, -1.0, 1.0});
    const EmbeddingBatch emb = fe.forward(x);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(emb.values.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-4));
    }
}

TEST_CASE("forward: all-negative hidden pre-activations give zero ReLU output") {
    Rng rng(4);
    FeatureExtractor fe = FeatureExtractor::init({2, 3, 2}, rng);
    for (double& b : fe.layers()[0].biases) b = -100.0;
    for (double& w : fe.layers()[0].weights.data()) w = 0.01;
    const Matrix x(2, 2, {0.5, -0.5, 1.0, 0.25});
    const EmbeddingBatch emb = fe.forward(x);
    for (double v : emb.cache.post_activations[0].data()) CHECK(v == 0.0);
}

TEST_CASE("forward: training mode rejects single-row batches") {
    Rng rng(5);
    FeatureExtractor fe = FeatureExtractor::init({2, 2}, rng);
    CHECK_THROWS_AS(fe.forward(Matrix(1, 2)), std::invalid_argument);
    fe.set_mode(Mode::Inference);
    CHECK_NOTHROW(fe.forward(Matrix(1, 2)));
}

TEST_CASE("inference output is batch-size independent") {
    Rng rng(6);
    FeatureExtractor fe = FeatureExtractor::init({3, 4, 2}, rng);
    // Populate running stats with a few training passes.
    for (int i = 0; i < 3; ++i) fe.forward(random_batch(8, 3, rng));
    fe.set_mode(Mode::Inference);

    const Matrix big = random_batch(8, 3, rng);
    const EmbeddingBatch all = fe.forward(big);
    Matrix single(1, 3);
    std::copy(big.row(5).begin(), big.row(5).end(), single.row(0).begin());
    const EmbeddingBatch one = fe.forward(single);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(one.values(0, j) == doctest::Approx(all.values(5, j)).epsilon(1e-12));
    }
}

TEST_CASE("training batch-norm stats: mean 0, variance 1 before gamma/beta") {
    Rng rng(7);
    FeatureExtractor fe = FeatureExtractor::init({3, 5, 4}, rng);
    const Matrix x = random_batch(16, 3, rng);
    const EmbeddingBatch emb = fe.forward(x);
    const Matrix& xhat = emb.cache.bn_xhat;
    const Matrix& z = emb.cache.pre_activations.back();
    const double eps = fe.batchnorm().epsilon;
    for (std::size_t j = 0; j < xhat.cols(); ++j) {
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < xhat.rows(); ++i) mean += xhat(i, j);
        mean /= static_cast<double>(xhat.rows());
        CHECK(std::abs(mean) <= 1e-9);
        // Undo the epsilon in the scale: the exactly-normalized values must
        // have unit biased variance.
        double z_mean = 0.0;
        for (std::size_t i = 0; i < z.rows(); ++i) z_mean += z(i, j);
        z_mean /= static_cast<double>(z.rows());
        double z_var = 0.0;
        for (std::size_t i = 0; i < z.rows(); ++i) {
            z_var += (z(i, j) - z_mean) * (z(i, j) - z_mean);
        }
        z_var /= static_cast<double>(z.rows());
        for (std::size_t i = 0; i < xhat.rows(); ++i) {
            const double exact = xhat(i, j) * std::sqrt(z_var + eps) / std::sqrt(z_var);
            var += exact * exact;
        }
        var /= static_cast<double>(xhat.rows());
        CHECK(std::abs(var - 1.0) <= 1e-9);
    }
}

TEST_CASE("backward: zero upstream gradient gives zero parameter gradients") {
    Rng rng(8);
    FeatureExtractor fe = FeatureExtractor::init({3, 4, 2}, rng);
    const Matrix x = random_batch(4, 3, rng);
    const EmbeddingBatch emb = fe.forward(x);
    const auto [grads, grad_in] = fe.backward(emb, Matrix(4, 2));
    for (const auto& w : grads.weights)
        for (double v : w.data()) CHECK(v == 0.0);
    for (const auto& b : grads.biases)
        for (double v : b) CHECK(v == 0.0);
    for (double v : grads.gamma) CHECK(v == 0.0);
    for (double v : grads.beta) CHECK(v == 0.0);
    for (double v : grad_in.data()) CHECK(v == 0.0);
}

TEST_CASE("backward requires a training-mode cache") {
    Rng rng(9);
    FeatureExtractor fe = FeatureExtractor::init({2, 2}, rng);
    fe.set_mode(Mode::Inference);
    const EmbeddingBatch emb = fe.forward(Matrix(2, 2));
    CHECK_THROWS_AS(fe.backward(emb, Matrix(2, 2)), std::logic_error);
}

TEST_CASE("backward: beta gradient closed form is the upstream column sum") {
    Rng rng(10);
    FeatureExtractor fe = FeatureExtractor::init({2, 3}, rng);
    const Matrix x = random_batch(5, 2, rng);
    const EmbeddingBatch emb = fe.forward(x);
    Matrix up = random_batch(5, 3, rng);
    const auto [grads, grad_in] = fe.backward(emb, up);
    for (std::size_t j = 0; j < 3; ++j) {
        double want = 0.0;
        for (std::size_t i = 0; i < 5; ++i) want += up(i, j);
        CHECK(grads.beta[j] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("full-network gradients pass finite differences") {
    for (std::uint64_t seed : {21, 22, 23, 24, 25}) {
        Rng rng(seed);
        const std::size_t d = 2 + seed % 3;
        const std::size_t h = 3 + seed % 4;
        const std::size_t p = 2 + seed % 2;
        FeatureExtractor fe = FeatureExtractor::init({d, h, p}, rng);
        const Matrix x = random_batch(5, d, rng);
        Matrix c = random_batch(5, p, rng);

        const EmbeddingBatch emb = fe.forward(x);
        const auto [grads, grad_in] = fe.backward(emb, c);

        // Every parameter tensor.
        auto params = fe.parameters();
        const auto flat = flatten_grads(grads);
        for (std::size_t t = 0; t < params.size(); ++t) {
            std::vector<double>& tensor = *params[t];
            const auto f = [&](std::span<const double> v) {
                std::vector<double> saved = tensor;
                std::copy(v.begin(), v.end(), tensor.begin());
                const double loss = linear_probe_loss(fe, x, c);
                tensor = saved;
                return loss;
            };
            const std::vector<double> point = tensor;
            CHECK(check_gradient(f, *flat[t], point, 1e-5) <= 1e-5);
        }

        // Input gradient (flattened batch).
        const auto f_in = [&](std::span<const double> v) {
            Matrix xp(x.rows(), x.cols(),
                      std::vector<double>(v.begin(), v.end()));
            return linear_probe_loss(fe, xp, c);
        };
        CHECK(check_gradient(f_in, grad_in.data(), x.data(), 1e-5) <= 1e-5);
    }
}
