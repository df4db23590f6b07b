#include "nrbf/extractor.hpp"

#include <cmath>
#include <stdexcept>

namespace nrbf {

FeatureExtractor FeatureExtractor::init(const std::vector<std::size_t>& layer_dims, Rng& rng) {
    if (layer_dims.size() < 2) {
        throw std::invalid_argument("FeatureExtractor: need input and output dims");
    }
    for (std::size_t d : layer_dims) {
        if (d < 1) throw std::invalid_argument("FeatureExtractor: zero layer dim");
    }
    FeatureExtractor fe;
    fe.layer_dims_ = layer_dims;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const std::size_t fan_in = layer_dims[l];
        const std::size_t fan_out = layer_dims[l + 1];
        AffineLayer layer;
        layer.weights = Matrix(fan_in, fan_out);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& w : layer.weights.data()) w = rng.uniform(-limit, limit);
        layer.biases.assign(fan_out, 0.0);
        fe.layers_.push_back(std::move(layer));
    }
    const std::size_t p = layer_dims.back();
    fe.bn_.gamma.assign(p, 1.0);
    fe.bn_.beta.assign(p, 0.0);
    fe.bn_.running_mean.assign(p, 0.0);
    fe.bn_.running_var.assign(p, 1.0);
    return fe;
}

EmbeddingBatch FeatureExtractor::forward(const Matrix& x) {
    if (x.cols() != input_dim()) {
        throw DimensionError("forward: input has " + std::to_string(x.cols()) +
                             " features, expected " + std::to_string(input_dim()));
    }
    const std::size_t batch = x.rows();
    const bool training = mode_ == Mode::Training;
    if (training && batch < 2) {
        throw std::invalid_argument("forward: training mode needs batch size >= 2");
    }

    EmbeddingBatch out;
    ForwardCache& cache = out.cache;
    if (training) cache.input = x;

    Matrix cur = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Matrix z = matmul(cur, layers_[l].weights);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            auto row = z.row(i);
            for (std::size_t j = 0; j < row.size(); ++j) row[j] += layers_[l].biases[j];
        }
        if (training) cache.pre_activations.push_back(z);
        if (l + 1 < layers_.size()) {
            for (double& v : z.data()) v = std::max(0.0, v);
            if (training) cache.post_activations.push_back(z);
        }
        cur = std::move(z);
    }

    // Batch normalization over the final affine output.
    const std::size_t p = embedding_dim();
    Matrix emb(batch, p);
    if (training) {
        std::vector<double> mean(p, 0.0);
        std::vector<double> var(p, 0.0);
        for (std::size_t i = 0; i < batch; ++i) {
            const auto row = cur.row(i);
            for (std::size_t j = 0; j < p; ++j) mean[j] += row[j];
        }
        for (double& m : mean) m /= static_cast<double>(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            const auto row = cur.row(i);
            for (std::size_t j = 0; j < p; ++j) {
                const double d = row[j] - mean[j];
                var[j] += d * d;
            }
        }
        for (double& v : var) v /= static_cast<double>(batch);

        cache.bn_mean = mean;
        cache.bn_inv_std.resize(p);
        for (std::size_t j = 0; j < p; ++j) {
            cache.bn_inv_std[j] = 1.0 / std::sqrt(var[j] + bn_.epsilon);
        }
        cache.bn_xhat = Matrix(batch, p);
        for (std::size_t i = 0; i < batch; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                const double xh = (cur(i, j) - mean[j]) * cache.bn_inv_std[j];
                cache.bn_xhat(i, j) = xh;
                emb(i, j) = bn_.gamma[j] * xh + bn_.beta[j];
            }
        }
        for (std::size_t j = 0; j < p; ++j) {
            bn_.running_mean[j] = bn_.momentum * bn_.running_mean[j] +
                                  (1.0 - bn_.momentum) * mean[j];
            bn_.running_var[j] = bn_.momentum * bn_.running_var[j] +
                                 (1.0 - bn_.momentum) * var[j];
        }
        cache.valid = true;
    } else {
        for (std::size_t i = 0; i < batch; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                const double xh = (cur(i, j) - bn_.running_mean[j]) /
                                  std::sqrt(bn_.running_var[j] + bn_.epsilon);
                emb(i, j) = bn_.gamma[j] * xh + bn_.beta[j];
            }
        }
    }
    out.values = std::move(emb);
    return out;
}

std::pair<ExtractorGrads, Matrix> FeatureExtractor::backward(
    const EmbeddingBatch& emb, const Matrix& grad_embedding) const {
    const ForwardCache& cache = emb.cache;
    if (!cache.valid) {
        throw std::logic_error("backward: no cache; run a training-mode forward first");
    }
    const std::size_t batch = grad_embedding.rows();
    const std::size_t p = embedding_dim();
    if (grad_embedding.cols() != p || batch != cache.bn_xhat.rows()) {
        throw DimensionError("backward: upstream gradient shape mismatch");
    }

    ExtractorGrads grads = zero_grads();

    // Batch norm backward through the batch-statistics path.
    std::vector<double> sum_dxhat(p, 0.0);
    std::vector<double> sum_dxhat_xhat(p, 0.0);
    Matrix dxhat(batch, p);
    for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const double g = grad_embedding(i, j);
            grads.gamma[j] += g * cache.bn_xhat(i, j);
            grads.beta[j] += g;
            const double dxh = g * bn_.gamma[j];
            dxhat(i, j) = dxh;
            sum_dxhat[j] += dxh;
            sum_dxhat_xhat[j] += dxh * cache.bn_xhat(i, j);
        }
    }
    Matrix grad_cur(batch, p);
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            grad_cur(i, j) = cache.bn_inv_std[j] * inv_b *
                             (static_cast<double>(batch) * dxhat(i, j) - sum_dxhat[j] -
                              cache.bn_xhat(i, j) * sum_dxhat_xhat[j]);
        }
    }

    // Affine/ReLU layers, last to first.
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const Matrix& layer_input =
            li == 0 ? cache.input : cache.post_activations[li - 1];
        grads.weights[li] = matmul(transpose(layer_input), grad_cur);
        for (std::size_t i = 0; i < batch; ++i) {
            const auto row = grad_cur.row(i);
            for (std::size_t j = 0; j < row.size(); ++j) grads.biases[li][j] += row[j];
        }
        if (li == 0) {
            grad_cur = matmul(grad_cur, transpose(layers_[0].weights));
            break;
        }
        Matrix grad_prev = matmul(grad_cur, transpose(layers_[li].weights));
        // ReLU mask from the previous layer's pre-activations.
        const Matrix& pre = cache.pre_activations[li - 1];
        for (std::size_t i = 0; i < grad_prev.rows(); ++i) {
            for (std::size_t j = 0; j < grad_prev.cols(); ++j) {
                if (pre(i, j) <= 0.0) grad_prev(i, j) = 0.0;
            }
        }
        grad_cur = std::move(grad_prev);
    }
    return {std::move(grads), std::move(grad_cur)};
}

ExtractorGrads FeatureExtractor::zero_grads() const {
    ExtractorGrads g;
    for (const auto& layer : layers_) {
        g.weights.emplace_back(layer.weights.rows(), layer.weights.cols());
        g.biases.emplace_back(layer.biases.size(), 0.0);
    }
    g.gamma.assign(bn_.gamma.size(), 0.0);
    g.beta.assign(bn_.beta.size(), 0.0);
    return g;
}

std::vector<std::vector<double>*> FeatureExtractor::parameters() {
    std::vector<std::vector<double>*> out;
    for (auto& layer : layers_) {
        out.push_back(&layer.weights.data());
        out.push_back(&layer.biases);
    }
    out.push_back(&bn_.gamma);
    out.push_back(&bn_.beta);
    return out;
}

std::vector<const std::vector<double>*> flatten_grads(const ExtractorGrads& g) {
    std::vector<const std::vector<double>*> out;
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        out.push_back(&g.weights[l].data());
        out.push_back(&g.biases[l]);
    }
    out.push_back(&g.gamma);
    out.push_back(&g.beta);
    return out;
}

}  // namespace nrbf
