#pragma once

#include <vector>

#include "nrbf/matrix.hpp"
#include "nrbf/rng.hpp"

namespace nrbf {

struct AffineLayer {
    Matrix weights;              // in x out
    std::vector<double> biases;  // length out
};

struct BatchNorm {
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.9;
    double epsilon = 1e-5;
};

enum class Mode { Training, Inference };

/// Activations retained by a training-mode forward pass, consumed by backward.
struct ForwardCache {
    Matrix input;
    std::vector<Matrix> pre_activations;   // one per affine layer
    std::vector<Matrix> post_activations;  // ReLU outputs for hidden layers
    Matrix bn_xhat;
    std::vector<double> bn_mean;
    std::vector<double> bn_inv_std;
    bool valid = false;
};

struct EmbeddingBatch {
    Matrix values;  // B x P
    ForwardCache cache;
};

struct ExtractorGrads {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    std::vector<double> gamma;
    std::vector<double> beta;
};

/// MLP feature extractor: affine + ReLU hidden layers, a final affine to the
/// embedding dimension, then batch normalization. The batch-norm output is the
/// embedding; no nonlinearity follows it.
class FeatureExtractor {
public:
    FeatureExtractor() = default;

    static FeatureExtractor init(const std::vector<std::size_t>& layer_dims, Rng& rng);

    EmbeddingBatch forward(const Matrix& x);
    /// Exact gradients through batch norm (batch-statistics path), ReLU and
    /// the affine layers. Requires a cache from a training-mode forward.
    std::pair<ExtractorGrads, Matrix> backward(const EmbeddingBatch& emb,
                                               const Matrix& grad_embedding) const;

    ExtractorGrads zero_grads() const;

    Mode mode() const { return mode_; }
    void set_mode(Mode m) { mode_ = m; }

    std::size_t input_dim() const { return layer_dims_.front(); }
    std::size_t embedding_dim() const { return layer_dims_.back(); }
    const std::vector<std::size_t>& layer_dims() const { return layer_dims_; }

    std::vector<AffineLayer>& layers() { return layers_; }
    const std::vector<AffineLayer>& layers() const { return layers_; }
    BatchNorm& batchnorm() { return bn_; }
    const BatchNorm& batchnorm() const { return bn_; }

    /// Trainable tensors in a fixed order (weights, biases per layer, then
    /// gamma, beta). ExtractorGrads::flatten lists gradients in the same order.
    std::vector<std::vector<double>*> parameters();

private:
    std::vector<std::size_t> layer_dims_;
    std::vector<AffineLayer> layers_;
    BatchNorm bn_;
    Mode mode_ = Mode::Training;
};

/// Gradient tensors in the same order as FeatureExtractor::parameters().
std::vector<const std::vector<double>*> flatten_grads(const ExtractorGrads& g);

}  // namespace nrbf
