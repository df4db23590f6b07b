#pragma once

#include <stdexcept>
#include <vector>

#include "nrbf/matrix.hpp"

namespace nrbf {

enum class KernelKind { Gaussian, Inverse };

/// Kernel over squared euclidean distance. Gaussian: exp(-alpha d2);
/// inverse distance: 1 / (d2 + delta).
struct KernelSpec {
    KernelKind kind = KernelKind::Gaussian;
    double alpha = 1.0;   // gaussian inverse-bandwidth
    double delta = 1e-3;  // inverse-kernel offset

    void validate() const;
};

double kernel_eval(const KernelSpec& spec, double diff_sq);

struct SoftMaxHead {
    Matrix weights;              // P x C, column c is w_c
    std::vector<double> biases;  // length C

    std::size_t num_classes() const { return biases.size(); }
    std::size_t embedding_dim() const { return weights.rows(); }
};

SoftMaxHead init_softmax_head(std::size_t embedding_dim, std::size_t num_classes);

/// Learnable centers with class labels; the posterior for class c is the
/// ratio of class-c kernel mass to total kernel mass.
struct RBFHead {
    Matrix centers;                 // Q x P, row j is center j
    std::vector<int> center_labels; // length Q, values in [0, C)
    KernelSpec kernel;
    std::size_t num_classes = 0;

    std::size_t num_centers() const { return center_labels.size(); }
    std::size_t embedding_dim() const { return centers.cols(); }
    void validate() const;
};

Matrix softmax_posterior(const SoftMaxHead& head, const Matrix& emb);

struct SoftMaxGrads {
    double loss = 0.0;
    Matrix grad_weights;
    std::vector<double> grad_biases;
    Matrix grad_embeddings;
};

SoftMaxGrads softmax_loss_and_grads(const SoftMaxHead& head, const Matrix& emb,
                                    const std::vector<int>& labels);

Matrix rbf_posterior(const RBFHead& head, const Matrix& emb);

struct RBFGrads {
    double loss = 0.0;
    Matrix grad_centers;
    Matrix grad_embeddings;
};

RBFGrads rbf_loss_and_grads(const RBFHead& head, const Matrix& emb,
                            const std::vector<int>& labels);

/// Gaussian one-center-per-class heads are equivalent to a SoftMax head with
/// w_c = 2 alpha mu_c and b_c = -alpha mu_c^T mu_c.
SoftMaxHead rbf_to_softmax(const RBFHead& head);

/// Argmax per row; ties broken by the lowest class index.
std::vector<int> predict(const Matrix& posterior);

}  // namespace nrbf
