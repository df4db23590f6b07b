#include "nrbf/heads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nrbf {

void KernelSpec::validate() const {
    if (kind == KernelKind::Gaussian && alpha <= 0.0) {
        throw std::invalid_argument("KernelSpec: gaussian alpha must be > 0");
    }
    if (kind == KernelKind::Inverse && delta <= 0.0) {
        throw std::invalid_argument("KernelSpec: inverse delta must be > 0");
    }
}

double kernel_eval(const KernelSpec& spec, double diff_sq) {
    if (spec.kind == KernelKind::Gaussian) return std::exp(-spec.alpha * diff_sq);
    return 1.0 / (diff_sq + spec.delta);
}

SoftMaxHead init_softmax_head(std::size_t embedding_dim, std::size_t num_classes) {
    SoftMaxHead h;
    h.weights = Matrix(embedding_dim, num_classes);
    h.biases.assign(num_classes, 0.0);
    return h;
}

void RBFHead::validate() const {
    kernel.validate();
    if (centers.rows() != center_labels.size()) {
        throw std::invalid_argument("RBFHead: center/label count mismatch");
    }
    if (num_classes == 0) throw std::invalid_argument("RBFHead: no classes");
    std::vector<bool> seen(num_classes, false);
    for (int l : center_labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
            throw std::invalid_argument("RBFHead: center label out of range");
        }
        seen[static_cast<std::size_t>(l)] = true;
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (!seen[c]) {
            throw std::invalid_argument("RBFHead: class " + std::to_string(c) +
                                        " owns no center");
        }
    }
}

namespace {

Matrix logits_of(const SoftMaxHead& head, const Matrix& emb) {
    Matrix logits = matmul(emb, head.weights);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        auto row = logits.row(i);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += head.biases[c];
    }
    return logits;
}

// In-place row-wise softmax with max subtraction.
void softmax_rows(Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto row = m.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
}

void check_labels(const std::vector<int>& labels, std::size_t batch, std::size_t classes) {
    if (labels.size() != batch) {
        throw std::invalid_argument("labels: count does not match batch size");
    }
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= classes) {
            throw std::invalid_argument("labels: value out of range");
        }
    }
}

// Per-center responsibilities p_j for one embedding: kernel mass at center j
// divided by total mass. Gaussian goes through log-space softmax over
// -alpha d2; inverse uses the ratio directly (delta bounds the denominator).
std::vector<double> center_responsibilities(const RBFHead& head,
                                            std::span<const double> emb_row) {
    const std::size_t q = head.num_centers();
    std::vector<double> p(q);
    if (head.kernel.kind == KernelKind::Gaussian) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < q; ++j) {
            p[j] = -head.kernel.alpha * squared_euclidean(emb_row, head.centers.row(j));
            mx = std::max(mx, p[j]);
        }
        double sum = 0.0;
        for (double& v : p) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : p) v /= sum;
    } else {
        double sum = 0.0;
        for (std::size_t j = 0; j < q; ++j) {
            p[j] = 1.0 / (squared_euclidean(emb_row, head.centers.row(j)) +
                          head.kernel.delta);
            sum += p[j];
        }
        if (sum <= 0.0) {
            throw std::logic_error("rbf_posterior: total kernel mass underflowed");
        }
        for (double& v : p) v /= sum;
    }
    return p;
}

}  // namespace

Matrix softmax_posterior(const SoftMaxHead& head, const Matrix& emb) {
    Matrix p = logits_of(head, emb);
    softmax_rows(p);
    return p;
}

SoftMaxGrads softmax_loss_and_grads(const SoftMaxHead& head, const Matrix& emb,
                                    const std::vector<int>& labels) {
    const std::size_t batch = emb.rows();
    const std::size_t classes = head.num_classes();
    check_labels(labels, batch, classes);

    Matrix p = logits_of(head, emb);
    softmax_rows(p);

    SoftMaxGrads out;
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        out.loss -= std::log(p(i, static_cast<std::size_t>(labels[i])));
    }
    out.loss *= inv_b;

    // grad_logits = (p - onehot) / B, reusing p's storage.
    for (std::size_t i = 0; i < batch; ++i) {
        p(i, static_cast<std::size_t>(labels[i])) -= 1.0;
        for (auto& v : p.row(i)) v *= inv_b;
    }
    out.grad_weights = matmul(transpose(emb), p);
    out.grad_biases.assign(classes, 0.0);
    for (std::size_t i = 0; i < batch; ++i) {
        const auto row = p.row(i);
        for (std::size_t c = 0; c < classes; ++c) out.grad_biases[c] += row[c];
    }
    out.grad_embeddings = matmul(p, transpose(head.weights));
    return out;
}

Matrix rbf_posterior(const RBFHead& head, const Matrix& emb) {
    head.validate();
    if (emb.cols() != head.embedding_dim()) {
        throw DimensionError("rbf_posterior: embedding dim mismatch");
    }
    Matrix post(emb.rows(), head.num_classes);
    for (std::size_t i = 0; i < emb.rows(); ++i) {
        const auto p = center_responsibilities(head, emb.row(i));
        for (std::size_t j = 0; j < p.size(); ++j) {
            post(i, static_cast<std::size_t>(head.center_labels[j])) += p[j];
        }
    }
    return post;
}

RBFGrads rbf_loss_and_grads(const RBFHead& head, const Matrix& emb,
                            const std::vector<int>& labels) {
    head.validate();
    const std::size_t batch = emb.rows();
    const std::size_t q = head.num_centers();
    const std::size_t dim = head.embedding_dim();
    check_labels(labels, batch, head.num_classes);
    if (emb.cols() != dim) throw DimensionError("rbf_loss_and_grads: dim mismatch");

    RBFGrads out;
    out.grad_centers = Matrix(q, dim);
    out.grad_embeddings = Matrix(batch, dim);
    const double inv_b = 1.0 / static_cast<double>(batch);

    for (std::size_t i = 0; i < batch; ++i) {
        const auto emb_row = emb.row(i);
        const int y = labels[i];
        const auto p = center_responsibilities(head, emb_row);
        double class_mass = 0.0;
        for (std::size_t j = 0; j < q; ++j) {
            if (head.center_labels[j] == y) class_mass += p[j];
        }
        out.loss -= std::log(class_mass) * inv_b;

        for (std::size_t j = 0; j < q; ++j) {
            // The per-sample loss is log(total mass) - log(class mass), so
            // dL/dkappa_j = 1/S - 1[l_j=y]/S_y = resp_term / kappa_j with
            // resp_term = p_j - 1[l_j=y] p_j / class_mass.
            const double resp_term =
                p[j] - (head.center_labels[j] == y ? p[j] / class_mass : 0.0);
            double dl_dd2;
            if (head.kernel.kind == KernelKind::Gaussian) {
                // log kappa = -alpha d2, so dL/dd2 = -alpha * resp_term.
                dl_dd2 = -head.kernel.alpha * resp_term;
            } else {
                // kappa = 1/(d2+delta), dkappa/dd2 = -kappa^2,
                // so dL/dd2 = -resp_term * kappa.
                const double kappa =
                    1.0 / (squared_euclidean(emb_row, head.centers.row(j)) +
                           head.kernel.delta);
                dl_dd2 = -resp_term * kappa;
            }
            dl_dd2 *= inv_b;
            if (dl_dd2 == 0.0) continue;
            auto gc = out.grad_centers.row(j);
            auto ge = out.grad_embeddings.row(i);
            const auto mu = head.centers.row(j);
            for (std::size_t t = 0; t < dim; ++t) {
                const double diff = emb_row[t] - mu[t];
                ge[t] += dl_dd2 * 2.0 * diff;
                gc[t] -= dl_dd2 * 2.0 * diff;
            }
        }
    }
    return out;
}

SoftMaxHead rbf_to_softmax(const RBFHead& head) {
    head.validate();
    if (head.kernel.kind != KernelKind::Gaussian) {
        throw std::invalid_argument("rbf_to_softmax: requires a gaussian kernel");
    }
    if (head.num_centers() != head.num_classes) {
        throw std::invalid_argument("rbf_to_softmax: requires one center per class");
    }
    const double alpha = head.kernel.alpha;
    SoftMaxHead sm = init_softmax_head(head.embedding_dim(), head.num_classes);
    for (std::size_t j = 0; j < head.num_centers(); ++j) {
        const auto mu = head.centers.row(j);
        const std::size_t c = static_cast<std::size_t>(head.center_labels[j]);
        double sq = 0.0;
        for (std::size_t t = 0; t < mu.size(); ++t) {
            sm.weights(t, c) = 2.0 * alpha * mu[t];
            sq += mu[t] * mu[t];
        }
        sm.biases[c] = -alpha * sq;
    }
    return sm;
}

std::vector<int> predict(const Matrix& posterior) {
    std::vector<int> out(posterior.rows());
    for (std::size_t i = 0; i < posterior.rows(); ++i) {
        const auto row = posterior.row(i);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c] > row[best]) best = c;
        }
        out[i] = static_cast<int>(best);
    }
    return out;
}

}  // namespace nrbf
