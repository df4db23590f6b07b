#include "nrbf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace nrbf {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size() || predictions.empty()) {
        throw std::invalid_argument("accuracy: arrays must have equal nonzero length");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double silhouette(const Matrix& embeddings, const std::vector<int>& cluster_ids) {
    const std::size_t n = embeddings.rows();
    if (cluster_ids.size() != n || n < 2) {
        throw std::invalid_argument("silhouette: need >= 2 samples with matching ids");
    }
    // Compact cluster ids (they may be arbitrary ints, e.g. predicted classes
    // where some class never occurs).
    std::map<int, std::size_t> id_map;
    for (int id : cluster_ids) id_map.emplace(id, id_map.size());
    const std::size_t k = id_map.size();
    if (k < 2) throw std::invalid_argument("silhouette: all samples in one cluster");

    std::vector<std::size_t> cluster(n);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        cluster[i] = id_map[cluster_ids[i]];
        ++counts[cluster[i]];
    }

    double total = 0.0;
    std::vector<double> mean_dist(k);
    for (std::size_t i = 0; i < n; ++i) {
        if (counts[cluster[i]] == 1) continue;  // singleton scores 0
        std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            mean_dist[cluster[j]] +=
                std::sqrt(squared_euclidean(embeddings.row(i), embeddings.row(j)));
        }
        const double a = mean_dist[cluster[i]] /
                         static_cast<double>(counts[cluster[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c == cluster[i] || counts[c] == 0) continue;
            b = std::min(b, mean_dist[c] / static_cast<double>(counts[c]));
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

double distortion(const Matrix& embeddings, const std::vector<int>& labels,
                  const RBFHead& head) {
    head.validate();
    if (labels.size() != embeddings.rows()) {
        throw std::invalid_argument("distortion: label count mismatch");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < embeddings.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < head.num_centers(); ++j) {
            if (head.center_labels[j] != labels[i]) continue;
            best = std::min(best,
                            squared_euclidean(embeddings.row(i), head.centers.row(j)));
        }
        total += best;
    }
    return total;
}

Matrix center_distance_matrix(const RBFHead& head) {
    const std::size_t q = head.num_centers();
    Matrix d(q, q);
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = i + 1; j < q; ++j) {
            const double v =
                std::sqrt(squared_euclidean(head.centers.row(i), head.centers.row(j)));
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

}  // namespace nrbf
