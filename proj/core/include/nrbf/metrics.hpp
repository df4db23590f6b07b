#pragma once

#include <vector>

#include "nrbf/heads.hpp"
#include "nrbf/matrix.hpp"

namespace nrbf {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

/// Mean silhouette s = (b - a) / max(a, b) with euclidean distances; samples
/// in singleton clusters score 0. Needs at least two distinct cluster ids.
double silhouette(const Matrix& embeddings, const std::vector<int>& cluster_ids);

/// Sum over samples of the squared distance to the nearest center of the
/// sample's own class (a sum, not a mean).
double distortion(const Matrix& embeddings, const std::vector<int>& labels,
                  const RBFHead& head);

/// Pairwise euclidean (not squared) distances between centers.
Matrix center_distance_matrix(const RBFHead& head);

}  // namespace nrbf
