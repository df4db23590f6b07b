#pragma once

#include <vector>

#include "nrbf/dataset.hpp"
#include "nrbf/extractor.hpp"
#include "nrbf/heads.hpp"
#include "nrbf/matrix.hpp"
#include "nrbf/rng.hpp"

namespace nrbf {

struct ClusteringResult {
    Matrix centers;                       // k x P
    std::vector<std::size_t> assignments; // nearest center per point
    double distortion = 0.0;              // sum of squared distances to assigned centers
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> distortion_trace; // per-iteration, non-increasing
};

/// Lloyd iterations with k-means++ seeding, best of `restarts` by distortion.
/// Empty clusters are reseeded to the point farthest from its current center.
ClusteringResult kmeans(const Matrix& points, std::size_t k, Rng& rng,
                        std::size_t max_iter = 100, double tol = 1e-6,
                        std::size_t restarts = 10);

/// Alternating medoid refinement with squared euclidean cost; medoids are
/// always rows of the input.
ClusteringResult kmedoids(const Matrix& points, std::size_t k, Rng& rng,
                          std::size_t max_iter = 100, std::size_t restarts = 10);

enum class InitMethod { KMeans, KMedoids };

/// Embeds each class subset with the extractor in inference mode, clusters it
/// into k_per_class groups, and stacks the resulting centers into an RBF head.
RBFHead init_centers(FeatureExtractor& fe, const Dataset& train, std::size_t k_per_class,
                     InitMethod method, const KernelSpec& kernel, Rng& rng);

}  // namespace nrbf
