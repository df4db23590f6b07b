#include "nrbf/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nrbf {

namespace {

double nearest_center(const Matrix& points, std::size_t i, const Matrix& centers,
                      std::size_t& best) {
    double best_d = std::numeric_limits<double>::infinity();
    best = 0;
    for (std::size_t j = 0; j < centers.rows(); ++j) {
        const double d = squared_euclidean(points.row(i), centers.row(j));
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best_d;
}

// k-means++ seeding: first center uniform, then proportional to squared
// distance from the nearest chosen center.
Matrix kmeanspp_seed(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centers(k, points.cols());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());

    std::size_t first = rng.uniform_index(n);
    std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = squared_euclidean(points.row(i), centers.row(c - 1));
            d2[i] = std::min(d2[i], d);
            total += d2[i];
        }
        std::size_t chosen = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (std::size_t i = 0; i < n; ++i) {
                target -= d2[i];
                if (target <= 0.0) {
                    chosen = i;
                    break;
                }
                chosen = i;
            }
        } else {
            chosen = rng.uniform_index(n);
        }
        std::copy(points.row(chosen).begin(), points.row(chosen).end(),
                  centers.row(c).begin());
    }
    return centers;
}

ClusteringResult lloyd_once(const Matrix& points, std::size_t k, Rng& rng,
                            std::size_t max_iter, double tol) {
    const std::size_t n = points.rows();
    const std::size_t dim = points.cols();

    ClusteringResult res;
    res.centers = kmeanspp_seed(points, k, rng);
    res.assignments.assign(n, 0);

    for (std::size_t it = 0; it < max_iter; ++it) {
        res.iterations = it + 1;
        double distortion = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            distortion += nearest_center(points, i, res.centers, res.assignments[i]);
        }
        res.distortion = distortion;
        res.distortion_trace.push_back(distortion);

        Matrix new_centers(k, dim);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = new_centers.row(res.assignments[i]);
            const auto src = points.row(i);
            for (std::size_t t = 0; t < dim; ++t) dst[t] += src[t];
            ++counts[res.assignments[i]];
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] == 0) {
                // Reseed an empty cluster to the point farthest from its center.
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = squared_euclidean(
                        points.row(i), res.centers.row(res.assignments[i]));
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                std::copy(points.row(far).begin(), points.row(far).end(),
                          new_centers.row(j).begin());
                res.assignments[far] = j;
            } else {
                auto dst = new_centers.row(j);
                for (double& v : dst) v /= static_cast<double>(counts[j]);
            }
        }

        double shift = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            shift = std::max(shift,
                             squared_euclidean(res.centers.row(j), new_centers.row(j)));
        }
        res.centers = std::move(new_centers);
        if (std::sqrt(shift) < tol) {
            res.converged = true;
            break;
        }
    }

    // Final assignment and distortion against the returned centers.
    double distortion = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        distortion += nearest_center(points, i, res.centers, res.assignments[i]);
    }
    if (!res.distortion_trace.empty() && distortion <= res.distortion_trace.back()) {
        res.distortion_trace.push_back(distortion);
    }
    res.distortion = distortion;
    return res;
}

}  // namespace

ClusteringResult kmeans(const Matrix& points, std::size_t k, Rng& rng,
                        std::size_t max_iter, double tol, std::size_t restarts) {
    if (k < 1 || points.rows() < k) {
        throw std::invalid_argument("kmeans: need n >= k >= 1 (n=" +
                                    std::to_string(points.rows()) +
                                    ", k=" + std::to_string(k) + ")");
    }
    ClusteringResult best;
    best.distortion = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
        ClusteringResult res = lloyd_once(points, k, rng, max_iter, tol);
        if (res.distortion < best.distortion) best = std::move(res);
    }
    return best;
}

ClusteringResult kmedoids(const Matrix& points, std::size_t k, Rng& rng,
                          std::size_t max_iter, std::size_t restarts) {
    const std::size_t n = points.rows();
    if (k < 1 || n < k) {
        throw std::invalid_argument("kmedoids: need n >= k >= 1");
    }

    ClusteringResult best;
    best.distortion = std::numeric_limits<double>::infinity();

    for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
        // Seed with k distinct rows.
        std::vector<std::size_t> medoids;
        {
            std::vector<std::size_t> perm(n);
            for (std::size_t i = 0; i < n; ++i) perm[i] = i;
            for (std::size_t i = n; i > 1; --i) {
                std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
            }
            medoids.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
        }

        std::vector<std::size_t> assign(n, 0);
        double cost = 0.0;
        std::size_t iterations = 0;
        bool converged = false;
        for (std::size_t it = 0; it < max_iter; ++it) {
            iterations = it + 1;
            cost = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double bd = std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < k; ++j) {
                    const double d = squared_euclidean(points.row(i), points.row(medoids[j]));
                    if (d < bd) {
                        bd = d;
                        assign[i] = j;
                    }
                }
                cost += bd;
            }
            // Per cluster, pick the member minimizing summed squared distance.
            bool changed = false;
            for (std::size_t j = 0; j < k; ++j) {
                std::vector<std::size_t> members;
                for (std::size_t i = 0; i < n; ++i) {
                    if (assign[i] == j) members.push_back(i);
                }
                if (members.empty()) continue;
                std::size_t best_m = medoids[j];
                double best_c = std::numeric_limits<double>::infinity();
                for (std::size_t cand : members) {
                    double c = 0.0;
                    for (std::size_t m : members) {
                        c += squared_euclidean(points.row(cand), points.row(m));
                    }
                    if (c < best_c) {
                        best_c = c;
                        best_m = cand;
                    }
                }
                if (best_m != medoids[j]) {
                    medoids[j] = best_m;
                    changed = true;
                }
            }
            if (!changed) {
                converged = true;
                break;
            }
        }

        // Final assignment/cost against the settled medoids.
        cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < k; ++j) {
                const double d = squared_euclidean(points.row(i), points.row(medoids[j]));
                if (d < bd) {
                    bd = d;
                    assign[i] = j;
                }
            }
            cost += bd;
        }

        if (cost < best.distortion) {
            best.centers = Matrix(k, points.cols());
            for (std::size_t j = 0; j < k; ++j) {
                std::copy(points.row(medoids[j]).begin(), points.row(medoids[j]).end(),
                          best.centers.row(j).begin());
            }
            best.assignments = assign;
            best.distortion = cost;
            best.iterations = iterations;
            best.converged = converged;
        }
    }
    return best;
}

RBFHead init_centers(FeatureExtractor& fe, const Dataset& train, std::size_t k_per_class,
                     InitMethod method, const KernelSpec& kernel, Rng& rng) {
    train.validate();
    const Mode saved = fe.mode();
    fe.set_mode(Mode::Inference);
    EmbeddingBatch all = fe.forward(train.features);
    fe.set_mode(saved);

    RBFHead head;
    head.kernel = kernel;
    head.num_classes = train.num_classes;
    head.centers = Matrix(train.num_classes * k_per_class, fe.embedding_dim());

    const auto by_class = train.indices_by_class();
    std::size_t out_row = 0;
    for (std::size_t c = 0; c < train.num_classes; ++c) {
        if (by_class[c].size() < k_per_class) {
            throw DataError("init_centers: class " + std::to_string(c) + " has " +
                            std::to_string(by_class[c].size()) + " samples, need >= " +
                            std::to_string(k_per_class));
        }
        Matrix class_emb(by_class[c].size(), fe.embedding_dim());
        for (std::size_t i = 0; i < by_class[c].size(); ++i) {
            const auto src = all.values.row(by_class[c][i]);
            std::copy(src.begin(), src.end(), class_emb.row(i).begin());
        }
        Rng class_rng = rng.split(c);
        const ClusteringResult res = method == InitMethod::KMeans
                                         ? kmeans(class_emb, k_per_class, class_rng)
                                         : kmedoids(class_emb, k_per_class, class_rng);
        for (std::size_t j = 0; j < k_per_class; ++j, ++out_row) {
            std::copy(res.centers.row(j).begin(), res.centers.row(j).end(),
                      head.centers.row(out_row).begin());
            head.center_labels.push_back(static_cast<int>(c));
        }
    }
    head.validate();
    return head;
}

}  // namespace nrbf
