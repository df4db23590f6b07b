#include <doctest.h>

#include <cmath>
#include <limits>

#include "nrbf/clustering.hpp"

using namespace nrbf;

namespace {

// Brute-force optimal 2-partition distortion: try every assignment of points
// into two non-empty groups, centers at group means.
double brute_force_two_partition(const Matrix& points) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 1; mask + 1 < (1u << n); ++mask) {
        std::vector<double> mean0(d, 0.0), mean1(d, 0.0);
        std::size_t n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = points.row(i);
            if (mask & (1u << i)) {
                for (std::size_t t = 0; t < d; ++t) mean0[t] += row[t];
                ++n0;
            } else {
                for (std::size_t t = 0; t < d; ++t) mean1[t] += row[t];
                ++n1;
            }
        }
        for (double& v : mean0) v /= static_cast<double>(n0);
        for (double& v : mean1) v /= static_cast<double>(n1);
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cost += squared_euclidean(points.row(i),
                                      (mask & (1u << i)) ? mean0 : mean1);
        }
        best = std::min(best, cost);
    }
    return best;
}

Matrix random_points(std::size_t n, std::size_t d, Rng& rng) {
    Matrix m(n, d);
    for (double& v : m.data()) v = rng.uniform(-3.0, 3.0);
    return m;
}

}  // namespace

TEST_CASE("kmeans k=1 returns the mean") {
    const Matrix pts(2, 2, {0, 0, 0, 2});
    Rng rng(1);
    const ClusteringResult r = kmeans(pts, 1, rng);
    CHECK(r.centers(0, 0) == doctest::Approx(0.0));
    CHECK(r.centers(0, 1) == doctest::Approx(1.0));
    CHECK(r.distortion == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("kmeans separates two well-split pairs") {
    const Matrix pts(4, 2, {0, 0, 0.1, 0, 10, 0, 10.1, 0});
    Rng rng(2);
    const ClusteringResult r = kmeans(pts, 2, rng);
    CHECK(r.distortion == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(r.distortion == doctest::Approx(brute_force_two_partition(pts)).epsilon(1e-9));
    std::vector<double> xs{r.centers(0, 0), r.centers(1, 0)};
    std::sort(xs.begin(), xs.end());
    CHECK(xs[0] == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(xs[1] == doctest::Approx(10.05).epsilon(1e-9));
}

TEST_CASE("kmeans k=n gives zero distortion") {
    Rng rng(3);
    const Matrix pts = random_points(5, 3, rng);
    const ClusteringResult r = kmeans(pts, 5, rng);
    CHECK(r.distortion <= 1e-18);
}

TEST_CASE("kmeans rejects n < k") {
    Rng rng(4);
    CHECK_THROWS_AS(kmeans(Matrix(2, 2), 3, rng), std::invalid_argument);
}

TEST_CASE("kmeans matches brute force on tiny random instances") {
    Rng rng(5);
    for (int inst = 0; inst < 10; ++inst) {
        const std::size_t n = 4 + static_cast<std::size_t>(inst % 5);
        const Matrix pts = random_points(n, 2, rng);
        const ClusteringResult r = kmeans(pts, 2, rng, 100, 1e-6, 10);
        const double want = brute_force_two_partition(pts);
        CHECK(r.distortion == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("lloyd distortion trace is non-increasing") {
    Rng rng(6);
    const Matrix pts = random_points(40, 3, rng);
    const ClusteringResult r = kmeans(pts, 4, rng);
    for (std::size_t i = 0; i + 1 < r.distortion_trace.size(); ++i) {
        CHECK(r.distortion_trace[i + 1] <= r.distortion_trace[i] + 1e-12);
    }
}

TEST_CASE("kmeans determinism under fixed seed") {
    Rng a(7), b(7);
    const Matrix pts = random_points(20, 2, a);
    Rng a2(8), b2(8);
    const Matrix pts2 = random_points(20, 2, b);
    const ClusteringResult r1 = kmeans(pts, 3, a2);
    const ClusteringResult r2 = kmeans(pts2, 3, b2);
    CHECK(r1.centers.data() == r2.centers.data());
    CHECK(r1.assignments == r2.assignments);
}

TEST_CASE("kmedoids 1-D three points picks the middle") {
    const Matrix pts(3, 1, {0, 1, 2});
    Rng rng(9);
    const ClusteringResult r = kmedoids(pts, 1, rng);
    CHECK(r.centers(0, 0) == 1.0);
    CHECK(r.distortion == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("kmedoids separates well-split pairs with input-row medoids") {
    const Matrix pts(4, 2, {0, 0, 0.1, 0, 10, 0, 10.1, 0});
    Rng rng(10);
    const ClusteringResult r = kmedoids(pts, 2, rng);
    // Best medoids: one row from each pair; the partner point sits at squared
    // distance 0.01, so the total cost is 0.02.
    CHECK(r.distortion == doctest::Approx(0.02).epsilon(1e-9));
    for (std::size_t j = 0; j < 2; ++j) {
        bool is_input_row = false;
        for (std::size_t i = 0; i < 4; ++i) {
            if (squared_euclidean(r.centers.row(j), pts.row(i)) == 0.0) {
                is_input_row = true;
            }
        }
        CHECK(is_input_row);
    }
}

TEST_CASE("kmedoids k=n gives the points themselves") {
    Rng rng(11);
    const Matrix pts = random_points(4, 2, rng);
    const ClusteringResult r = kmedoids(pts, 4, rng);
    CHECK(r.distortion <= 1e-18);
}

TEST_CASE("kmedoids medoids always coincide with input rows") {
    Rng rng(12);
    for (int inst = 0; inst < 5; ++inst) {
        const Matrix pts = random_points(15, 3, rng);
        const ClusteringResult r = kmedoids(pts, 3, rng);
        for (std::size_t j = 0; j < 3; ++j) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < pts.rows(); ++i) {
                best = std::min(best, squared_euclidean(r.centers.row(j), pts.row(i)));
            }
            CHECK(best == 0.0);
        }
    }
}

TEST_CASE("init_centers with k=1 gives per-class embedding means") {
    Rng rng(13);
    Dataset d = generate_blobs(3, 10, 4, 3.0, 0.5, rng);
    Rng init_rng(14);
    FeatureExtractor fe = FeatureExtractor::init({4, 6, 3}, init_rng);
    // Populate running stats so inference embeddings are well defined.
    fe.forward(d.features);

    Rng cluster_rng(15);
    const RBFHead head = init_centers(fe, d, 1, InitMethod::KMeans, KernelSpec{}, cluster_rng);
    REQUIRE(head.num_centers() == 3);
    CHECK(head.center_labels == std::vector<int>{0, 1, 2});

    fe.set_mode(Mode::Inference);
    const Matrix emb = fe.forward(d.features).values;
    for (std::size_t c = 0; c < 3; ++c) {
        std::vector<double> mean(3, 0.0);
        std::size_t count = 0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (d.labels[i] != static_cast<int>(c)) continue;
            for (std::size_t t = 0; t < 3; ++t) mean[t] += emb(i, t);
            ++count;
        }
        for (double& v : mean) v /= static_cast<double>(count);
        for (std::size_t t = 0; t < 3; ++t) {
            CHECK(head.centers(c, t) == doctest::Approx(mean[t]).epsilon(1e-9));
        }
    }
}

TEST_CASE("init_centers shape and class-size guard") {
    Rng rng(16);
    Dataset d = generate_blobs(3, 5, 2, 2.0, 0.5, rng);
    Rng init_rng(17);
    FeatureExtractor fe = FeatureExtractor::init({2, 4}, init_rng);
    fe.forward(d.features);
    Rng cluster_rng(18);
    const RBFHead head =
        init_centers(fe, d, 2, InitMethod::KMeans, KernelSpec{}, cluster_rng);
    CHECK(head.num_centers() == 6);
    std::vector<int> counts(3, 0);
    for (int l : head.center_labels) ++counts[static_cast<std::size_t>(l)];
    for (int c : counts) CHECK(c == 2);

    Rng cluster_rng2(19);
    CHECK_THROWS_AS(
        init_centers(fe, d, 6, InitMethod::KMeans, KernelSpec{}, cluster_rng2),
        DataError);
}

TEST_CASE("init_centers kmedoids centers are embedding rows") {
    Rng rng(20);
    Dataset d = generate_blobs(2, 8, 3, 2.0, 0.5, rng);
    Rng init_rng(21);
    FeatureExtractor fe = FeatureExtractor::init({3, 4}, init_rng);
    fe.forward(d.features);
    Rng cluster_rng(22);
    const RBFHead head =
        init_centers(fe, d, 2, InitMethod::KMedoids, KernelSpec{}, cluster_rng);
    fe.set_mode(Mode::Inference);
    const Matrix emb = fe.forward(d.features).values;
    for (std::size_t j = 0; j < head.num_centers(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < emb.rows(); ++i) {
            best = std::min(best, squared_euclidean(head.centers.row(j), emb.row(i)));
        }
        CHECK(best == 0.0);
    }
}
