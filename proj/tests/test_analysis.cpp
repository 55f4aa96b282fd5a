#include <doctest.h>

#include <cmath>
#include <set>

#include "crocs/analysis.hpp"
#include "crocs/kernels.hpp"
#include "crocs/rng.hpp"
#include "oracles.hpp"

using namespace crocs;

namespace {

Matrix random_points(Rng& rng, std::size_t n, std::size_t d, double spread = 1.0) {
    Matrix m(n, d);
    for (double& x : m.data) x = spread * rng.normal();
    return m;
}

}  // namespace

TEST_CASE("kmeans: k = N, separated pairs, monotone inertia") {
    Rng rng(3);
    const Matrix pts = random_points(rng, 6, 3);
    const auto own = kmeans(pts, 6, 1);
    CHECK(own.inertia == doctest::Approx(0.0));
    std::set<int> used(own.assignments.begin(), own.assignments.end());
    CHECK(used.size() == 6);

    Matrix pairs(4, 2);
    pairs.at(0, 0) = 0.0;
    pairs.at(1, 0) = 1.0;
    pairs.at(2, 0) = 10.0;
    pairs.at(3, 0) = 11.0;
    const auto two = kmeans(pairs, 2, 7);
    std::set<double> centers = {two.centroids.at(0, 0), two.centroids.at(1, 0)};
    CHECK(centers == std::set<double>{0.5, 10.5});
    CHECK(two.assignments[0] == two.assignments[1]);
    CHECK(two.assignments[2] == two.assignments[3]);

    const Matrix cloud = random_points(rng, 120, 4);
    const auto r = kmeans(cloud, 5, 11);
    for (std::size_t i = 1; i < r.inertia_trace.size(); ++i) {
        CHECK(r.inertia_trace[i] <= r.inertia_trace[i - 1] + 1e-12);
    }
    CHECK_THROWS(kmeans(cloud, 121, 1));
}

TEST_CASE("kmeans is deterministic under seed") {
    Rng rng(4);
    const Matrix pts = random_points(rng, 50, 3);
    const auto a = kmeans(pts, 4, 9);
    const auto b = kmeans(pts, 4, 9);
    CHECK(a.assignments == b.assignments);
    CHECK(a.centroids.data == b.centroids.data);
}

TEST_CASE("hac: two points, collinear triple, monotone heights") {
    Matrix two(2, 1);
    two.at(0, 0) = 0.0;
    two.at(1, 0) = 3.0;
    const auto d2 = hac_average(two);
    REQUIRE(d2.merges.size() == 1);
    CHECK(d2.merges[0].height == doctest::Approx(3.0));
    CHECK(d2.merges[0].size == 2);

    Matrix tri(3, 1);
    tri.at(0, 0) = 0.0;
    tri.at(1, 0) = 1.0;
    tri.at(2, 0) = 10.0;
    const auto d3 = hac_average(tri);
    REQUIRE(d3.merges.size() == 2);
    CHECK(d3.merges[0].left == 0);
    CHECK(d3.merges[0].right == 1);
    CHECK(d3.merges[0].height == doctest::Approx(1.0));
    // average linkage to {0,1}: (10 + 9) / 2
    CHECK(d3.merges[1].height == doctest::Approx(9.5));

    Rng rng(6);
    const Matrix cloud = random_points(rng, 40, 5);
    const auto d = hac_average(cloud);
    for (std::size_t i = 1; i < d.merges.size(); ++i) {
        CHECK(d.merges[i].height >= d.merges[i - 1].height - 1e-12);
    }

    // Equal-distance candidates: (0,1) and (1,2) both at distance 1, the
    // lowest pair merges first.
    Matrix line(3, 1);
    line.at(0, 0) = 0.0;
    line.at(1, 0) = 1.0;
    line.at(2, 0) = 2.0;
    const auto tie = hac_average(line);
    CHECK(tie.merges[0].left == 0);
    CHECK(tie.merges[0].right == 1);
}

TEST_CASE("dendrogram cut recovers well-separated clusters") {
    Rng rng(7);
    Matrix pts(30, 2);
    for (int i = 0; i < 30; ++i) {
        const int group = i / 10;
        pts.at(i, 0) = 100.0 * group + rng.normal();
        pts.at(i, 1) = rng.normal();
    }
    const auto d = hac_average(pts);
    const auto labels = cut_dendrogram(d, 3);
    for (int i = 0; i < 30; ++i) {
        CHECK(labels[i] == labels[(i / 10) * 10]);
    }
    std::set<int> distinct(labels.begin(), labels.end());
    CHECK(distinct.size() == 3);

    const auto trivial = cut_dendrogram(d, 1);
    CHECK(std::set<int>(trivial.begin(), trivial.end()).size() == 1);
}

TEST_CASE("pca: line, isotropy, orthonormality") {
    Rng rng(8);
    Matrix line(50, 3);
    for (int i = 0; i < 50; ++i) {
        const double t = rng.normal();
        line.at(i, 0) = 2.0 * t;
        line.at(i, 1) = -t;
        line.at(i, 2) = 0.5 * t;
    }
    const auto on_line = pca_2d(line);
    CHECK(on_line.explained_variance_fraction[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(on_line.explained_variance_fraction[1]) < 1e-9);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(std::abs(on_line.scores.at(i, 1)) < 1e-5);
    }

    const Matrix cloud = random_points(rng, 20000, 5);
    const auto iso = pca_2d(cloud);
    CHECK(iso.explained_variance_fraction[0] == doctest::Approx(0.2).epsilon(0.15));
    CHECK(iso.explained_variance_fraction[1] == doctest::Approx(0.2).epsilon(0.15));

    const Matrix pts = random_points(rng, 40, 6);
    const auto p = pca_2d(pts);
    const double n0 = kernels::sumsq(p.components[0].data(), 6);
    const double n1 = kernels::sumsq(p.components[1].data(), 6);
    const double cross = kernels::dot(p.components[0].data(), p.components[1].data(), 6);
    CHECK(n0 == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(n1 == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(std::abs(cross) < 1e-8);
}

TEST_CASE("pca agrees with a full Jacobi eigendecomposition oracle") {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix pts = random_points(rng, 10, 5);
        const auto p = pca_2d(pts);

        // Oracle: center, covariance, Jacobi, reconstruct from top-2.
        std::vector<double> mean(5, 0.0);
        for (std::size_t i = 0; i < 10; ++i) kernels::axpy(1.0, pts.row(i), mean.data(), 5);
        kernels::scale(mean.data(), 5, 0.1);
        Matrix cov(5, 5);
        for (std::size_t i = 0; i < 10; ++i) {
            for (std::size_t a = 0; a < 5; ++a) {
                for (std::size_t b = 0; b < 5; ++b) {
                    cov.at(a, b) +=
                        (pts.at(i, a) - mean[a]) * (pts.at(i, b) - mean[b]) / 10.0;
                }
            }
        }
        std::vector<double> values;
        Matrix vectors;
        oracle::jacobi_eig(cov, values, vectors);

        // Reconstructions from the top-2 subspace must agree (signs differ).
        for (std::size_t i = 0; i < 10; ++i) {
            for (std::size_t a = 0; a < 5; ++a) {
                double mine = mean[a] + p.scores.at(i, 0) * p.components[0][a] +
                              p.scores.at(i, 1) * p.components[1][a];
                double ref = mean[a];
                for (int c = 0; c < 2; ++c) {
                    double score = 0.0;
                    for (std::size_t b = 0; b < 5; ++b) {
                        score += (pts.at(i, b) - mean[b]) * vectors.at(b, c);
                    }
                    ref += score * vectors.at(a, c);
                }
                CHECK(mine == doctest::Approx(ref).epsilon(1e-6));
            }
        }
    }
}
