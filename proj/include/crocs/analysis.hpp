#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "crocs/matrix.hpp"

namespace crocs {

struct KmeansResult {
    Matrix centroids;             // k x dim
    std::vector<int> assignments; // one centroid index per point
    double inertia = 0.0;
    std::vector<double> inertia_trace;  // one entry per Lloyd iteration
};

/// Lloyd's algorithm with seeded random-point initialization. Assignment
/// ties break toward the lower centroid index; an emptied cluster is
/// reseeded to the point farthest from its current centroid.
KmeansResult kmeans(const Matrix& points, int k, std::uint64_t seed,
                    int max_iters = 100);

struct Dendrogram {
    struct Merge {
        int left = 0;   // node ids; leaves are 0..n-1, merge t creates node n+t
        int right = 0;
        double height = 0.0;
        int size = 0;   // leaves under the new node
    };
    std::vector<Merge> merges;           // n-1 entries
    std::vector<std::string> leaf_labels;
};

/// Agglomerative clustering with average linkage over Euclidean distances.
/// Equal-distance candidates merge lowest node-id pair first.
Dendrogram hac_average(const Matrix& points, std::vector<std::string> leaf_labels = {});

/// Labels each leaf with one of `clusters` ids by undoing the last merges.
std::vector<int> cut_dendrogram(const Dendrogram& dendrogram, int clusters);

void write_dendrogram_csv(const Dendrogram& dendrogram, const std::string& path);

struct Pca2d {
    Matrix scores;  // n x 2
    std::array<double, 2> explained_variance_fraction{0.0, 0.0};
    std::array<std::vector<double>, 2> components;
    std::vector<double> mean;
};

/// Mean-centered projection onto the top two principal directions, found by
/// power iteration with deflation. Rank-one input yields a zero second
/// component.
Pca2d pca_2d(const Matrix& points);

void write_projection_csv(const Pca2d& projection, const std::vector<std::string>& labels,
                          const std::string& path);

}  // namespace crocs
