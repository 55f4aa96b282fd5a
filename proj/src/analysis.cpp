#include "crocs/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "crocs/kernels.hpp"
#include "crocs/rng.hpp"

namespace crocs {

KmeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters) {
    const std::size_t n = points.rows;
    const std::size_t dim = points.cols;
    require(k >= 1, "k must be >= 1");
    if (static_cast<std::size_t>(k) > n) {
        throw std::invalid_argument("kmeans: k exceeds the number of points");
    }

    // Initial centroids: k distinct points, seeded.
    Rng rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    KmeansResult result;
    result.centroids = Matrix(static_cast<std::size_t>(k), dim);
    for (int c = 0; c < k; ++c) {
        std::copy(points.row(order[c]), points.row(order[c]) + dim,
                  result.centroids.row(c));
    }
    result.assignments.assign(n, -1);

    std::vector<std::size_t> counts(k);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = kernels::sqdist(points.row(i), result.centroids.row(0), dim);
            for (int c = 1; c < k; ++c) {
                const double d = kernels::sqdist(points.row(i), result.centroids.row(c), dim);
                if (d < best_d) {
                    best = c;
                    best_d = d;
                }
            }
            if (result.assignments[i] != best) {
                result.assignments[i] = best;
                changed = true;
            }
            inertia += best_d;
        }
        result.inertia = inertia;
        result.inertia_trace.push_back(inertia);
        if (!changed) break;

        std::fill(counts.begin(), counts.end(), 0);
        std::fill(result.centroids.data.begin(), result.centroids.data.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            kernels::axpy(1.0, points.row(i), result.centroids.row(result.assignments[i]), dim);
            ++counts[result.assignments[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                kernels::scale(result.centroids.row(c), dim, 1.0 / counts[c]);
                continue;
            }
            // Reseed an emptied cluster to the farthest point.
            std::size_t farthest = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = kernels::sqdist(
                    points.row(i), result.centroids.row(result.assignments[i]), dim);
                if (d > far_d) {
                    far_d = d;
                    farthest = i;
                }
            }
            std::copy(points.row(farthest), points.row(farthest) + dim,
                      result.centroids.row(c));
        }
    }
    return result;
}

Dendrogram hac_average(const Matrix& points, std::vector<std::string> leaf_labels) {
    const std::size_t n = points.rows;
    require(n >= 2, "hac needs at least 2 points");
    if (leaf_labels.empty()) {
        for (std::size_t i = 0; i < n; ++i) leaf_labels.push_back(std::to_string(i));
    }
    require(leaf_labels.size() == n, "one leaf label per point required");

    struct Cluster {
        int node_id;
        int size;
        bool active;
    };
    std::vector<Cluster> clusters(n);
    for (std::size_t i = 0; i < n; ++i) clusters[i] = {static_cast<int>(i), 1, true};

    // Pairwise distance matrix, updated with the average-linkage
    // Lance-Williams rule: d(a+b, c) = (|a| d(a,c) + |b| d(b,c)) / (|a|+|b|).
    Matrix dist(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = std::sqrt(kernels::sqdist(points.row(i), points.row(j), points.cols));
            dist.at(i, j) = d;
            dist.at(j, i) = d;
        }
    }

    Dendrogram out;
    out.leaf_labels = std::move(leaf_labels);
    for (std::size_t step = 0; step + 1 < n; ++step) {
        std::size_t best_i = 0, best_j = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!clusters[i].active) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!clusters[j].active) continue;
                const double d = dist.at(i, j);
                const bool better =
                    d < best_d ||
                    (d == best_d &&
                     std::pair(clusters[i].node_id, clusters[j].node_id) <
                         std::pair(clusters[best_i].node_id, clusters[best_j].node_id));
                if (better) {
                    best_d = d;
                    best_i = i;
                    best_j = j;
                }
            }
        }

        const int size_i = clusters[best_i].size;
        const int size_j = clusters[best_j].size;
        out.merges.push_back({std::min(clusters[best_i].node_id, clusters[best_j].node_id),
                              std::max(clusters[best_i].node_id, clusters[best_j].node_id),
                              best_d, size_i + size_j});

        for (std::size_t c = 0; c < n; ++c) {
            if (!clusters[c].active || c == best_i || c == best_j) continue;
            const double d = (size_i * dist.at(best_i, c) + size_j * dist.at(best_j, c)) /
                             (size_i + size_j);
            dist.at(best_i, c) = d;
            dist.at(c, best_i) = d;
        }
        clusters[best_i].node_id = static_cast<int>(n + step);
        clusters[best_i].size = size_i + size_j;
        clusters[best_j].active = false;
    }
    return out;
}

std::vector<int> cut_dendrogram(const Dendrogram& dendrogram, int clusters) {
    const int n = static_cast<int>(dendrogram.leaf_labels.size());
    require(clusters >= 1 && clusters <= n, "cluster count out of range");

    // Apply the first n - clusters merges with union-find over node ids.
    std::vector<int> parent(static_cast<std::size_t>(n) + dendrogram.merges.size());
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (int t = 0; t < n - clusters; ++t) {
        const auto& m = dendrogram.merges[t];
        const int target = n + t;
        parent[find(m.left)] = target;
        parent[find(m.right)] = target;
    }

    std::vector<int> labels(n);
    std::vector<int> remap(parent.size(), -1);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        const int root = find(i);
        if (remap[root] < 0) remap[root] = next++;
        labels[i] = remap[root];
    }
    return labels;
}

void write_dendrogram_csv(const Dendrogram& dendrogram, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "merge,left,right,height,size\n";
    char buf[64];
    for (std::size_t t = 0; t < dendrogram.merges.size(); ++t) {
        const auto& m = dendrogram.merges[t];
        std::snprintf(buf, sizeof(buf), "%zu,%d,%d,%.17g,%d\n", t, m.left, m.right,
                      m.height, m.size);
        out << buf;
    }
    out << "\nleaf,label\n";
    for (std::size_t i = 0; i < dendrogram.leaf_labels.size(); ++i) {
        out << i << "," << dendrogram.leaf_labels[i] << "\n";
    }
}

Pca2d pca_2d(const Matrix& points) {
    const std::size_t n = points.rows;
    const std::size_t dim = points.cols;
    require(n >= 3, "pca_2d needs at least 3 points");

    Pca2d out;
    out.mean.assign(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        kernels::axpy(1.0, points.row(i), out.mean.data(), dim);
    }
    kernels::scale(out.mean.data(), dim, 1.0 / static_cast<double>(n));

    Matrix centered(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            centered.at(i, j) = points.at(i, j) - out.mean[j];
        }
    }

    Matrix cov(dim, dim);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = centered.row(i);
        for (std::size_t a = 0; a < dim; ++a) {
            kernels::axpy(row[a], row, cov.row(a), dim);
        }
    }
    kernels::scale(cov.data.data(), cov.data.size(), 1.0 / static_cast<double>(n));

    double total_var = 0.0;
    for (std::size_t a = 0; a < dim; ++a) total_var += cov.at(a, a);

    std::array<double, 2> eigenvalues{0.0, 0.0};
    Rng rng(0xC0FFEEull);
    for (int comp = 0; comp < 2; ++comp) {
        std::vector<double> v(dim);
        for (double& x : v) x = rng.normal();
        double norm = std::sqrt(kernels::sumsq(v.data(), dim));
        kernels::scale(v.data(), dim, 1.0 / norm);

        std::vector<double> next(dim);
        double lambda = 0.0;
        for (int iter = 0; iter < 1000; ++iter) {
            for (std::size_t a = 0; a < dim; ++a) {
                next[a] = kernels::dot(cov.row(a), v.data(), dim);
            }
            lambda = std::sqrt(kernels::sumsq(next.data(), dim));
            // Rank-deficient input: anything at deflation-noise level counts
            // as a zero eigenvalue and yields a zero component.
            if (lambda <= 1e-300 || lambda <= 1e-10 * eigenvalues[0]) {
                std::fill(v.begin(), v.end(), 0.0);
                lambda = 0.0;
                break;
            }
            double delta = 0.0;
            for (std::size_t a = 0; a < dim; ++a) {
                const double scaled = next[a] / lambda;
                delta = std::max(delta, std::abs(scaled - v[a]));
                v[a] = scaled;
            }
            if (delta < 1e-13 && iter > 2) break;
        }
        eigenvalues[comp] = lambda;
        out.components[comp] = v;
        out.explained_variance_fraction[comp] = total_var > 0.0 ? lambda / total_var : 0.0;

        // Deflate: cov -= lambda v v^T.
        for (std::size_t a = 0; a < dim; ++a) {
            kernels::axpy(-lambda * v[a], v.data(), cov.row(a), dim);
        }
    }

    out.scores = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        out.scores.at(i, 0) = kernels::dot(centered.row(i), out.components[0].data(), dim);
        out.scores.at(i, 1) = kernels::dot(centered.row(i), out.components[1].data(), dim);
    }
    return out;
}

void write_projection_csv(const Pca2d& projection, const std::vector<std::string>& labels,
                          const std::string& path) {
    require(labels.size() == projection.scores.rows, "one label per projected point");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    char buf[96];
    std::snprintf(buf, sizeof(buf), "# explained_variance,%.17g,%.17g\n",
                  projection.explained_variance_fraction[0],
                  projection.explained_variance_fraction[1]);
    out << buf << "label,pc1,pc2\n";
    for (std::size_t i = 0; i < projection.scores.rows; ++i) {
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", projection.scores.at(i, 0),
                      projection.scores.at(i, 1));
        out << labels[i] << buf;
    }
}

}  // namespace crocs
