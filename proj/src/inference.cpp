#include "crocs/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "crocs/kernels.hpp"

namespace crocs {

namespace {

Matrix normalized_copy(const Matrix& m, const char* what,
                       const std::vector<std::uint8_t>& mask = {}) {
    Matrix out = m;
    for (std::size_t i = 0; i < out.rows; ++i) {
        if (!mask.empty() && !mask[i]) continue;  // masked rows stay untouched
        double* row = out.row(i);
        const double norm = std::sqrt(kernels::sumsq(row, out.cols));
        if (!(norm > 0.0)) {
            throw std::invalid_argument(std::string(what) + " " + std::to_string(i) +
                                        " has zero norm");
        }
        kernels::scale(row, out.cols, 1.0 / norm);
    }
    return out;
}

}  // namespace

Matrix embed_all(const EncoderParams& params, const Matrix& signals,
                 std::size_t batch_size) {
    require(params.mode == Mode::kEval, "embed_all requires EVAL mode");
    Matrix out(signals.rows, static_cast<std::size_t>(params.config.embed_dim));
    for (std::size_t begin = 0; begin < signals.rows; begin += batch_size) {
        const std::size_t count = std::min(batch_size, signals.rows - begin);
        Matrix batch(count, signals.cols);
        std::copy(signals.row(begin), signals.row(begin) + count * signals.cols,
                  batch.data.begin());
        const Matrix emb = encoder_forward(params, batch, 0);
        std::copy(emb.data.begin(), emb.data.end(), out.row(begin));
    }
    return out;
}

std::vector<Assignment> assign_to_centroids(const Matrix& embeddings,
                                            const Matrix& centroids,
                                            const std::vector<AttributeSet>& combos,
                                            const std::vector<std::uint8_t>& mask,
                                            bool normalize) {
    require(embeddings.cols == centroids.cols || embeddings.rows == 0,
            "embedding and centroid widths differ");
    require(combos.size() == centroids.rows, "one attribute set per centroid required");

    const Matrix emb = normalize ? normalized_copy(embeddings, "embedding") : embeddings;
    const Matrix cent = normalize ? normalized_copy(centroids, "centroid", mask) : centroids;

    std::vector<Assignment> out;
    out.reserve(emb.rows);
    for (std::size_t i = 0; i < emb.rows; ++i) {
        int best = -1;
        double best_d = 0.0;
        for (std::size_t j = 0; j < cent.rows; ++j) {
            if (!mask.empty() && !mask[j]) continue;
            const double d = kernels::sqdist(emb.row(i), cent.row(j), emb.cols);
            if (best < 0 || d < best_d) {
                best = static_cast<int>(j);
                best_d = d;
            }
        }
        require(best >= 0, "no active centroid to assign to");
        out.push_back({combos[static_cast<std::size_t>(best)], best, std::sqrt(best_d)});
    }
    return out;
}

std::vector<Assignment> cluster_assign(const Matrix& embeddings,
                                       const PrototypeBank& bank, bool normalize) {
    return assign_to_centroids(embeddings, bank.matrix, bank.combos, {}, normalize);
}

RetrievalResult retrieve_topk_queries(const Matrix& queries,
                                      const std::vector<std::uint8_t>& mask,
                                      const Matrix& embeddings, int k,
                                      bool normalize) {
    require(k >= 1, "k must be >= 1");
    const Matrix emb = embeddings.rows > 0 ? (normalize ? normalized_copy(embeddings, "embedding")
                                                        : embeddings)
                                           : embeddings;
    const Matrix q = normalize ? normalized_copy(queries, "query", mask) : queries;

    RetrievalResult result;
    result.per_query.resize(q.rows);
    std::vector<std::pair<double, int>> ranked(emb.rows);
    for (std::size_t j = 0; j < q.rows; ++j) {
        if (!mask.empty() && !mask[j]) continue;
        for (std::size_t i = 0; i < emb.rows; ++i) {
            ranked[i] = {kernels::sqdist(q.row(j), emb.row(i), emb.cols),
                         static_cast<int>(i)};
        }
        const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
        std::partial_sort(ranked.begin(), ranked.begin() + keep, ranked.end());
        auto& list = result.per_query[j];
        list.reserve(keep);
        for (std::size_t r = 0; r < keep; ++r) {
            list.emplace_back(ranked[r].second, std::sqrt(ranked[r].first));
        }
    }
    return result;
}

RetrievalResult retrieve_topk(const PrototypeBank& bank, const Matrix& embeddings,
                              int k, bool normalize) {
    return retrieve_topk_queries(bank.matrix, {}, embeddings, k, normalize);
}

TraditionalPrototypes traditional_prototypes(const Matrix& embeddings,
                                             const std::vector<AttributeSet>& attrs,
                                             const AttributeSpace& space) {
    require(attrs.size() == embeddings.rows, "one attribute set per embedding required");
    const std::size_t m = static_cast<std::size_t>(space.combo_count());

    TraditionalPrototypes out;
    out.matrix = Matrix(m, embeddings.cols);
    out.present.assign(m, 0);
    std::vector<std::size_t> counts(m, 0);

    for (std::size_t i = 0; i < embeddings.rows; ++i) {
        const std::size_t j =
            static_cast<std::size_t>(canonical_index(space, attrs[i]));
        kernels::axpy(1.0, embeddings.row(i), out.matrix.row(j), embeddings.cols);
        ++counts[j];
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (counts[j] == 0) continue;
        out.present[j] = 1;
        kernels::scale(out.matrix.row(j), out.matrix.cols, 1.0 / static_cast<double>(counts[j]));
    }
    return out;
}

void write_embeddings_csv(const Matrix& embeddings,
                          const std::vector<long>& instance_ids,
                          const std::vector<long>& patient_ids,
                          const std::vector<AttributeSet>& attrs,
                          const std::string& path) {
    require(instance_ids.size() == embeddings.rows &&
                patient_ids.size() == embeddings.rows && attrs.size() == embeddings.rows,
            "embedding metadata length mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "instance_id,patient_id,class,sex,age_bin";
    for (std::size_t e = 0; e < embeddings.cols; ++e) out << ",v_" << e;
    out << "\n";
    char buf[40];
    for (std::size_t i = 0; i < embeddings.rows; ++i) {
        out << instance_ids[i] << "," << patient_ids[i] << "," << attrs[i].class_id << ","
            << attrs[i].sex_id << "," << attrs[i].age_bin;
        const double* row = embeddings.row(i);
        for (std::size_t e = 0; e < embeddings.cols; ++e) {
            std::snprintf(buf, sizeof(buf), ",%.17g", row[e]);
            out << buf;
        }
        out << "\n";
    }
}

}  // namespace crocs
