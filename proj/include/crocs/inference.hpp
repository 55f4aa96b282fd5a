#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "crocs/encoder.hpp"
#include "crocs/matrix.hpp"
#include "crocs/prototypes.hpp"

namespace crocs {

/// Embeds every row of `signals` in EVAL mode, batched internally.
/// Throws unless params.mode == kEval.
Matrix embed_all(const EncoderParams& params, const Matrix& signals,
                 std::size_t batch_size = 256);

struct Assignment {
    AttributeSet attrs;
    int prototype_index = 0;
    double distance = 0.0;
};

/// Nearest centroid per embedding row. With normalize set, both embeddings
/// and centroids are L2-normalized before the Euclidean distance, which makes
/// the assignment agree with the cosine ranking used during training. Ties
/// break toward the lowest centroid index; masked centroids are skipped.
std::vector<Assignment> assign_to_centroids(const Matrix& embeddings,
                                            const Matrix& centroids,
                                            const std::vector<AttributeSet>& combos,
                                            const std::vector<std::uint8_t>& mask,
                                            bool normalize = true);

std::vector<Assignment> cluster_assign(const Matrix& embeddings,
                                       const PrototypeBank& bank,
                                       bool normalize = true);

struct RetrievalResult {
    // One ascending-by-distance list of (instance id, distance) per query;
    // ties break toward the lower instance id.
    std::vector<std::vector<std::pair<int, double>>> per_query;
};

RetrievalResult retrieve_topk_queries(const Matrix& queries,
                                      const std::vector<std::uint8_t>& mask,
                                      const Matrix& embeddings, int k,
                                      bool normalize = true);

RetrievalResult retrieve_topk(const PrototypeBank& bank, const Matrix& embeddings,
                              int k, bool normalize = true);

struct TraditionalPrototypes {
    Matrix matrix;                      // combo_count x embed_dim means
    std::vector<std::uint8_t> present;  // zero-member combinations are masked
};

/// Mean embedding per exact attribute combination.
TraditionalPrototypes traditional_prototypes(const Matrix& embeddings,
                                             const std::vector<AttributeSet>& attrs,
                                             const AttributeSpace& space);

void write_embeddings_csv(const Matrix& embeddings,
                          const std::vector<long>& instance_ids,
                          const std::vector<long>& patient_ids,
                          const std::vector<AttributeSet>& attrs,
                          const std::string& path);

}  // namespace crocs
