#pragma once

#include <cstdint>
#include <vector>

#include "crocs/attributes.hpp"
#include "crocs/matrix.hpp"

namespace crocs {

/// The learnable prototype bank: one embedding row per attribute combination,
/// rows ordered canonically. Rows start unit-norm but are free parameters
/// during training; normalization happens inside the cosine similarity and
/// inside empirical_distances, so no re-projection step is applied.
struct PrototypeBank {
    Matrix matrix;                    // combo_count x embed_dim
    std::vector<AttributeSet> combos;
    AttributeSpace space;
    double beta = 0.2;

    int count() const { return static_cast<int>(matrix.rows); }
    int embed_dim() const { return static_cast<int>(matrix.cols); }
};

struct TargetDistanceMatrix {
    Matrix values;                      // beta * hamming, symmetric, zero diagonal
    std::vector<std::uint8_t> same_class;  // row-major M x M mask
};

/// Rows sampled i.i.d. standard normal, then L2-normalized. Deterministic
/// under seed. embed_dim must be >= 2.
PrototypeBank init_prototypes(const AttributeSpace& space, int embed_dim,
                              std::uint64_t seed, double beta);

TargetDistanceMatrix target_distances(const PrototypeBank& bank);

/// Pairwise Euclidean distances between L2-normalized rows; entries in [0, 2].
/// Throws if any row has zero norm, naming the row.
Matrix empirical_distances(const PrototypeBank& bank);

}  // namespace crocs
