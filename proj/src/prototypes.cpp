#include "crocs/prototypes.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "crocs/kernels.hpp"
#include "crocs/rng.hpp"

namespace crocs {

PrototypeBank init_prototypes(const AttributeSpace& space, int embed_dim,
                              std::uint64_t seed, double beta) {
    validate_space(space);
    require(embed_dim >= 2, "prototype embed_dim must be >= 2");
    require(beta > 0.0, "beta must be positive");

    PrototypeBank bank;
    bank.space = space;
    bank.combos = enumerate_combinations(space);
    bank.beta = beta;
    bank.matrix = Matrix(bank.combos.size(), static_cast<std::size_t>(embed_dim));

    Rng rng(seed);
    for (std::size_t j = 0; j < bank.matrix.rows; ++j) {
        double* row = bank.matrix.row(j);
        for (std::size_t e = 0; e < bank.matrix.cols; ++e) row[e] = rng.normal();
        const double norm = std::sqrt(kernels::sumsq(row, bank.matrix.cols));
        kernels::scale(row, bank.matrix.cols, 1.0 / norm);
    }
    return bank;
}

TargetDistanceMatrix target_distances(const PrototypeBank& bank) {
    const std::size_t m = bank.combos.size();
    TargetDistanceMatrix out;
    out.values = Matrix(m, m);
    out.same_class.assign(m * m, 0);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = 0; k < m; ++k) {
            out.values.at(j, k) =
                bank.beta * hamming(bank.space, bank.combos[j], bank.combos[k]);
            out.same_class[j * m + k] =
                bank.combos[j].class_id == bank.combos[k].class_id ? 1 : 0;
        }
    }
    return out;
}

Matrix empirical_distances(const PrototypeBank& bank) {
    const std::size_t m = bank.matrix.rows;
    const std::size_t e = bank.matrix.cols;

    Matrix normalized(m, e);
    for (std::size_t j = 0; j < m; ++j) {
        const double norm = std::sqrt(kernels::sumsq(bank.matrix.row(j), e));
        if (!(norm > 0.0)) {
            throw std::invalid_argument("prototype row " + std::to_string(j) +
                                        " has zero norm");
        }
        const double* src = bank.matrix.row(j);
        double* dst = normalized.row(j);
        for (std::size_t i = 0; i < e; ++i) dst[i] = src[i] / norm;
    }

    Matrix dist(m, m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = j + 1; k < m; ++k) {
            const double d = std::sqrt(kernels::sqdist(normalized.row(j), normalized.row(k), e));
            dist.at(j, k) = d;
            dist.at(k, j) = d;
        }
    }
    return dist;
}

}  // namespace crocs
