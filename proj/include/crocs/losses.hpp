#pragma once

#include <vector>

#include "crocs/matrix.hpp"
#include "crocs/prototypes.hpp"

namespace crocs {

enum class AblationMode { kHard, kSoft, kSoftReg };

struct LossConfig {
    double tau_s = 0.1;
    double tau_omega = 1.0;  // kInfiniteTau selects uniform attraction
    AblationMode mode = AblationMode::kSoftReg;
};

struct NceResult {
    double loss = 0.0;
    Matrix grad_embeddings;  // B x E
    Matrix grad_prototypes;  // M x E
};

struct RegResult {
    double loss = 0.0;
    Matrix grad_prototypes;  // M x E
};

struct LossBreakdown {
    double nce = 0.0;
    double reg = 0.0;
    double total = 0.0;  // nce + reg, exactly
    Matrix grad_embeddings;
    Matrix grad_prototypes;
};

/// Temperature-scaled cosine similarity. Throws on zero-norm input.
double similarity(const double* v, const double* p, std::size_t n, double tau_s);

/// Mean negative log-softmax of the matched prototype's similarity, with the
/// softmax taken over all prototypes, same- and cross-class alike.
NceResult nce_hard(const Matrix& embeddings, const PrototypeBank& bank,
                   const std::vector<int>& matched_index, double tau_s);

/// Attraction-weighted sum of per-prototype NCE terms; weights come from
/// attraction_weights of each row's attribute set.
NceResult nce_soft(const Matrix& embeddings, const PrototypeBank& bank,
                   const std::vector<AttributeSet>& attrs, double tau_s,
                   double tau_omega);

/// Squared error between empirical (normalized-row Euclidean) and target
/// (beta * Hamming) distances, summed over ordered same-class pairs. The
/// gradient flows through the row normalization, so it is orthogonal to
/// each prototype row.
RegResult reg_loss(const PrototypeBank& bank);

LossBreakdown total_loss(const Matrix& embeddings, const PrototypeBank& bank,
                         const std::vector<AttributeSet>& attrs,
                         const LossConfig& config);

}  // namespace crocs
