#pragma once

#include <vector>

#include "crocs/attributes.hpp"
#include "crocs/inference.hpp"

namespace crocs {

/// Fraction of positions where the two label vectors agree exactly.
double accuracy(const std::vector<int>& truth, const std::vector<int>& assigned);

/// Adjusted mutual information: (MI - E[MI]) / (mean(H_t, H_a) - E[MI]) with
/// natural-log MI and entropies from the contingency table and E[MI] under
/// the permutation (hypergeometric) model. Returns 0 when the denominator is
/// 0. At most 1; 1 exactly when the labelings match up to relabeling.
double ami(const std::vector<int>& truth, const std::vector<int>& assigned);

/// Attribute-match precision at K: the fraction of queries whose top-K
/// retrieved instances contain at least one whose attribute-match count
/// against the query meets min_matches (1, 2, or 3). Queries with empty
/// retrieval lists (masked) are excluded from the average.
double precision_at_k(const RetrievalResult& retrieval,
                      const std::vector<AttributeSet>& truth_attrs,
                      const std::vector<AttributeSet>& query_attrs, int k,
                      int min_matches);

struct PrecisionReport {
    std::vector<int> thresholds;  // e.g. {1, 2, 3}
    std::vector<int> ks;          // e.g. {1, 5, 10}
    Matrix values;                // thresholds x ks

    double at(std::size_t threshold_idx, std::size_t k_idx) const {
        return values.at(threshold_idx, k_idx);
    }
};

PrecisionReport precision_report(const RetrievalResult& retrieval,
                                 const std::vector<AttributeSet>& truth_attrs,
                                 const std::vector<AttributeSet>& query_attrs,
                                 const std::vector<int>& ks);

}  // namespace crocs
