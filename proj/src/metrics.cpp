#include "crocs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crocs {

namespace {

struct Contingency {
    int classes_a = 0, classes_b = 0;
    std::vector<long> table;  // classes_a x classes_b
    std::vector<long> row_sums, col_sums;
    long n = 0;

    long at(int i, int j) const { return table[static_cast<std::size_t>(i) * classes_b + j]; }
};

Contingency build_contingency(const std::vector<int>& a, const std::vector<int>& b) {
    Contingency c;
    for (int v : a) {
        require(v >= 0, "labels must be non-negative");
        c.classes_a = std::max(c.classes_a, v + 1);
    }
    for (int v : b) {
        require(v >= 0, "labels must be non-negative");
        c.classes_b = std::max(c.classes_b, v + 1);
    }
    c.table.assign(static_cast<std::size_t>(c.classes_a) * c.classes_b, 0);
    c.row_sums.assign(c.classes_a, 0);
    c.col_sums.assign(c.classes_b, 0);
    c.n = static_cast<long>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++c.table[static_cast<std::size_t>(a[i]) * c.classes_b + b[i]];
        ++c.row_sums[a[i]];
        ++c.col_sums[b[i]];
    }
    return c;
}

double entropy(const std::vector<long>& counts, long n) {
    double h = 0.0;
    for (long v : counts) {
        if (v == 0) continue;
        const double p = static_cast<double>(v) / n;
        h -= p * std::log(p);
    }
    return h;
}

double mutual_information(const Contingency& c) {
    double mi = 0.0;
    for (int i = 0; i < c.classes_a; ++i) {
        for (int j = 0; j < c.classes_b; ++j) {
            const long nij = c.at(i, j);
            if (nij == 0) continue;
            const double p = static_cast<double>(nij) / c.n;
            mi += p * std::log(static_cast<double>(nij) * c.n /
                               (static_cast<double>(c.row_sums[i]) * c.col_sums[j]));
        }
    }
    return std::max(mi, 0.0);
}

/// E[MI] under the permutation model: for each marginal pair (a_i, b_j) the
/// cell count follows a hypergeometric distribution, so the expectation sums
/// P(n_ij) * (n_ij/N) * log(N n_ij / (a_i b_j)) over the feasible n_ij range.
/// Log-factorials keep the hypergeometric weights finite.
double expected_mutual_information(const Contingency& c) {
    const long n = c.n;
    std::vector<double> log_fact(static_cast<std::size_t>(n) + 1, 0.0);
    for (long i = 2; i <= n; ++i) {
        log_fact[i] = log_fact[i - 1] + std::log(static_cast<double>(i));
    }

    double emi = 0.0;
    for (int i = 0; i < c.classes_a; ++i) {
        const long ai = c.row_sums[i];
        if (ai == 0) continue;
        for (int j = 0; j < c.classes_b; ++j) {
            const long bj = c.col_sums[j];
            if (bj == 0) continue;
            const long lo = std::max(1L, ai + bj - n);
            const long hi = std::min(ai, bj);
            for (long nij = lo; nij <= hi; ++nij) {
                const double log_weight =
                    log_fact[ai] + log_fact[bj] + log_fact[n - ai] + log_fact[n - bj] -
                    log_fact[n] - log_fact[nij] - log_fact[ai - nij] - log_fact[bj - nij] -
                    log_fact[n - ai - bj + nij];
                const double term = static_cast<double>(nij) / n *
                                    std::log(static_cast<double>(n) * nij /
                                             (static_cast<double>(ai) * bj));
                emi += std::exp(log_weight) * term;
            }
        }
    }
    return emi;
}

}  // namespace

double accuracy(const std::vector<int>& truth, const std::vector<int>& assigned) {
    require(truth.size() == assigned.size(), "label vectors must have equal length");
    require(!truth.empty(), "label vectors must be non-empty");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == assigned[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double ami(const std::vector<int>& truth, const std::vector<int>& assigned) {
    require(truth.size() == assigned.size(), "label vectors must have equal length");
    require(truth.size() >= 2, "ami needs at least 2 instances");

    const Contingency c = build_contingency(truth, assigned);
    const double mi = mutual_information(c);
    const double emi = expected_mutual_information(c);
    const double mean_h = 0.5 * (entropy(c.row_sums, c.n) + entropy(c.col_sums, c.n));
    const double denom = mean_h - emi;
    if (std::abs(denom) < 1e-15) return 0.0;
    return (mi - emi) / denom;
}

double precision_at_k(const RetrievalResult& retrieval,
                      const std::vector<AttributeSet>& truth_attrs,
                      const std::vector<AttributeSet>& query_attrs, int k,
                      int min_matches) {
    require(retrieval.per_query.size() == query_attrs.size(),
            "one attribute set per query required");
    require(k >= 1, "k must be >= 1");
    require(min_matches >= 1 && min_matches <= 3, "min_matches must be 1, 2, or 3");

    std::size_t active = 0, hits = 0;
    for (std::size_t q = 0; q < retrieval.per_query.size(); ++q) {
        const auto& list = retrieval.per_query[q];
        if (list.empty()) continue;  // masked query
        ++active;
        const std::size_t take = std::min<std::size_t>(list.size(), static_cast<std::size_t>(k));
        for (std::size_t r = 0; r < take; ++r) {
            const int id = list[r].first;
            if (id < 0 || static_cast<std::size_t>(id) >= truth_attrs.size()) {
                throw std::invalid_argument("retrieved instance id " + std::to_string(id) +
                                            " unknown");
            }
            const AttributeSet& t = truth_attrs[static_cast<std::size_t>(id)];
            const AttributeSet& a = query_attrs[q];
            const int matches = (t.class_id == a.class_id) + (t.sex_id == a.sex_id) +
                                (t.age_bin == a.age_bin);
            if (matches >= min_matches) {
                ++hits;
                break;
            }
        }
    }
    require(active > 0, "no active queries");
    return static_cast<double>(hits) / static_cast<double>(active);
}

PrecisionReport precision_report(const RetrievalResult& retrieval,
                                 const std::vector<AttributeSet>& truth_attrs,
                                 const std::vector<AttributeSet>& query_attrs,
                                 const std::vector<int>& ks) {
    PrecisionReport report;
    report.thresholds = {1, 2, 3};
    report.ks = ks;
    report.values = Matrix(report.thresholds.size(), ks.size());
    for (std::size_t t = 0; t < report.thresholds.size(); ++t) {
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            report.values.at(t, ki) = precision_at_k(retrieval, truth_attrs, query_attrs,
                                                     ks[ki], report.thresholds[t]);
        }
    }
    return report;
}

}  // namespace crocs
