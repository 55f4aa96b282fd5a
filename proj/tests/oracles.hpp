#pragma once

// Test-only independent oracles: central finite differences, a from-scratch
// AMI (contingency + hypergeometric expectation), and a cyclic Jacobi
// eigensolver. These deliberately share no code with the library paths they
// check.

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "crocs/encoder.hpp"
#include "crocs/matrix.hpp"

namespace oracle {

/// Finite differences assume a locally smooth map. This rejects forward
/// passes whose activations sit within `margin` of a ReLU or max-pool kink,
/// where an h-perturbation would change the active piece.
inline bool fd_safe(const crocs::ForwardCache& cache, double margin = 5e-3) {
    for (const auto& bc : cache.blocks) {
        for (double v : bc.bn_out) {
            if (std::abs(v) < margin) return false;
        }
        const std::size_t rows = bc.bn_out.size() / bc.len_conv;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* row = bc.bn_out.data() + r * bc.len_conv;
            for (int t = 0; t + 1 < bc.len_conv; t += 2) {
                if (std::abs(row[t] - row[t + 1]) < margin) return false;
            }
        }
    }
    for (double v : cache.head_pre.data) {
        if (std::abs(v) < margin) return false;
    }
    return true;
}

inline double rel_err(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central finite differences of f over the buffer [params, params+n).
inline std::vector<double> finite_diff(const std::function<double()>& f, double* params,
                                       std::size_t n, double h = 1e-4) {
    std::vector<double> grad(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double keep = params[i];
        params[i] = keep + h;
        const double above = f();
        params[i] = keep - h;
        const double below = f();
        params[i] = keep;
        grad[i] = (above - below) / (2.0 * h);
    }
    return grad;
}

inline double max_grad_rel_err(const std::vector<double>& analytic,
                               const std::vector<double>& numeric) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        worst = std::max(worst, rel_err(analytic[i], numeric[i]));
    }
    return worst;
}

/// AMI from first principles: contingency table in maps, natural-log MI and
/// entropies, E[MI] by direct hypergeometric summation with lgamma weights,
/// arithmetic-mean normalizer, 0 when the normalizer equals E[MI].
inline double ami_brute(const std::vector<int>& a, const std::vector<int>& b) {
    const long n = static_cast<long>(a.size());
    std::map<int, long> ca, cb;
    std::map<std::pair<int, int>, long> joint;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++ca[a[i]];
        ++cb[b[i]];
        ++joint[{a[i], b[i]}];
    }

    double mi = 0.0;
    for (const auto& [key, nij] : joint) {
        const double p = static_cast<double>(nij) / n;
        mi += p * std::log(p / ((static_cast<double>(ca[key.first]) / n) *
                                (static_cast<double>(cb[key.second]) / n)));
    }
    if (mi < 0.0) mi = 0.0;

    double ha = 0.0, hb = 0.0;
    for (const auto& [label, count] : ca) {
        const double p = static_cast<double>(count) / n;
        ha -= p * std::log(p);
    }
    for (const auto& [label, count] : cb) {
        const double p = static_cast<double>(count) / n;
        hb -= p * std::log(p);
    }

    const auto lf = [](long x) { return std::lgamma(static_cast<double>(x) + 1.0); };
    double emi = 0.0;
    for (const auto& [la, ai] : ca) {
        for (const auto& [lb, bj] : cb) {
            const long lo = std::max(1L, ai + bj - n);
            const long hi = std::min(ai, bj);
            for (long nij = lo; nij <= hi; ++nij) {
                const double log_p = lf(ai) + lf(bj) + lf(n - ai) + lf(n - bj) - lf(n) -
                                     lf(nij) - lf(ai - nij) - lf(bj - nij) -
                                     lf(n - ai - bj + nij);
                emi += std::exp(log_p) * (static_cast<double>(nij) / n) *
                       std::log(static_cast<double>(n) * nij /
                                (static_cast<double>(ai) * bj));
            }
        }
    }

    const double denom = 0.5 * (ha + hb) - emi;
    if (std::abs(denom) < 1e-15) return 0.0;
    return (mi - emi) / denom;
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenpairs are
/// returned sorted by descending eigenvalue.
inline void jacobi_eig(crocs::Matrix a, std::vector<double>& values,
                       crocs::Matrix& vectors) {
    const std::size_t n = a.rows;
    vectors = crocs::Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) vectors.at(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        }
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a.at(p, q)) < 1e-30) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * a.at(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a.at(i, p), aiq = a.at(i, q);
                    a.at(i, p) = c * aip - s * aiq;
                    a.at(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a.at(p, i), aqi = a.at(q, i);
                    a.at(p, i) = c * api - s * aqi;
                    a.at(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = vectors.at(i, p), viq = vectors.at(i, q);
                    vectors.at(i, p) = c * vip - s * viq;
                    vectors.at(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    values.resize(n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (a.at(order[j], order[j]) > a.at(order[i], order[i])) std::swap(order[i], order[j]);
        }
    }
    crocs::Matrix sorted(n, n);
    for (std::size_t col = 0; col < n; ++col) {
        values[col] = a.at(order[col], order[col]);
        for (std::size_t row = 0; row < n; ++row) sorted.at(row, col) = vectors.at(row, order[col]);
    }
    vectors = sorted;
}

}  // namespace oracle
