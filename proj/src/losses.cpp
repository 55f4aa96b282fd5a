#include "crocs/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "crocs/kernels.hpp"

namespace crocs {

namespace {

struct NormalizedRows {
    Matrix unit;               // rows scaled to unit norm
    std::vector<double> norm;  // original norms
};

NormalizedRows normalize_rows(const Matrix& m, const char* what) {
    NormalizedRows out;
    out.unit = Matrix(m.rows, m.cols);
    out.norm.resize(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double norm = std::sqrt(kernels::sumsq(m.row(i), m.cols));
        if (!(norm > 0.0)) {
            throw std::invalid_argument(std::string(what) + " row " +
                                        std::to_string(i) + " has zero norm");
        }
        out.norm[i] = norm;
        const double* src = m.row(i);
        double* dst = out.unit.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) dst[j] = src[j] / norm;
    }
    return out;
}

/// Shared core of the hard and soft losses. `weights` holds one row of
/// attraction weights per embedding (a one-hot row in the hard case).
/// Loss: -(1/B) sum_i sum_j w_ij log softmax_j(s_ij), which gives
/// dL/ds_ik = (softmax_ik - w_ik)/B because each weight row sums to one.
NceResult weighted_nce(const Matrix& embeddings, const PrototypeBank& bank,
                       const Matrix& weights, double tau_s) {
    require(tau_s > 0.0, "tau_s must be positive");
    require(embeddings.cols == bank.matrix.cols,
            "embedding width does not match prototype width");
    const std::size_t batch = embeddings.rows;
    const std::size_t count = bank.matrix.rows;
    const std::size_t dim = embeddings.cols;

    const NormalizedRows v = normalize_rows(embeddings, "embedding");
    const NormalizedRows p = normalize_rows(bank.matrix, "prototype");

    NceResult out;
    out.grad_embeddings = Matrix(batch, dim);
    out.grad_prototypes = Matrix(count, dim);

    std::vector<double> sims(count);
    std::vector<double> cosines(count);
    std::vector<double> softmax(count);
    double loss = 0.0;

    for (std::size_t i = 0; i < batch; ++i) {
        const double* vi = v.unit.row(i);
        for (std::size_t k = 0; k < count; ++k) {
            cosines[k] = kernels::dot(vi, p.unit.row(k), dim);
            sims[k] = cosines[k] / tau_s;
        }
        const double max_sim = kernels::max_value(sims.data(), count);
        double denom = 0.0;
        for (std::size_t k = 0; k < count; ++k) {
            softmax[k] = std::exp(sims[k] - max_sim);
            denom += softmax[k];
        }
        const double log_denom = std::log(denom);
        for (std::size_t k = 0; k < count; ++k) softmax[k] /= denom;

        const double* w = weights.row(i);
        for (std::size_t j = 0; j < count; ++j) {
            if (w[j] == 0.0) continue;
            // log softmax_j = s_j - max - log denom
            loss -= w[j] * (sims[j] - max_sim - log_denom);
        }

        // ds_ik/dv = (p_hat_k - cos_ik * v_hat) / (tau_s * |v|)
        // ds_ik/dp_k = (v_hat - cos_ik * p_hat_k) / (tau_s * |p_k|)
        double* gv = out.grad_embeddings.row(i);
        double radial = 0.0;  // accumulates sum_k g_k * cos_k for the v_hat term
        for (std::size_t k = 0; k < count; ++k) {
            const double g = (softmax[k] - w[k]) / static_cast<double>(batch);
            if (g == 0.0) continue;
            const double coeff_v = g / (tau_s * v.norm[i]);
            kernels::axpy(coeff_v, p.unit.row(k), gv, dim);
            radial += coeff_v * cosines[k];

            const double coeff_p = g / (tau_s * p.norm[k]);
            double* gp = out.grad_prototypes.row(k);
            kernels::axpy(coeff_p, vi, gp, dim);
            kernels::axpy(-coeff_p * cosines[k], p.unit.row(k), gp, dim);
        }
        kernels::axpy(-radial, vi, gv, dim);
    }

    out.loss = loss / static_cast<double>(batch);
    return out;
}

}  // namespace

double similarity(const double* v, const double* p, std::size_t n, double tau_s) {
    require(tau_s > 0.0, "tau_s must be positive");
    const double nv = std::sqrt(kernels::sumsq(v, n));
    const double np = std::sqrt(kernels::sumsq(p, n));
    if (!(nv > 0.0) || !(np > 0.0)) {
        throw std::invalid_argument("similarity requires nonzero-norm inputs");
    }
    return kernels::dot(v, p, n) / (nv * np * tau_s);
}

NceResult nce_hard(const Matrix& embeddings, const PrototypeBank& bank,
                   const std::vector<int>& matched_index, double tau_s) {
    require(matched_index.size() == embeddings.rows,
            "one matched prototype index required per embedding row");
    Matrix weights(embeddings.rows, bank.matrix.rows);
    for (std::size_t i = 0; i < embeddings.rows; ++i) {
        const int j = matched_index[i];
        if (j < 0 || j >= bank.count()) {
            throw std::invalid_argument("matched prototype index " +
                                        std::to_string(j) + " out of range");
        }
        weights.at(i, static_cast<std::size_t>(j)) = 1.0;
    }
    return weighted_nce(embeddings, bank, weights, tau_s);
}

NceResult nce_soft(const Matrix& embeddings, const PrototypeBank& bank,
                   const std::vector<AttributeSet>& attrs, double tau_s,
                   double tau_omega) {
    require(attrs.size() == embeddings.rows,
            "one attribute set required per embedding row");
    Matrix weights(embeddings.rows, bank.matrix.rows);
    for (std::size_t i = 0; i < embeddings.rows; ++i) {
        const auto w = attraction_weights(attrs[i], bank.space, tau_omega);
        for (std::size_t j = 0; j < w.size(); ++j) weights.at(i, j) = w[j];
    }
    return weighted_nce(embeddings, bank, weights, tau_s);
}

RegResult reg_loss(const PrototypeBank& bank) {
    const std::size_t m = bank.matrix.rows;
    const std::size_t dim = bank.matrix.cols;
    const NormalizedRows p = normalize_rows(bank.matrix, "prototype");
    const TargetDistanceMatrix target = target_distances(bank);

    RegResult out;
    out.grad_prototypes = Matrix(m, dim);

    // d_hat gradients are first accumulated w.r.t. the unit rows, then pulled
    // back through the normalization: dp = (I - p_hat p_hat^T) du / |p|.
    Matrix unit_grad(m, dim);
    std::vector<double> diff(dim);

    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = 0; k < m; ++k) {
            if (j == k || !target.same_class[j * m + k]) continue;
            for (std::size_t e = 0; e < dim; ++e) {
                diff[e] = p.unit.at(j, e) - p.unit.at(k, e);
            }
            const double d_hat = std::sqrt(kernels::sumsq(diff.data(), dim));
            const double residual = d_hat - target.values.at(j, k);
            out.loss += residual * residual;
            if (d_hat > 0.0) {
                const double coeff = 2.0 * residual / d_hat;
                kernels::axpy(coeff, diff.data(), unit_grad.row(j), dim);
                kernels::axpy(-coeff, diff.data(), unit_grad.row(k), dim);
            }
        }
    }

    for (std::size_t j = 0; j < m; ++j) {
        const double* ph = p.unit.row(j);
        const double* gu = unit_grad.row(j);
        const double radial = kernels::dot(gu, ph, dim);
        double* gp = out.grad_prototypes.row(j);
        kernels::axpy(1.0 / p.norm[j], gu, gp, dim);
        kernels::axpy(-radial / p.norm[j], ph, gp, dim);
    }
    return out;
}

LossBreakdown total_loss(const Matrix& embeddings, const PrototypeBank& bank,
                         const std::vector<AttributeSet>& attrs,
                         const LossConfig& config) {
    NceResult nce;
    if (config.mode == AblationMode::kHard) {
        std::vector<int> matched(attrs.size());
        for (std::size_t i = 0; i < attrs.size(); ++i) {
            matched[i] = canonical_index(bank.space, attrs[i]);
        }
        nce = nce_hard(embeddings, bank, matched, config.tau_s);
    } else {
        nce = nce_soft(embeddings, bank, attrs, config.tau_s, config.tau_omega);
    }

    LossBreakdown out;
    out.nce = nce.loss;
    out.grad_embeddings = std::move(nce.grad_embeddings);
    out.grad_prototypes = std::move(nce.grad_prototypes);

    if (config.mode == AblationMode::kSoftReg) {
        RegResult reg = reg_loss(bank);
        out.reg = reg.loss;
        for (std::size_t i = 0; i < out.grad_prototypes.data.size(); ++i) {
            out.grad_prototypes.data[i] += reg.grad_prototypes.data[i];
        }
    }
    out.total = out.nce + out.reg;
    return out;
}

}  // namespace crocs
