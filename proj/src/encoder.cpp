#include "crocs/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "crocs/kernels.hpp"
#include "crocs/rng.hpp"

namespace crocs {

namespace {

int conv_out_len(int n) { return (n - kConvKernel) / kConvStride + 1; }

void fill_uniform(Rng& rng, double* data, std::size_t n, double bound) {
    for (std::size_t i = 0; i < n; ++i) data[i] = rng.uniform(-bound, bound);
}

}  // namespace

std::vector<int> encoder_stage_lengths(int input_len, int block_count) {
    require(block_count >= 1 && block_count <= kMaxBlocks,
            "block_count must be between 1 and 3");
    std::vector<int> lengths;
    int n = input_len;
    for (int b = 0; b < block_count; ++b) {
        if (n < kConvKernel) {
            throw std::invalid_argument(
                "block " + std::to_string(b + 1) + " convolution needs input length >= " +
                std::to_string(kConvKernel) + ", got " + std::to_string(n));
        }
        n = conv_out_len(n);
        lengths.push_back(n);
        n /= kPoolWindow;
        if (n < 1) {
            throw std::invalid_argument("block " + std::to_string(b + 1) +
                                        " max-pool would produce an empty output");
        }
        lengths.push_back(n);
    }
    return lengths;
}

int encoder_flatten_dim(int input_len, int block_count) {
    const auto lengths = encoder_stage_lengths(input_len, block_count);
    return kBlockChannels[block_count - 1] * lengths.back();
}

EncoderParams init_encoder(int input_len, int embed_dim, std::uint64_t seed) {
    EncoderConfig config;
    config.input_len = input_len;
    config.embed_dim = embed_dim;
    return init_encoder(config, seed);
}

EncoderParams init_encoder(const EncoderConfig& config, std::uint64_t seed) {
    require(config.embed_dim >= 1, "embed_dim must be >= 1");
    require(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0,
            "dropout_rate must lie in [0, 1)");
    const int flatten = encoder_flatten_dim(config.input_len, config.block_count);

    EncoderParams params;
    params.config = config;
    Rng rng(seed);

    int in_ch = 1;
    for (int b = 0; b < config.block_count; ++b) {
        ConvBlock block;
        block.in_channels = in_ch;
        block.out_channels = kBlockChannels[b];
        block.weight = Matrix(block.out_channels, in_ch * kConvKernel);
        block.bias.assign(block.out_channels, 0.0);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * kConvKernel));
        fill_uniform(rng, block.weight.data.data(), block.weight.data.size(), bound);
        fill_uniform(rng, block.bias.data(), block.bias.size(), bound);
        block.gamma.assign(block.out_channels, 1.0);
        block.beta.assign(block.out_channels, 0.0);
        block.running_mean.assign(block.out_channels, 0.0);
        block.running_var.assign(block.out_channels, 1.0);
        params.blocks.push_back(std::move(block));
        in_ch = kBlockChannels[b];
    }

    params.head_weight = Matrix(config.embed_dim, flatten);
    params.head_bias.assign(config.embed_dim, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(flatten));
    fill_uniform(rng, params.head_weight.data.data(), params.head_weight.data.size(), bound);
    // Non-negative head biases keep the ReLU'd embedding rows away from the
    // all-dead state that the cosine losses reject.
    for (double& b : params.head_bias) b = rng.uniform(0.0, bound);
    return params;
}

Matrix encoder_forward(const EncoderParams& params, const Matrix& batch,
                       std::uint64_t dropout_seed, ForwardCache* cache) {
    const auto& cfg = params.config;
    require(static_cast<int>(batch.cols) == cfg.input_len,
            "batch width " + std::to_string(batch.cols) + " does not match input_len " +
                std::to_string(cfg.input_len));
    const std::size_t B = batch.rows;
    const bool train = params.mode == Mode::kTrain;
    if (train) require(B >= 2, "train-mode forward needs a batch of >= 2 instances");
    require(B >= 1, "empty batch");

    if (cache != nullptr) {
        *cache = ForwardCache{};
        cache->params_version = params.version;
        cache->train_mode = train;
        cache->batch = B;
        cache->blocks.resize(params.blocks.size());
    }

    // Activations in [sample][channel][position] layout, contiguous per channel.
    std::vector<double> act(batch.data);
    int len = cfg.input_len;

    for (std::size_t bi = 0; bi < params.blocks.size(); ++bi) {
        const ConvBlock& block = params.blocks[bi];
        const int c_in = block.in_channels;
        const int c_out = block.out_channels;
        const int len_conv = conv_out_len(len);
        const int len_pool = len_conv / kPoolWindow;
        const std::size_t patch = static_cast<std::size_t>(c_in) * kConvKernel;

        // im2col: one patch row per output position.
        std::vector<double> cols(B * len_conv * patch);
        for (std::size_t s = 0; s < B; ++s) {
            const double* in = act.data() + s * c_in * len;
            for (int t = 0; t < len_conv; ++t) {
                double* dst = cols.data() + (s * len_conv + t) * patch;
                for (int ci = 0; ci < c_in; ++ci) {
                    const double* src = in + ci * len + t * kConvStride;
                    for (int k = 0; k < kConvKernel; ++k) dst[ci * kConvKernel + k] = src[k];
                }
            }
        }

        std::vector<double> conv(B * c_out * len_conv);
        for (std::size_t s = 0; s < B; ++s) {
            for (int o = 0; o < c_out; ++o) {
                double* dst = conv.data() + (s * c_out + o) * len_conv;
                const double* w = block.weight.row(o);
                for (int t = 0; t < len_conv; ++t) {
                    dst[t] = block.bias[o] +
                             kernels::dot(cols.data() + (s * len_conv + t) * patch, w, patch);
                }
            }
        }

        // Batch norm: statistics per channel over batch and position.
        std::vector<double> mean(c_out), var(c_out), inv_std(c_out);
        const double n_stat = static_cast<double>(B * len_conv);
        for (int o = 0; o < c_out; ++o) {
            if (train) {
                double total = 0.0, total_sq = 0.0;
                for (std::size_t s = 0; s < B; ++s) {
                    const double* z = conv.data() + (s * c_out + o) * len_conv;
                    total += kernels::sum(z, len_conv);
                    total_sq += kernels::sumsq(z, len_conv);
                }
                mean[o] = total / n_stat;
                var[o] = total_sq / n_stat - mean[o] * mean[o];
                if (var[o] < 0.0) var[o] = 0.0;
            } else {
                mean[o] = block.running_mean[o];
                var[o] = block.running_var[o];
            }
            inv_std[o] = 1.0 / std::sqrt(var[o] + cfg.bn_epsilon);
        }

        std::vector<double> xhat(conv.size()), bn_out(conv.size());
        for (std::size_t s = 0; s < B; ++s) {
            for (int o = 0; o < c_out; ++o) {
                const std::size_t base = (s * c_out + o) * len_conv;
                for (int t = 0; t < len_conv; ++t) {
                    const double xh = (conv[base + t] - mean[o]) * inv_std[o];
                    xhat[base + t] = xh;
                    bn_out[base + t] = block.gamma[o] * xh + block.beta[o];
                }
            }
        }

        // ReLU then max-pool (window 2, stride 2, ties to the first index).
        std::vector<double> pooled(B * c_out * len_pool);
        std::vector<std::uint8_t> argmax(B * c_out * len_pool);
        for (std::size_t s = 0; s < B; ++s) {
            for (int o = 0; o < c_out; ++o) {
                const std::size_t src_base = (s * c_out + o) * len_conv;
                const std::size_t dst_base = (s * c_out + o) * len_pool;
                for (int t = 0; t < len_pool; ++t) {
                    const double a = bn_out[src_base + 2 * t];
                    const double b = bn_out[src_base + 2 * t + 1];
                    const std::uint8_t off = b > a ? 1 : 0;
                    argmax[dst_base + t] = off;
                    const double m = off ? b : a;
                    pooled[dst_base + t] = m > 0.0 ? m : 0.0;
                }
            }
        }

        std::vector<double> mask;
        if (train && cfg.dropout_rate > 0.0) {
            Rng drop_rng(derive_seed(dropout_seed, bi));
            const double keep = 1.0 - cfg.dropout_rate;
            mask.resize(pooled.size());
            for (std::size_t i = 0; i < pooled.size(); ++i) {
                mask[i] = drop_rng.uniform01() < cfg.dropout_rate ? 0.0 : 1.0 / keep;
                pooled[i] *= mask[i];
            }
        }

        if (cache != nullptr) {
            BlockCache& bc = cache->blocks[bi];
            bc.len_conv = len_conv;
            bc.len_pool = len_pool;
            bc.cols = std::move(cols);
            bc.xhat = std::move(xhat);
            bc.bn_out = std::move(bn_out);
            bc.inv_std = inv_std;
            if (train) {
                bc.batch_mean = mean;
                bc.batch_var = var;
            }
            bc.pool_argmax = std::move(argmax);
            bc.dropout_mask = std::move(mask);
        }

        act = std::move(pooled);
        len = len_pool;
    }

    const int flatten = params.flatten_dim();
    Matrix flat(B, static_cast<std::size_t>(flatten));
    flat.data = act;  // [channel][position] per sample already matches row-major

    Matrix head_pre(B, static_cast<std::size_t>(cfg.embed_dim));
    for (std::size_t s = 0; s < B; ++s) {
        for (int e = 0; e < cfg.embed_dim; ++e) {
            head_pre.at(s, e) = params.head_bias[e] +
                                kernels::dot(params.head_weight.row(e), flat.row(s), flatten);
        }
    }

    Matrix out = head_pre;
    kernels::relu(out.data.data(), out.data.size());

    if (cache != nullptr) {
        cache->flat = std::move(flat);
        cache->head_pre = std::move(head_pre);
    }
    return out;
}

EncoderGrads encoder_backward(const EncoderParams& params, const ForwardCache& cache,
                              const Matrix& grad_output) {
    if (cache.params_version != params.version) {
        throw std::invalid_argument(
            "stale forward cache: parameters were updated after the forward pass");
    }
    require(cache.train_mode, "backward requires a train-mode forward cache");
    const auto& cfg = params.config;
    const std::size_t B = cache.batch;
    require(grad_output.rows == B &&
                static_cast<int>(grad_output.cols) == cfg.embed_dim,
            "grad_output shape mismatch");

    EncoderGrads grads;
    grads.blocks.resize(params.blocks.size());
    const int flatten = params.flatten_dim();

    // Head: ReLU gate, then dense.
    Matrix d_pre = grad_output;
    kernels::relu_backward(cache.head_pre.data.data(), d_pre.data.data(), d_pre.data.size());

    grads.head_weight = Matrix(cfg.embed_dim, flatten);
    grads.head_bias.assign(cfg.embed_dim, 0.0);
    std::vector<double> d_act(B * static_cast<std::size_t>(flatten), 0.0);
    for (std::size_t s = 0; s < B; ++s) {
        double* df = d_act.data() + s * flatten;
        for (int e = 0; e < cfg.embed_dim; ++e) {
            const double g = d_pre.at(s, e);
            if (g == 0.0) continue;
            grads.head_bias[e] += g;
            kernels::axpy(g, cache.flat.row(s), grads.head_weight.row(e), flatten);
            kernels::axpy(g, params.head_weight.row(e), df, flatten);
        }
    }

    for (int bi = static_cast<int>(params.blocks.size()) - 1; bi >= 0; --bi) {
        const ConvBlock& block = params.blocks[bi];
        const BlockCache& bc = cache.blocks[bi];
        const int c_in = block.in_channels;
        const int c_out = block.out_channels;
        const int len_conv = bc.len_conv;
        const int len_pool = bc.len_pool;
        const std::size_t patch = static_cast<std::size_t>(c_in) * kConvKernel;
        const int len_in = bi == 0 ? cfg.input_len : cache.blocks[bi - 1].len_pool;

        if (!bc.dropout_mask.empty()) {
            for (std::size_t i = 0; i < d_act.size(); ++i) d_act[i] *= bc.dropout_mask[i];
        }

        // Un-pool into the ReLU positions, then gate by the pre-ReLU sign.
        std::vector<double> d_bn(B * c_out * len_conv, 0.0);
        for (std::size_t s = 0; s < B; ++s) {
            for (int o = 0; o < c_out; ++o) {
                const std::size_t pool_base = (s * c_out + o) * len_pool;
                const std::size_t conv_base = (s * c_out + o) * len_conv;
                for (int t = 0; t < len_pool; ++t) {
                    d_bn[conv_base + 2 * t + bc.pool_argmax[pool_base + t]] =
                        d_act[pool_base + t];
                }
            }
        }
        kernels::relu_backward(bc.bn_out.data(), d_bn.data(), d_bn.size());

        // Batch-norm backward with batch statistics:
        // dz = gamma*inv_std*(dy - mean(dy) - xhat*mean(dy*xhat))
        EncoderGrads::Block& bg = grads.blocks[bi];
        bg.weight = Matrix(c_out, patch);
        bg.bias.assign(c_out, 0.0);
        bg.gamma.assign(c_out, 0.0);
        bg.beta.assign(c_out, 0.0);

        std::vector<double> d_conv(d_bn.size());
        const double n_stat = static_cast<double>(B) * len_conv;
        for (int o = 0; o < c_out; ++o) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t s = 0; s < B; ++s) {
                const std::size_t base = (s * c_out + o) * len_conv;
                sum_dy += kernels::sum(d_bn.data() + base, len_conv);
                sum_dy_xhat += kernels::dot(d_bn.data() + base, bc.xhat.data() + base, len_conv);
            }
            bg.beta[o] = sum_dy;
            bg.gamma[o] = sum_dy_xhat;
            const double mean_dy = sum_dy / n_stat;
            const double mean_dy_xhat = sum_dy_xhat / n_stat;
            const double coeff = block.gamma[o] * bc.inv_std[o];
            for (std::size_t s = 0; s < B; ++s) {
                const std::size_t base = (s * c_out + o) * len_conv;
                for (int t = 0; t < len_conv; ++t) {
                    d_conv[base + t] = coeff * (d_bn[base + t] - mean_dy -
                                                bc.xhat[base + t] * mean_dy_xhat);
                }
            }
        }

        // Convolution backward via the cached im2col patches.
        std::vector<double> d_cols(bc.cols.size(), 0.0);
        for (std::size_t s = 0; s < B; ++s) {
            for (int o = 0; o < c_out; ++o) {
                const double* dz = d_conv.data() + (s * c_out + o) * len_conv;
                for (int t = 0; t < len_conv; ++t) {
                    if (dz[t] == 0.0) continue;
                    const std::size_t row = (s * len_conv + t) * patch;
                    bg.bias[o] += dz[t];
                    kernels::axpy(dz[t], bc.cols.data() + row, bg.weight.row(o), patch);
                    kernels::axpy(dz[t], block.weight.row(o), d_cols.data() + row, patch);
                }
            }
        }

        std::vector<double> d_in(B * c_in * len_in, 0.0);
        for (std::size_t s = 0; s < B; ++s) {
            double* dst = d_in.data() + s * c_in * len_in;
            for (int t = 0; t < len_conv; ++t) {
                const double* src = d_cols.data() + (s * len_conv + t) * patch;
                for (int ci = 0; ci < c_in; ++ci) {
                    double* d = dst + ci * len_in + t * kConvStride;
                    for (int k = 0; k < kConvKernel; ++k) d[k] += src[ci * kConvKernel + k];
                }
            }
        }
        d_act = std::move(d_in);
    }

    grads.input = Matrix(B, static_cast<std::size_t>(cfg.input_len));
    grads.input.data = std::move(d_act);
    return grads;
}

void commit_batch_stats(EncoderParams& params, const ForwardCache& cache) {
    require(cache.train_mode, "batch statistics exist only for train-mode caches");
    if (cache.params_version != params.version) {
        throw std::invalid_argument("stale forward cache passed to commit_batch_stats");
    }
    const double momentum = params.config.bn_momentum;
    for (std::size_t bi = 0; bi < params.blocks.size(); ++bi) {
        ConvBlock& block = params.blocks[bi];
        const BlockCache& bc = cache.blocks[bi];
        const double n_stat = static_cast<double>(cache.batch) * bc.len_conv;
        const double unbias = n_stat / (n_stat - 1.0);
        for (int o = 0; o < block.out_channels; ++o) {
            block.running_mean[o] =
                (1.0 - momentum) * block.running_mean[o] + momentum * bc.batch_mean[o];
            block.running_var[o] =
                (1.0 - momentum) * block.running_var[o] + momentum * bc.batch_var[o] * unbias;
        }
    }
    params.mark_updated();
}

}  // namespace crocs
