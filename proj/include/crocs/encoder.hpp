#pragma once

#include <cstdint>
#include <vector>

#include "crocs/matrix.hpp"

namespace crocs {

enum class Mode { kTrain, kEval };

inline constexpr int kConvKernel = 7;
inline constexpr int kConvStride = 3;
inline constexpr int kPoolWindow = 2;
inline constexpr int kMaxBlocks = 3;
inline constexpr int kBlockChannels[kMaxBlocks] = {4, 16, 32};

struct EncoderConfig {
    int input_len = 2500;
    int embed_dim = 128;
    int block_count = 3;  // 1..3; channel progression is a prefix of 4,16,32
    double dropout_rate = 0.1;
    double bn_epsilon = 1e-5;
    double bn_momentum = 0.1;
};

struct ConvBlock {
    int in_channels = 0;
    int out_channels = 0;
    Matrix weight;             // out_channels x (in_channels * kConvKernel)
    std::vector<double> bias;  // out_channels
    std::vector<double> gamma, beta;               // batch-norm affine
    std::vector<double> running_mean, running_var; // eval-mode statistics
};

/// All encoder weights plus mode state. `version` increments on every
/// parameter mutation; a backward pass checks it against the cache.
struct EncoderParams {
    EncoderConfig config;
    std::vector<ConvBlock> blocks;
    Matrix head_weight;             // embed_dim x flatten_dim
    std::vector<double> head_bias;  // embed_dim
    Mode mode = Mode::kTrain;
    std::uint64_t version = 0;

    int flatten_dim() const { return static_cast<int>(head_weight.cols); }
    void mark_updated() { ++version; }
};

/// Alternating conv/pool output lengths, 2 entries per block. Throws,
/// naming the failing block, when a stage would produce length < 1.
std::vector<int> encoder_stage_lengths(int input_len, int block_count);
int encoder_flatten_dim(int input_len, int block_count);

/// Conv and dense weights uniform in +-1/sqrt(fan-in); batch-norm identity;
/// deterministic under seed. The two-argument-config overload builds the
/// standard three-block network.
EncoderParams init_encoder(int input_len, int embed_dim, std::uint64_t seed);
EncoderParams init_encoder(const EncoderConfig& config, std::uint64_t seed);

struct BlockCache {
    int len_conv = 0;
    int len_pool = 0;
    std::vector<double> cols;       // (B*len_conv) x (in_channels*kernel)
    std::vector<double> xhat;       // normalized conv outputs, B x C x len_conv
    std::vector<double> bn_out;     // pre-ReLU, same layout as xhat
    std::vector<double> inv_std;    // per channel
    std::vector<double> batch_mean, batch_var;  // biased; train mode only
    std::vector<std::uint8_t> pool_argmax;      // offset in window, B x C x len_pool
    std::vector<double> dropout_mask;           // scaled inverted mask; empty in eval
};

struct ForwardCache {
    std::uint64_t params_version = 0;
    bool train_mode = false;
    std::size_t batch = 0;
    std::vector<BlockCache> blocks;
    Matrix flat;      // B x flatten_dim, input to the head
    Matrix head_pre;  // B x embed_dim, pre-ReLU
};

/// Runs the network on a B x D batch and returns B x E embeddings.
/// TRAIN mode requires B >= 2 and applies batch statistics plus inverted
/// dropout seeded by dropout_seed; EVAL mode is a pure function of
/// (params, batch). Pass a cache to enable a subsequent backward pass.
Matrix encoder_forward(const EncoderParams& params, const Matrix& batch,
                       std::uint64_t dropout_seed, ForwardCache* cache = nullptr);

struct EncoderGrads {
    struct Block {
        Matrix weight;
        std::vector<double> bias, gamma, beta;
    };
    std::vector<Block> blocks;
    Matrix head_weight;
    std::vector<double> head_bias;
    Matrix input;  // B x D
};

/// Exact reverse-mode gradients of the TRAIN-mode forward map. Throws if the
/// cache is stale (parameters updated since the forward) or came from EVAL.
EncoderGrads encoder_backward(const EncoderParams& params, const ForwardCache& cache,
                              const Matrix& grad_output);

/// Folds the cached batch statistics into the running estimates
/// (momentum-weighted; variance stored unbiased). Train-mode caches only.
void commit_batch_stats(EncoderParams& params, const ForwardCache& cache);

}  // namespace crocs
