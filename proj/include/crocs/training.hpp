#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "crocs/data.hpp"
#include "crocs/encoder.hpp"
#include "crocs/losses.hpp"
#include "crocs/prototypes.hpp"

namespace crocs {

struct TrainConfig {
    double tau_s = 0.1;
    double tau_omega = 1.0;
    double beta = 0.2;
    int embed_dim = 128;
    int batch_size = 256;
    double learning_rate = 1e-4;
    int epochs = 0;
    AblationMode ablation_mode = AblationMode::kSoftReg;
    double label_fraction = 1.0;
    std::uint64_t seed = 0;
    int encoder_blocks = 3;
    double dropout_rate = 0.1;
};

/// Bias-corrected Adam over an ordered list of tensors; the step counter is
/// shared and increments once per adam_step call.
class AdamState {
  public:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEpsilon = 1e-8;

    explicit AdamState(const std::vector<std::size_t>& tensor_sizes);

    long step() const { return step_; }

    /// params[i] and grads[i] must match the size declared at construction.
    void adam_step(const std::vector<std::span<double>>& params,
                   const std::vector<std::span<const double>>& grads, double lr);

  private:
    std::vector<std::vector<double>> m_, v_;
    long step_ = 0;
};

struct EpochLoss {
    int epoch = 0;
    double train_nce = 0.0, train_reg = 0.0, train_total = 0.0;
    double val_nce = 0.0, val_reg = 0.0, val_total = 0.0;
};

struct TrainResult {
    EncoderParams encoder;
    PrototypeBank bank;
    std::vector<EpochLoss> trace;
};

/// Thrown when a training step produces a non-finite loss or bank.
struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Called after every epoch; hosts use it for interval checkpoints.
using EpochCallback =
    std::function<void(int epoch, const EncoderParams&, const PrototypeBank&)>;

/// Joint optimization of encoder and prototypes on the labelled training
/// split. Epoch order is a seeded shuffle; a trailing mini-batch smaller
/// than 2 is dropped. label_fraction < 1 subsamples labelled patients once
/// before the first epoch. Fully deterministic under (dataset, config).
TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

void write_loss_trace_csv(const std::vector<EpochLoss>& trace, const std::string& path);

}  // namespace crocs
