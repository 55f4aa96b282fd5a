#include "crocs/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "crocs/kernels.hpp"
#include "crocs/rng.hpp"

namespace crocs {

namespace {

std::vector<std::span<double>> encoder_param_views(EncoderParams& params,
                                                   PrototypeBank& bank) {
    std::vector<std::span<double>> views;
    for (ConvBlock& block : params.blocks) {
        views.emplace_back(block.weight.data);
        views.emplace_back(block.bias);
        views.emplace_back(block.gamma);
        views.emplace_back(block.beta);
    }
    views.emplace_back(params.head_weight.data);
    views.emplace_back(params.head_bias);
    views.emplace_back(bank.matrix.data);
    return views;
}

std::vector<std::span<const double>> grad_views(const EncoderGrads& grads,
                                                const Matrix& grad_prototypes) {
    std::vector<std::span<const double>> views;
    for (const EncoderGrads::Block& block : grads.blocks) {
        views.emplace_back(block.weight.data);
        views.emplace_back(block.bias);
        views.emplace_back(block.gamma);
        views.emplace_back(block.beta);
    }
    views.emplace_back(grads.head_weight.data);
    views.emplace_back(grads.head_bias);
    views.emplace_back(grad_prototypes.data);
    return views;
}

struct LabelledIndex {
    std::vector<std::size_t> segments;  // indices into dataset.segments
};

LabelledIndex labelled_train_instances(const Dataset& dataset, double label_fraction,
                                       std::uint64_t seed) {
    std::vector<long> patients;
    for (std::size_t i = 0; i < dataset.segments.size(); ++i) {
        if (dataset.split[i] != SplitTag::kTrain || !dataset.segments[i].labelled) continue;
        const long pid = dataset.segments[i].patient_id;
        if (std::find(patients.begin(), patients.end(), pid) == patients.end()) {
            patients.push_back(pid);
        }
    }

    std::vector<long> kept = patients;
    if (label_fraction < 1.0) {
        Rng rng(derive_seed(seed, 2));
        rng.shuffle(kept);
        const std::size_t keep =
            std::max<std::size_t>(1, static_cast<std::size_t>(
                                         std::lround(label_fraction * patients.size())));
        kept.resize(std::min(keep, kept.size()));
    }

    LabelledIndex index;
    for (std::size_t i = 0; i < dataset.segments.size(); ++i) {
        if (dataset.split[i] != SplitTag::kTrain || !dataset.segments[i].labelled) continue;
        if (std::find(kept.begin(), kept.end(), dataset.segments[i].patient_id) == kept.end()) {
            continue;
        }
        index.segments.push_back(i);
    }
    return index;
}

Matrix gather_batch(const Dataset& dataset, const std::vector<std::size_t>& order,
                    std::size_t begin, std::size_t count,
                    std::vector<AttributeSet>* attrs) {
    const std::size_t width = dataset.segments[order[begin]].values.size();
    Matrix batch(count, width);
    attrs->clear();
    for (std::size_t r = 0; r < count; ++r) {
        const Segment& s = dataset.segments[order[begin + r]];
        std::copy(s.values.begin(), s.values.end(), batch.row(r));
        attrs->push_back(*s.attrs);
    }
    return batch;
}

}  // namespace

AdamState::AdamState(const std::vector<std::size_t>& tensor_sizes) {
    for (std::size_t n : tensor_sizes) {
        m_.emplace_back(n, 0.0);
        v_.emplace_back(n, 0.0);
    }
}

void AdamState::adam_step(const std::vector<std::span<double>>& params,
                          const std::vector<std::span<const double>>& grads,
                          double lr) {
    require(params.size() == m_.size() && grads.size() == m_.size(),
            "adam_step tensor count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        require(params[i].size() == m_[i].size() && grads[i].size() == m_[i].size(),
                "adam_step tensor shape mismatch");
    }
    ++step_;
    const double bias1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
    const double bias2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        kernels::adam_update(params[i].data(), m_[i].data(), v_[i].data(),
                             grads[i].data(), m_[i].size(), lr, kBeta1, kBeta2,
                             kEpsilon, bias1, bias2);
    }
}

TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    require(!dataset.segments.empty(), "empty dataset");
    require(config.batch_size >= 2, "batch_size must be >= 2");
    require(config.epochs >= 0, "epochs must be >= 0");
    require(config.label_fraction > 0.0 && config.label_fraction <= 1.0,
            "label_fraction must lie in (0, 1]");
    const int signal_len = static_cast<int>(dataset.segments[0].values.size());

    TrainResult result;
    EncoderConfig enc_cfg;
    enc_cfg.input_len = signal_len;
    enc_cfg.embed_dim = config.embed_dim;
    enc_cfg.block_count = config.encoder_blocks;
    enc_cfg.dropout_rate = config.dropout_rate;
    result.encoder = init_encoder(enc_cfg, derive_seed(config.seed, 0));
    result.bank = init_prototypes(dataset.space, config.embed_dim,
                                  derive_seed(config.seed, 1), config.beta);

    const LabelledIndex train_index =
        labelled_train_instances(dataset, config.label_fraction, config.seed);
    require(!train_index.segments.empty(), "no labelled training instances");
    for (std::size_t i : train_index.segments) {
        require(dataset.segments[i].attrs.has_value(),
                "training instances must be binned before train()");
    }

    std::vector<std::size_t> val_index;
    for (std::size_t i = 0; i < dataset.segments.size(); ++i) {
        if (dataset.split[i] == SplitTag::kVal && dataset.segments[i].labelled &&
            dataset.segments[i].attrs.has_value()) {
            val_index.push_back(i);
        }
    }

    LossConfig loss_cfg{config.tau_s, config.tau_omega, config.ablation_mode};

    std::vector<std::size_t> sizes;
    for (auto view : encoder_param_views(result.encoder, result.bank)) {
        sizes.push_back(view.size());
    }
    AdamState adam(sizes);

    Rng shuffle_rng(derive_seed(config.seed, 3));
    std::vector<std::size_t> order = train_index.segments;
    std::vector<AttributeSet> attrs;
    const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        result.encoder.mode = Mode::kTrain;

        double nce_sum = 0.0, reg_sum = 0.0, total_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
            const std::size_t count = std::min(batch_size, order.size() - begin);
            if (count < 2) break;  // batch norm needs batch statistics

            const Matrix batch = gather_batch(dataset, order, begin, count, &attrs);
            ForwardCache cache;
            const std::uint64_t step_seed =
                derive_seed(config.seed, 0x100000 + static_cast<std::uint64_t>(adam.step()));
            const Matrix embeddings =
                encoder_forward(result.encoder, batch, step_seed, &cache);
            for (std::size_t r = 0; r < embeddings.rows; ++r) {
                const double norm_sq =
                    kernels::sumsq(embeddings.row(r), embeddings.cols);
                // ReLU maps NaN activations to zero, so a dead row is the
                // visible symptom of a numerically blown-up forward pass.
                if (!std::isfinite(norm_sq) || norm_sq == 0.0) {
                    throw TrainingDiverged("degenerate embeddings at epoch " +
                                           std::to_string(epoch) + ", step " +
                                           std::to_string(adam.step()));
                }
            }

            const LossBreakdown loss = total_loss(embeddings, result.bank, attrs, loss_cfg);
            if (!std::isfinite(loss.total)) {
                throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) +
                                       ", step " + std::to_string(adam.step()));
            }
            nce_sum += loss.nce;
            reg_sum += loss.reg;
            total_sum += loss.total;
            ++steps;

            const EncoderGrads grads =
                encoder_backward(result.encoder, cache, loss.grad_embeddings);
            commit_batch_stats(result.encoder, cache);
            adam.adam_step(encoder_param_views(result.encoder, result.bank),
                           grad_views(grads, loss.grad_prototypes), config.learning_rate);
            result.encoder.mark_updated();
        }

        for (double v : result.bank.matrix.data) {
            if (!std::isfinite(v)) {
                throw TrainingDiverged("non-finite prototype bank after epoch " +
                                       std::to_string(epoch));
            }
        }

        EpochLoss entry;
        entry.epoch = epoch;
        if (steps > 0) {
            entry.train_nce = nce_sum / steps;
            entry.train_reg = reg_sum / steps;
            entry.train_total = total_sum / steps;
        }

        if (!val_index.empty()) {
            result.encoder.mode = Mode::kEval;
            double v_nce = 0.0, v_reg = 0.0, v_total = 0.0;
            std::size_t v_steps = 0;
            for (std::size_t begin = 0; begin < val_index.size(); begin += batch_size) {
                const std::size_t count = std::min(batch_size, val_index.size() - begin);
                const Matrix batch = gather_batch(dataset, val_index, begin, count, &attrs);
                const Matrix embeddings = encoder_forward(result.encoder, batch, 0);
                const LossBreakdown loss =
                    total_loss(embeddings, result.bank, attrs, loss_cfg);
                v_nce += loss.nce;
                v_reg += loss.reg;
                v_total += loss.total;
                ++v_steps;
            }
            entry.val_nce = v_nce / v_steps;
            entry.val_reg = v_reg / v_steps;
            entry.val_total = v_total / v_steps;
            result.encoder.mode = Mode::kTrain;
        }
        result.trace.push_back(entry);
        if (on_epoch) on_epoch(epoch, result.encoder, result.bank);
    }

    result.encoder.mode = Mode::kEval;
    return result;
}

void write_loss_trace_csv(const std::vector<EpochLoss>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "epoch,split,nce,reg,total\n";
    char buf[128];
    for (const EpochLoss& e : trace) {
        std::snprintf(buf, sizeof(buf), "%d,train,%.17g,%.17g,%.17g\n", e.epoch,
                      e.train_nce, e.train_reg, e.train_total);
        out << buf;
        std::snprintf(buf, sizeof(buf), "%d,val,%.17g,%.17g,%.17g\n", e.epoch,
                      e.val_nce, e.val_reg, e.val_total);
        out << buf;
    }
}

}  // namespace crocs
