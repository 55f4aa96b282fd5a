#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crocs/attributes.hpp"
#include "crocs/data.hpp"
#include "crocs/losses.hpp"
#include "crocs/training.hpp"

namespace crocs {

/// Flat key-value run configuration (JSON on disk). Unknown keys are
/// rejected; every field has a default, and the resolved configuration is
/// echoed to an effective-config file per run.
struct RunConfig {
    std::string dataset_csv;
    std::string output_dir;

    std::vector<std::string> class_names = {"class_0", "class_1", "class_2", "class_3"};
    std::vector<std::string> sex_labels = {"female", "male"};
    int age_bin_count = 4;
    // Informational echo of the fitted bin boundaries; every run recomputes
    // them from its own training split.
    std::vector<double> age_boundaries;
    NormalizationMode normalization = NormalizationMode::kMinMax;
    std::vector<double> split_ratios = {0.6, 0.2, 0.2};
    std::uint64_t split_seed = 12345;

    double tau_s = 0.1;
    double tau_omega = 1.0;  // serialized as "inf" when infinite
    double beta = 0.2;
    int embedding_dim = 128;
    int batch_size = 256;
    double learning_rate = 1e-4;
    int epochs = 30;
    AblationMode ablation = AblationMode::kSoftReg;
    double label_fraction = 1.0;
    std::vector<std::uint64_t> seeds = {0};
    int encoder_blocks = 3;
    double dropout_rate = 0.1;
    int checkpoint_every = 0;  // epochs between interval checkpoints; 0 = final only

    std::vector<int> retrieval_k = {1, 5, 10};
    bool normalize_at_inference = true;
    SplitTag eval_split = SplitTag::kVal;

    int gen_patients = 200;
    int gen_segments_per_patient = 5;
    int gen_signal_len = 512;
    double gen_noise_sd = 0.1;
    std::uint64_t gen_seed = 7;

    AttributeSpace space() const {
        return {static_cast<int>(class_names.size()),
                static_cast<int>(sex_labels.size()), age_bin_count};
    }

    TrainConfig train_config(std::uint64_t seed) const;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config_json(const std::string& text, const std::string& origin);
std::string run_config_to_json(const RunConfig& config);
void write_run_config(const RunConfig& config, const std::string& path);

std::string ablation_name(AblationMode mode);
AblationMode ablation_from_name(const std::string& name);

}  // namespace crocs
