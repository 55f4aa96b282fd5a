#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crocs/kernels.hpp"
#include "crocs/runner.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string output_dir;
};

crocs::RunConfig resolve_config(const CommonFlags& flags) {
    crocs::RunConfig config;
    if (!flags.config_path.empty()) config = crocs::load_run_config(flags.config_path);
    if (!flags.output_dir.empty()) config.output_dir = flags.output_dir;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CROCS: clinical-prototype contrastive training, clustering, and retrieval"};
    app.require_subcommand(1);

    CommonFlags flags;

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset CSV");
    gen->add_option("--config", flags.config_path, "Run configuration JSON");
    gen->add_option("--out", flags.output_dir, "Output directory");
    int patients = -1, segments = -1, classes = -1, age_bins = -1, signal_len = -1;
    double noise_sd = -1.0;
    std::int64_t gen_seed = -1, split_seed = -1;
    gen->add_option("--patients", patients, "Number of synthetic patients");
    gen->add_option("--segments-per-patient", segments, "Segments per patient");
    gen->add_option("--classes", classes, "Number of disease classes");
    gen->add_option("--age-bins", age_bins, "Number of age bins");
    gen->add_option("--d", signal_len, "Samples per segment");
    gen->add_option("--noise-sd", noise_sd, "Additive noise standard deviation");
    gen->add_option("--seed", gen_seed, "Generation seed");
    gen->add_option("--split-seed", split_seed, "Patient-split seed");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train encoder and prototypes");
    train_cmd->add_option("--config", flags.config_path, "Run configuration JSON")->required();
    train_cmd->add_option("--out", flags.output_dir, "Output directory override");
    std::string ablation, tau_omega_text;
    double label_fraction = -1.0;
    train_cmd->add_option("--ablation", ablation, "hard | soft | soft_reg");
    train_cmd->add_option("--tau-omega", tau_omega_text, "Weight temperature, or inf");
    train_cmd->add_option("--label-fraction", label_fraction, "Labelled-patient fraction");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Compute clustering and retrieval metrics");
    eval_cmd->add_option("--config", flags.config_path, "Run configuration JSON")->required();
    eval_cmd->add_option("--out", flags.output_dir, "Output directory override");
    std::vector<std::string> checkpoints;
    std::vector<int> ks;
    std::string eval_split;
    std::string query_filter = "both";
    bool export_embeddings = false;
    eval_cmd->add_option("--checkpoint", checkpoints, "Checkpoint file(s); default per-seed");
    eval_cmd->add_option("--k", ks, "Retrieval K values");
    eval_cmd->add_option("--split", eval_split, "train | val | test");
    eval_cmd->add_option("--query", query_filter, "Retrieval queries: cp | tp | both");
    eval_cmd->add_flag("--export-embeddings", export_embeddings, "Write embeddings CSV");

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "Prototype dendrograms and projection");
    analyze_cmd->add_option("--config", flags.config_path, "Run configuration JSON")->required();
    analyze_cmd->add_option("--out", flags.output_dir, "Output directory override");
    std::string checkpoint_path, hac;
    bool project = false;
    analyze_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    analyze_cmd->add_option("--hac", hac, "rows | cols | both");
    analyze_cmd->add_flag("--project", project, "Write 2-D PCA projection of the bank");

    std::string backend;
    app.add_option("--kernels", backend, "Kernel backend: auto | scalar | avx2");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors exit 1, --help exits 0
    }

    try {
        if (backend == "scalar") {
            crocs::kernels::set_backend(crocs::kernels::Backend::kScalar);
        } else if (backend == "avx2") {
            if (!crocs::kernels::set_backend(crocs::kernels::Backend::kAvx2)) {
                throw std::runtime_error("avx2 kernels unavailable on this CPU");
            }
        }

        if (gen->parsed()) {
            crocs::RunConfig config = resolve_config(flags);
            if (patients > 0) config.gen_patients = patients;
            if (segments > 0) config.gen_segments_per_patient = segments;
            if (classes > 0) {
                config.class_names.clear();
                for (int c = 0; c < classes; ++c) {
                    config.class_names.push_back("class_" + std::to_string(c));
                }
            }
            if (age_bins > 0) config.age_bin_count = age_bins;
            if (signal_len > 0) config.gen_signal_len = signal_len;
            if (noise_sd >= 0.0) config.gen_noise_sd = noise_sd;
            if (gen_seed >= 0) config.gen_seed = static_cast<std::uint64_t>(gen_seed);
            if (split_seed >= 0) config.split_seed = static_cast<std::uint64_t>(split_seed);
            config.dataset_csv.clear();  // always lands in output_dir
            const std::string path = crocs::cmd_gen_data(config);
            std::cout << "wrote " << path << "\n";
        } else if (train_cmd->parsed()) {
            crocs::RunConfig config = resolve_config(flags);
            if (!ablation.empty()) config.ablation = crocs::ablation_from_name(ablation);
            if (!tau_omega_text.empty()) {
                config.tau_omega = tau_omega_text == "inf"
                                       ? crocs::kInfiniteTau
                                       : std::stod(tau_omega_text);
            }
            if (label_fraction > 0.0) config.label_fraction = label_fraction;
            for (const std::string& path : crocs::cmd_train(config)) {
                std::cout << "wrote " << path << "\n";
            }
        } else if (eval_cmd->parsed()) {
            crocs::RunConfig config = resolve_config(flags);
            if (!ks.empty()) config.retrieval_k = ks;
            if (!eval_split.empty()) {
                if (eval_split == "train") config.eval_split = crocs::SplitTag::kTrain;
                else if (eval_split == "val") config.eval_split = crocs::SplitTag::kVal;
                else if (eval_split == "test") config.eval_split = crocs::SplitTag::kTest;
                else throw std::runtime_error("--split must be train, val, or test");
            }
            const crocs::EvalOutput output =
                crocs::cmd_eval(config, checkpoints, export_embeddings, query_filter);
            for (const std::string& path : output.written_files) {
                std::cout << "wrote " << path << "\n";
            }
        } else if (analyze_cmd->parsed()) {
            crocs::RunConfig config = resolve_config(flags);
            const bool rows = hac == "rows" || hac == "both";
            const bool cols = hac == "cols" || hac == "both";
            if (!hac.empty() && !rows && !cols) {
                throw std::runtime_error("--hac must be rows, cols, or both");
            }
            for (const std::string& path :
                 crocs::cmd_analyze(config, checkpoint_path, rows, cols, project)) {
                std::cout << "wrote " << path << "\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
