#include "crocs/run_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace crocs {

namespace {

using nlohmann::json;

double tau_omega_from_json(const json& value) {
    if (value.is_string()) {
        const std::string s = value.get<std::string>();
        if (s == "inf" || s == "infinite" || s == "infinity") return kInfiniteTau;
        throw std::invalid_argument("tau_omega string must be \"inf\"");
    }
    return value.get<double>();
}

SplitTag split_from_name(const std::string& name) {
    if (name == "train") return SplitTag::kTrain;
    if (name == "val") return SplitTag::kVal;
    if (name == "test") return SplitTag::kTest;
    throw std::invalid_argument("eval_split must be train, val, or test");
}

std::string split_name(SplitTag tag) {
    switch (tag) {
        case SplitTag::kTrain: return "train";
        case SplitTag::kVal: return "val";
        case SplitTag::kTest: return "test";
        default: return "unsplit";
    }
}

NormalizationMode normalization_from_name(const std::string& name) {
    if (name == "minmax") return NormalizationMode::kMinMax;
    if (name == "standardize") return NormalizationMode::kStandardize;
    throw std::invalid_argument("normalization must be minmax or standardize");
}

void validate(const RunConfig& c) {
    require(!c.class_names.empty(), "class_names must be non-empty");
    require(!c.sex_labels.empty(), "sex_labels must be non-empty");
    require(c.age_bin_count >= 1, "age_bin_count must be >= 1");
    require(c.split_ratios.size() == 3, "split_ratios needs 3 entries");
    require(c.tau_s > 0.0, "tau_s must be positive");
    require(c.tau_omega > 0.0, "tau_omega must be positive or \"inf\"");
    require(c.beta > 0.0, "beta must be positive");
    require(c.embedding_dim >= 2, "embedding_dim must be >= 2");
    require(c.batch_size >= 2, "batch_size must be >= 2");
    require(c.learning_rate > 0.0, "learning_rate must be positive");
    require(c.epochs >= 0, "epochs must be >= 0");
    require(c.label_fraction > 0.0 && c.label_fraction <= 1.0,
            "label_fraction must lie in (0, 1]");
    require(!c.seeds.empty(), "seeds must be non-empty");
    require(c.encoder_blocks >= 1 && c.encoder_blocks <= 3,
            "encoder_blocks must be 1..3");
    require(c.dropout_rate >= 0.0 && c.dropout_rate < 1.0, "dropout_rate in [0,1)");
    require(c.checkpoint_every >= 0, "checkpoint_every must be >= 0");
    require(!c.retrieval_k.empty(), "retrieval_k must be non-empty");
    for (int k : c.retrieval_k) require(k >= 1, "retrieval_k entries must be >= 1");
    require(c.gen_patients >= 1 && c.gen_segments_per_patient >= 1,
            "generation counts must be >= 1");
    require(c.gen_signal_len >= 64, "gen_signal_len must be >= 64");
    require(c.gen_noise_sd >= 0.0, "gen_noise_sd must be >= 0");
}

}  // namespace

TrainConfig RunConfig::train_config(std::uint64_t seed) const {
    TrainConfig tc;
    tc.tau_s = tau_s;
    tc.tau_omega = tau_omega;
    tc.beta = beta;
    tc.embed_dim = embedding_dim;
    tc.batch_size = batch_size;
    tc.learning_rate = learning_rate;
    tc.epochs = epochs;
    tc.ablation_mode = ablation;
    tc.label_fraction = label_fraction;
    tc.seed = seed;
    tc.encoder_blocks = encoder_blocks;
    tc.dropout_rate = dropout_rate;
    return tc;
}

std::string ablation_name(AblationMode mode) {
    switch (mode) {
        case AblationMode::kHard: return "hard";
        case AblationMode::kSoft: return "soft";
        case AblationMode::kSoftReg: return "soft_reg";
    }
    return "soft_reg";
}

AblationMode ablation_from_name(const std::string& name) {
    if (name == "hard") return AblationMode::kHard;
    if (name == "soft") return AblationMode::kSoft;
    if (name == "soft_reg") return AblationMode::kSoftReg;
    throw std::invalid_argument("ablation must be hard, soft, or soft_reg");
}

RunConfig parse_run_config_json(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(origin + ": " + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument(origin + ": expected a JSON object");

    static const std::set<std::string> known = {
        "dataset_csv", "output_dir", "class_names", "sex_labels", "age_bin_count",
        "age_boundaries",
        "normalization", "split_ratios", "split_seed", "tau_s", "tau_omega", "beta",
        "embedding_dim", "batch_size", "learning_rate", "epochs", "ablation",
        "label_fraction", "seeds", "encoder_blocks", "dropout_rate", "checkpoint_every",
        "retrieval_k", "normalize_at_inference", "eval_split", "gen_patients",
        "gen_segments_per_patient", "gen_signal_len", "gen_noise_sd", "gen_seed"};
    for (const auto& [key, value] : doc.items()) {
        if (!known.contains(key)) {
            throw std::invalid_argument(origin + ": unknown key \"" + key + "\"");
        }
    }

    RunConfig c;
    const auto get = [&](const char* key, auto& field) {
        if (doc.contains(key)) field = doc[key].get<std::decay_t<decltype(field)>>();
    };
    get("dataset_csv", c.dataset_csv);
    get("output_dir", c.output_dir);
    get("class_names", c.class_names);
    get("sex_labels", c.sex_labels);
    get("age_bin_count", c.age_bin_count);
    get("age_boundaries", c.age_boundaries);
    if (doc.contains("normalization")) {
        c.normalization = normalization_from_name(doc["normalization"].get<std::string>());
    }
    get("split_ratios", c.split_ratios);
    get("split_seed", c.split_seed);
    get("tau_s", c.tau_s);
    if (doc.contains("tau_omega")) c.tau_omega = tau_omega_from_json(doc["tau_omega"]);
    get("beta", c.beta);
    get("embedding_dim", c.embedding_dim);
    get("batch_size", c.batch_size);
    get("learning_rate", c.learning_rate);
    get("epochs", c.epochs);
    if (doc.contains("ablation")) {
        c.ablation = ablation_from_name(doc["ablation"].get<std::string>());
    }
    get("label_fraction", c.label_fraction);
    get("seeds", c.seeds);
    get("encoder_blocks", c.encoder_blocks);
    get("dropout_rate", c.dropout_rate);
    get("checkpoint_every", c.checkpoint_every);
    get("retrieval_k", c.retrieval_k);
    get("normalize_at_inference", c.normalize_at_inference);
    if (doc.contains("eval_split")) {
        c.eval_split = split_from_name(doc["eval_split"].get<std::string>());
    }
    get("gen_patients", c.gen_patients);
    get("gen_segments_per_patient", c.gen_segments_per_patient);
    get("gen_signal_len", c.gen_signal_len);
    get("gen_noise_sd", c.gen_noise_sd);
    get("gen_seed", c.gen_seed);

    validate(c);
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_run_config_json(text.str(), path);
}

std::string run_config_to_json(const RunConfig& c) {
    json doc;
    doc["dataset_csv"] = c.dataset_csv;
    doc["output_dir"] = c.output_dir;
    doc["class_names"] = c.class_names;
    doc["sex_labels"] = c.sex_labels;
    doc["age_bin_count"] = c.age_bin_count;
    doc["age_boundaries"] = c.age_boundaries;
    doc["normalization"] =
        c.normalization == NormalizationMode::kMinMax ? "minmax" : "standardize";
    doc["split_ratios"] = c.split_ratios;
    doc["split_seed"] = c.split_seed;
    doc["tau_s"] = c.tau_s;
    if (std::isinf(c.tau_omega)) {
        doc["tau_omega"] = "inf";
    } else {
        doc["tau_omega"] = c.tau_omega;
    }
    doc["beta"] = c.beta;
    doc["embedding_dim"] = c.embedding_dim;
    doc["batch_size"] = c.batch_size;
    doc["learning_rate"] = c.learning_rate;
    doc["epochs"] = c.epochs;
    doc["ablation"] = ablation_name(c.ablation);
    doc["label_fraction"] = c.label_fraction;
    doc["seeds"] = c.seeds;
    doc["encoder_blocks"] = c.encoder_blocks;
    doc["dropout_rate"] = c.dropout_rate;
    doc["checkpoint_every"] = c.checkpoint_every;
    doc["retrieval_k"] = c.retrieval_k;
    doc["normalize_at_inference"] = c.normalize_at_inference;
    doc["eval_split"] = split_name(c.eval_split);
    doc["gen_patients"] = c.gen_patients;
    doc["gen_segments_per_patient"] = c.gen_segments_per_patient;
    doc["gen_signal_len"] = c.gen_signal_len;
    doc["gen_noise_sd"] = c.gen_noise_sd;
    doc["gen_seed"] = c.gen_seed;
    return doc.dump(2) + "\n";
}

void write_run_config(const RunConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << run_config_to_json(config);
}

}  // namespace crocs
