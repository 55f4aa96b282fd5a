#include "crocs/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "crocs/analysis.hpp"
#include "crocs/inference.hpp"
#include "crocs/rng.hpp"
#include "crocs/sha1.hpp"

namespace crocs {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double mean_of(const std::vector<double>& xs) {
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

// Table-2-style threshold labels: partial matches are ">=n", exact is "=3".
std::string threshold_label(int threshold) {
    return threshold == 3 ? "=3" : ">=" + std::to_string(threshold);
}

void ensure_output_dir(const RunConfig& config) {
    require(!config.output_dir.empty(), "output_dir must be set");
    const fs::path dir(config.output_dir);
    if (fs::exists(dir)) {
        require(fs::is_directory(dir), config.output_dir + " exists and is not a directory");
        return;
    }
    const fs::path parent = dir.parent_path();
    if (!parent.empty() && !fs::exists(parent)) {
        throw std::runtime_error("parent of output_dir does not exist: " + parent.string());
    }
    fs::create_directory(dir);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
}

void write_manifest(const RunConfig& config, const std::string& command,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    const json& extra = json::object()) {
    json doc;
    doc["command"] = command;
    doc["seeds"] = config.seeds;
    json in = json::object(), out = json::object();
    for (const std::string& path : inputs) in[path] = git_blob_hash_file(path);
    for (const std::string& path : outputs) out[path] = git_blob_hash_file(path);
    doc["inputs"] = in;
    doc["outputs"] = out;
    if (!extra.empty()) doc["info"] = extra;
    write_text((fs::path(config.output_dir) / ("manifest_" + command + ".json")).string(),
               doc.dump(2) + "\n");
}

struct LabelledEval {
    Matrix signals;
    Matrix embeddings;
    std::vector<AttributeSet> attrs;
    std::vector<long> instance_ids;
    std::vector<long> patient_ids;
};

LabelledEval embed_eval_split(const Checkpoint& checkpoint, const Dataset& dataset,
                              SplitTag split) {
    LabelledEval eval;
    const SplitView view = collect_split(dataset, split, /*labelled_only=*/true);
    eval.signals = view.signals;
    for (std::size_t idx : view.segment_indices) {
        const Segment& s = dataset.segments[idx];
        eval.attrs.push_back(*s.attrs);
        eval.instance_ids.push_back(s.instance_id);
        eval.patient_ids.push_back(s.patient_id);
    }
    eval.embeddings = embed_all(checkpoint.encoder, eval.signals);
    return eval;
}

std::vector<int> attribute_labels(const std::vector<AttributeSet>& attrs,
                                  const std::string& attribute) {
    std::vector<int> labels(attrs.size());
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        if (attribute == "class") labels[i] = attrs[i].class_id;
        else if (attribute == "sex") labels[i] = attrs[i].sex_id;
        else labels[i] = attrs[i].age_bin;
    }
    return labels;
}

int attribute_cardinality(const AttributeSpace& space, const std::string& attribute) {
    if (attribute == "class") return space.class_count;
    if (attribute == "sex") return space.sex_count;
    return space.age_bin_count;
}

}  // namespace

double majority_vote_accuracy(const std::vector<int>& truth,
                              const std::vector<int>& clusters) {
    require(truth.size() == clusters.size() && !truth.empty(),
            "label vectors must be non-empty and equal length");
    std::map<int, std::map<int, std::size_t>> votes;
    for (std::size_t i = 0; i < truth.size(); ++i) ++votes[clusters[i]][truth[i]];
    std::map<int, int> mapped;
    for (const auto& [cluster, counts] : votes) {
        int best_label = 0;
        std::size_t best = 0;
        for (const auto& [label, count] : counts) {
            if (count > best) {
                best = count;
                best_label = label;
            }
        }
        mapped[cluster] = best_label;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (mapped[clusters[i]] == truth[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

Dataset load_dataset_for_run(const RunConfig& config) {
    require(!config.dataset_csv.empty(), "dataset_csv must be set");
    Dataset dataset = ingest_csv(config.dataset_csv, config.space());
    dataset = split_patients(std::move(dataset),
                             {config.split_ratios[0], config.split_ratios[1],
                              config.split_ratios[2]},
                             config.split_seed);
    dataset = bin_ages(std::move(dataset));
    dataset = normalize(std::move(dataset), config.normalization);
    return dataset;
}

std::string cmd_gen_data(RunConfig config) {
    ensure_output_dir(config);
    if (config.dataset_csv.empty()) {
        config.dataset_csv = (fs::path(config.output_dir) / "dataset.csv").string();
    }

    Dataset dataset = generate_synthetic(config.space(), config.gen_patients,
                                         config.gen_segments_per_patient,
                                         config.gen_signal_len, config.gen_noise_sd,
                                         config.gen_seed);
    dataset = split_patients(std::move(dataset),
                             {config.split_ratios[0], config.split_ratios[1],
                              config.split_ratios[2]},
                             config.split_seed);
    dataset = bin_ages(std::move(dataset));
    dataset = normalize(std::move(dataset), config.normalization);
    write_csv(dataset, config.dataset_csv);
    config.age_boundaries = dataset.age_boundaries;

    const std::string config_path =
        (fs::path(config.output_dir) / "effective_config.json").string();
    write_run_config(config, config_path);

    json info;
    info["age_boundaries"] = dataset.age_boundaries;
    info["combo_count"] = config.space().combo_count();
    write_manifest(config, "gen-data", {}, {config.dataset_csv, config_path}, info);
    return config.dataset_csv;
}

std::vector<std::string> cmd_train(const RunConfig& config) {
    ensure_output_dir(config);
    const Dataset dataset = load_dataset_for_run(config);

    std::vector<std::string> outputs;
    for (std::uint64_t seed : config.seeds) {
        const std::string tag = "_seed" + std::to_string(seed);
        EpochCallback on_epoch;
        if (config.checkpoint_every > 0) {
            on_epoch = [&, tag](int epoch, const EncoderParams& enc, const PrototypeBank& bank) {
                if ((epoch + 1) % config.checkpoint_every != 0) return;
                save_checkpoint((fs::path(config.output_dir) /
                                 ("checkpoint" + tag + "_epoch" + std::to_string(epoch) + ".bin"))
                                    .string(),
                                enc, bank);
            };
        }

        const TrainResult result = train(dataset, config.train_config(seed), on_epoch);

        const std::string ckpt_path =
            (fs::path(config.output_dir) / ("checkpoint" + tag + ".bin")).string();
        save_checkpoint(ckpt_path, result.encoder, result.bank);
        const std::string trace_path =
            (fs::path(config.output_dir) / ("loss_trace" + tag + ".csv")).string();
        write_loss_trace_csv(result.trace, trace_path);
        outputs.push_back(ckpt_path);
        outputs.push_back(trace_path);
    }

    const std::string config_path =
        (fs::path(config.output_dir) / "effective_config.json").string();
    write_run_config(config, config_path);
    std::vector<std::string> manifest_outputs = outputs;
    manifest_outputs.push_back(config_path);
    write_manifest(config, "train", {config.dataset_csv}, manifest_outputs);
    return outputs;
}

EvalReport evaluate_checkpoint(const Checkpoint& checkpoint, const Dataset& dataset,
                               const RunConfig& config) {
    EvalReport report;
    const LabelledEval eval = embed_eval_split(checkpoint, dataset, config.eval_split);
    require(eval.embeddings.rows > 0, "eval split has no labelled instances");
    const bool norm = config.normalize_at_inference;

    // Training-split embeddings feed the traditional (mean) prototypes.
    const LabelledEval train_part = embed_eval_split(checkpoint, dataset, SplitTag::kTrain);
    const TraditionalPrototypes tp =
        traditional_prototypes(train_part.embeddings, train_part.attrs, dataset.space);

    const std::vector<Assignment> cp_assign =
        cluster_assign(eval.embeddings, checkpoint.bank, norm);
    const std::vector<Assignment> tp_assign = assign_to_centroids(
        eval.embeddings, tp.matrix, checkpoint.bank.combos, tp.present, norm);

    const std::vector<std::string> attributes = {"class", "sex", "age"};
    for (const std::string& attribute : attributes) {
        const std::vector<int> truth = attribute_labels(eval.attrs, attribute);

        std::vector<AttributeSet> cp_sets, tp_sets;
        for (const Assignment& a : cp_assign) cp_sets.push_back(a.attrs);
        for (const Assignment& a : tp_assign) tp_sets.push_back(a.attrs);
        report.clustering.push_back(
            {"cp", attribute, "acc", accuracy(truth, attribute_labels(cp_sets, attribute))});
        report.clustering.push_back(
            {"cp", attribute, "ami", ami(truth, attribute_labels(cp_sets, attribute))});
        report.clustering.push_back(
            {"tp", attribute, "acc", accuracy(truth, attribute_labels(tp_sets, attribute))});
        report.clustering.push_back(
            {"tp", attribute, "ami", ami(truth, attribute_labels(tp_sets, attribute))});

        const int k = attribute_cardinality(dataset.space, attribute);
        const KmeansResult km_raw = kmeans(eval.signals, k, config.split_seed);
        report.clustering.push_back(
            {"km_raw", attribute, "acc", majority_vote_accuracy(truth, km_raw.assignments)});
        report.clustering.push_back(
            {"km_raw", attribute, "ami", ami(truth, km_raw.assignments)});

        const KmeansResult km_emb = kmeans(eval.embeddings, k, config.split_seed);
        report.clustering.push_back(
            {"km_emb", attribute, "acc", majority_vote_accuracy(truth, km_emb.assignments)});
        report.clustering.push_back(
            {"km_emb", attribute, "ami", ami(truth, km_emb.assignments)});
    }

    const int k_max = *std::max_element(config.retrieval_k.begin(), config.retrieval_k.end());
    const RetrievalResult cp_ret = retrieve_topk(checkpoint.bank, eval.embeddings, k_max, norm);
    const RetrievalResult tp_ret =
        retrieve_topk_queries(tp.matrix, tp.present, eval.embeddings, k_max, norm);

    const PrecisionReport cp_report =
        precision_report(cp_ret, eval.attrs, checkpoint.bank.combos, config.retrieval_k);
    const PrecisionReport tp_report =
        precision_report(tp_ret, eval.attrs, checkpoint.bank.combos, config.retrieval_k);
    for (std::size_t t = 0; t < cp_report.thresholds.size(); ++t) {
        for (std::size_t ki = 0; ki < cp_report.ks.size(); ++ki) {
            report.retrieval.push_back({"cp", cp_report.thresholds[t], cp_report.ks[ki],
                                        cp_report.at(t, ki)});
            report.retrieval.push_back({"tp", tp_report.thresholds[t], tp_report.ks[ki],
                                        tp_report.at(t, ki)});
        }
    }
    return report;
}

std::string clustering_csv(const std::vector<ClusteringRow>& rows) {
    std::string out = "method,attribute,metric,value\n";
    for (const ClusteringRow& r : rows) {
        out += r.method + "," + r.attribute + "," + r.metric + "," + fmt(r.value) + "\n";
    }
    return out;
}

std::string retrieval_csv(const std::vector<RetrievalRow>& rows) {
    std::string out = "query,threshold,k,value\n";
    for (const RetrievalRow& r : rows) {
        out += r.query + "," + threshold_label(r.threshold) + "," + std::to_string(r.k) +
               "," + fmt(r.value) + "\n";
    }
    return out;
}

EvalOutput cmd_eval(const RunConfig& config, std::vector<std::string> checkpoints,
                    bool export_embeddings, const std::string& query_filter) {
    require(query_filter == "both" || query_filter == "cp" || query_filter == "tp",
            "query filter must be cp, tp, or both");
    ensure_output_dir(config);
    const Dataset dataset = load_dataset_for_run(config);

    if (checkpoints.empty()) {
        for (std::uint64_t seed : config.seeds) {
            checkpoints.push_back((fs::path(config.output_dir) /
                                   ("checkpoint_seed" + std::to_string(seed) + ".bin"))
                                      .string());
        }
    }

    // Per-seed tags only when the checkpoint list lines up with the seed
    // list; otherwise tag by position to keep file names collision-free.
    const bool seed_tags = checkpoints.size() == config.seeds.size();

    EvalOutput output;
    for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
        const Checkpoint checkpoint = load_checkpoint(checkpoints[ci]);
        EvalReport report = evaluate_checkpoint(checkpoint, dataset, config);
        if (query_filter != "both") {
            std::erase_if(report.retrieval,
                          [&](const RetrievalRow& r) { return r.query != query_filter; });
        }

        const std::string tag = seed_tags
                                    ? "_seed" + std::to_string(config.seeds[ci])
                                    : "_ckpt" + std::to_string(ci);
        const std::string cpath =
            (fs::path(config.output_dir) / ("metrics_clustering" + tag + ".csv")).string();
        const std::string rpath =
            (fs::path(config.output_dir) / ("metrics_retrieval" + tag + ".csv")).string();
        write_text(cpath, clustering_csv(report.clustering));
        write_text(rpath, retrieval_csv(report.retrieval));
        output.written_files.push_back(cpath);
        output.written_files.push_back(rpath);

        if (export_embeddings) {
            const LabelledEval eval = embed_eval_split(checkpoint, dataset, config.eval_split);
            const std::string epath =
                (fs::path(config.output_dir) / ("embeddings" + tag + ".csv")).string();
            write_embeddings_csv(eval.embeddings, eval.instance_ids, eval.patient_ids,
                                 eval.attrs, epath);
            output.written_files.push_back(epath);
        }
        output.per_seed.push_back(report);
    }

    // Mean and across-seed standard deviation per metric row.
    const auto sd = [](const std::vector<double>& xs, double mean) {
        if (xs.size() < 2) return 0.0;
        double acc = 0.0;
        for (double x : xs) acc += (x - mean) * (x - mean);
        return std::sqrt(acc / static_cast<double>(xs.size() - 1));
    };

    std::string agg = "method,attribute,metric,mean,sd\n";
    for (std::size_t r = 0; r < output.per_seed[0].clustering.size(); ++r) {
        std::vector<double> xs;
        for (const EvalReport& rep : output.per_seed) xs.push_back(rep.clustering[r].value);
        const double mean = mean_of(xs);
        const ClusteringRow& row = output.per_seed[0].clustering[r];
        agg += row.method + "," + row.attribute + "," + row.metric + "," + fmt(mean) + "," +
               fmt(sd(xs, mean)) + "\n";
    }
    const std::string agg_cluster_path =
        (fs::path(config.output_dir) / "metrics_clustering.csv").string();
    write_text(agg_cluster_path, agg);
    output.written_files.push_back(agg_cluster_path);

    agg = "query,threshold,k,mean,sd\n";
    for (std::size_t r = 0; r < output.per_seed[0].retrieval.size(); ++r) {
        std::vector<double> xs;
        for (const EvalReport& rep : output.per_seed) xs.push_back(rep.retrieval[r].value);
        const double mean = mean_of(xs);
        const RetrievalRow& row = output.per_seed[0].retrieval[r];
        agg += row.query + "," + threshold_label(row.threshold) + "," +
               std::to_string(row.k) + "," + fmt(mean) + "," + fmt(sd(xs, mean)) + "\n";
    }
    const std::string agg_ret_path =
        (fs::path(config.output_dir) / "metrics_retrieval.csv").string();
    write_text(agg_ret_path, agg);
    output.written_files.push_back(agg_ret_path);

    std::vector<std::string> inputs = checkpoints;
    inputs.push_back(config.dataset_csv);
    write_manifest(config, "eval", inputs, output.written_files);
    return output;
}

std::vector<std::string> cmd_analyze(const RunConfig& config,
                                     const std::string& checkpoint_path,
                                     bool hac_rows, bool hac_cols, bool project) {
    ensure_output_dir(config);
    const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
    const PrototypeBank& bank = checkpoint.bank;

    std::vector<std::string> combo_labels;
    for (const AttributeSet& a : bank.combos) {
        combo_labels.push_back("c" + std::to_string(a.class_id) + "_s" +
                               std::to_string(a.sex_id) + "_a" + std::to_string(a.age_bin));
    }

    std::vector<std::string> outputs;
    if (hac_rows) {
        const Dendrogram d = hac_average(bank.matrix, combo_labels);
        const std::string path =
            (fs::path(config.output_dir) / "hac_prototypes.csv").string();
        write_dendrogram_csv(d, path);
        outputs.push_back(path);
    }
    if (hac_cols) {
        Matrix transposed(bank.matrix.cols, bank.matrix.rows);
        for (std::size_t i = 0; i < bank.matrix.rows; ++i) {
            for (std::size_t j = 0; j < bank.matrix.cols; ++j) {
                transposed.at(j, i) = bank.matrix.at(i, j);
            }
        }
        std::vector<std::string> feature_labels;
        for (std::size_t j = 0; j < bank.matrix.cols; ++j) {
            feature_labels.push_back("f" + std::to_string(j));
        }
        const Dendrogram d = hac_average(transposed, feature_labels);
        const std::string path =
            (fs::path(config.output_dir) / "hac_features.csv").string();
        write_dendrogram_csv(d, path);
        outputs.push_back(path);
    }
    if (project) {
        const Pca2d projection = pca_2d(bank.matrix);
        const std::string path =
            (fs::path(config.output_dir) / "prototype_projection.csv").string();
        write_projection_csv(projection, combo_labels, path);
        outputs.push_back(path);
    }
    write_manifest(config, "analyze", {checkpoint_path}, outputs);
    return outputs;
}

}  // namespace crocs
