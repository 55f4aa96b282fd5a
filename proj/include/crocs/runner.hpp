#pragma once

#include <string>
#include <vector>

#include "crocs/checkpoint.hpp"
#include "crocs/metrics.hpp"
#include "crocs/run_config.hpp"

namespace crocs {

/// Ingest -> patient split -> age binning -> normalization, all driven by the
/// run configuration. Deterministic under the config's split_seed.
Dataset load_dataset_for_run(const RunConfig& config);

/// Generates the synthetic dataset, runs the preprocessing pipeline, and
/// writes dataset.csv plus the effective config and manifest. Returns the
/// dataset CSV path.
std::string cmd_gen_data(RunConfig config);

/// Trains one model per configured seed, writing checkpoint_seed<S>.bin and
/// loss_trace_seed<S>.csv (plus interval checkpoints when configured).
std::vector<std::string> cmd_train(const RunConfig& config);

struct ClusteringRow {
    std::string method;     // cp, tp, km_raw, km_emb
    std::string attribute;  // class, sex, age
    std::string metric;     // acc, ami
    double value = 0.0;
};

struct RetrievalRow {
    std::string query;  // cp, tp
    int threshold = 1;  // minimum attribute matches
    int k = 1;
    double value = 0.0;
};

struct EvalReport {
    std::vector<ClusteringRow> clustering;
    std::vector<RetrievalRow> retrieval;
};

/// Full metric evaluation of one trained model on the configured eval split:
/// clinical and traditional prototypes as centroids and queries, plus k-means
/// baselines on raw signals and on embeddings.
EvalReport evaluate_checkpoint(const Checkpoint& checkpoint, const Dataset& dataset,
                               const RunConfig& config);

std::string clustering_csv(const std::vector<ClusteringRow>& rows);
std::string retrieval_csv(const std::vector<RetrievalRow>& rows);

struct EvalOutput {
    std::vector<EvalReport> per_seed;
    std::vector<std::string> written_files;
};

/// Evaluates the given checkpoints (default: the per-seed checkpoints under
/// output_dir) and writes per-seed metric CSVs plus mean/sd aggregates.
/// query_filter restricts the retrieval report to one query family
/// ("cp" or "tp"); "both" keeps the full table.
EvalOutput cmd_eval(const RunConfig& config, std::vector<std::string> checkpoints,
                    bool export_embeddings, const std::string& query_filter = "both");

/// HAC dendrograms over prototype rows or feature columns, and the 2-D PCA
/// projection of the bank.
std::vector<std::string> cmd_analyze(const RunConfig& config,
                                     const std::string& checkpoint_path,
                                     bool hac_rows, bool hac_cols, bool project);

/// Majority-vote accuracy for unsupervised cluster ids: each cluster is
/// mapped to its most frequent ground-truth label before scoring. Gives the
/// baseline its best-case labelling.
double majority_vote_accuracy(const std::vector<int>& truth,
                              const std::vector<int>& clusters);

}  // namespace crocs
