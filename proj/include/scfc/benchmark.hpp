#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scfc/dataset.hpp"
#include "scfc/engine.hpp"
#include "scfc/knn.hpp"

namespace scfc {

// Accuracy-vs-degradation curve: the whole pipeline re-run per window size.
struct SweepEntry {
    std::size_t window = 0;
    std::optional<double> accuracy;  // empty when the run failed
    std::string error;
    Image sample;  // first support image after degradation
};

struct SweepResult {
    std::vector<SweepEntry> entries;
};

// Degrades every image (test and support) with each window, runs the full
// clustering pipeline under the same seed, and records accuracy vs the
// dataset's ground truth. Failures become error entries, the sweep goes on.
SweepResult privacy_sweep(const LabeledDataset& dataset, const std::vector<std::size_t>& windows,
                          const EngineConfig& cfg);

struct BenchmarkRow {
    std::string dataset;
    std::optional<double> scfc_accuracy;
    std::optional<double> knn_accuracy;
    std::string error;
};

struct BenchmarkTable {
    std::vector<BenchmarkRow> rows;
    EngineConfig engine_cfg;
    KnnConfig knn_cfg;

    // dataset,scfc_acc,knn_acc,seed,n,N,lr,lambda
    std::string to_csv() const;
};

// Runs both methods per dataset under the engine config's seed. kNN
// classifies each support image against the labeled exemplars on raw pixels
// at the encoder resolution.
BenchmarkTable benchmark_table(const std::vector<LabeledDataset>& datasets, const EngineConfig& cfg,
                               const KnnConfig& knn_cfg);

// kNN baseline on one dataset: exemplars as references, support as queries.
std::unordered_map<std::string, int> knn_label_support(const LabeledDataset& dataset,
                                                       const KnnConfig& knn_cfg,
                                                       std::size_t width, std::size_t height);

}  // namespace scfc
