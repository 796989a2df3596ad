#include "scfc/benchmark.hpp"

#include <sstream>

#include "scfc/filters.hpp"
#include "scfc/metrics.hpp"
#include "scfc/parallel.hpp"

namespace scfc {

namespace {

LabeledDataset degrade_dataset(const LabeledDataset& dataset, std::size_t window) {
    const DegradeSpec spec{window};
    LabeledDataset out;
    out.name = dataset.name;
    out.truth = dataset.truth;
    for (const auto& img : dataset.sets.test_occupied())
        out.sets.add_test_occupied(maxpool_degrade(img, spec));
    for (const auto& img : dataset.sets.test_unoccupied())
        out.sets.add_test_unoccupied(maxpool_degrade(img, spec));
    for (const auto& img : dataset.sets.support()) out.sets.add_support(maxpool_degrade(img, spec));
    return out;
}

std::unordered_map<std::string, int> to_map(const std::vector<std::pair<std::string, int>>& labels) {
    std::unordered_map<std::string, int> out;
    for (const auto& [id, label] : labels) out[id] = label;
    return out;
}

}  // namespace

SweepResult privacy_sweep(const LabeledDataset& dataset, const std::vector<std::size_t>& windows,
                          const EngineConfig& cfg) {
    for (std::size_t i = 1; i < windows.size(); ++i)
        if (windows[i] <= windows[i - 1])
            throw ScfcError(ErrorCode::InvalidArgument, "sweep windows must be strictly increasing");
    if (dataset.truth.empty())
        throw ScfcError(ErrorCode::InvalidArgument, "privacy sweep needs ground truth to score against");

    SweepResult result;
    for (std::size_t window : windows) {
        SweepEntry entry;
        entry.window = window;
        try {
            LabeledDataset degraded = degrade_dataset(dataset, window);
            if (!degraded.sets.support().empty()) entry.sample = degraded.sets.support().front();
            ScfcRunResult run = run_scfc(degraded.sets, cfg, &degraded.truth);
            entry.accuracy = accuracy(to_map(run.final_labels), degraded.truth);
        } catch (const ScfcError& e) {
            entry.error = e.what();
        }
        result.entries.push_back(std::move(entry));
    }
    return result;
}

std::unordered_map<std::string, int> knn_label_support(const LabeledDataset& dataset,
                                                       const KnnConfig& knn_cfg, std::size_t width,
                                                       std::size_t height) {
    std::vector<Image> references;
    for (const auto& img : dataset.sets.test_occupied())
        references.push_back(resize_nearest(img, width, height));
    for (const auto& img : dataset.sets.test_unoccupied())
        references.push_back(resize_nearest(img, width, height));

    const auto& support = dataset.sets.support();
    std::vector<int> predictions(support.size());
    parallel_for(support.size(), [&](std::size_t i) {
        predictions[i] = knn_predict(knn_cfg, references, resize_nearest(support[i], width, height));
    });

    std::unordered_map<std::string, int> out;
    for (std::size_t i = 0; i < support.size(); ++i) out[support[i].id] = predictions[i];
    return out;
}

BenchmarkTable benchmark_table(const std::vector<LabeledDataset>& datasets, const EngineConfig& cfg,
                               const KnnConfig& knn_cfg) {
    BenchmarkTable table;
    table.engine_cfg = cfg;
    table.knn_cfg = knn_cfg;
    for (const auto& dataset : datasets) {
        BenchmarkRow row;
        row.dataset = dataset.name;
        try {
            if (dataset.truth.empty())
                throw ScfcError(ErrorCode::InvalidArgument, "dataset has no ground truth to score against");
            ScfcRunResult run = run_scfc(dataset.sets, cfg, &dataset.truth);
            row.scfc_accuracy = accuracy(to_map(run.final_labels), dataset.truth);
            row.knn_accuracy = accuracy(
                knn_label_support(dataset, knn_cfg, cfg.input_width, cfg.input_height), dataset.truth);
        } catch (const ScfcError& e) {
            row.error = e.what();
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string BenchmarkTable::to_csv() const {
    std::ostringstream out;
    out << "dataset,scfc_acc,knn_acc,seed,n,N,lr,lambda\n";
    for (const auto& row : rows) {
        out << row.dataset << ",";
        if (row.scfc_accuracy)
            out << *row.scfc_accuracy;
        else
            out << "failed";
        out << ",";
        if (row.knn_accuracy)
            out << *row.knn_accuracy;
        else
            out << "failed";
        out << "," << engine_cfg.sgd.seed << "," << engine_cfg.pretrain_steps << "," << engine_cfg.episodes
            << "," << engine_cfg.sgd.learning_rate << "," << engine_cfg.sgd.l2_lambda << "\n";
    }
    return out.str();
}

}  // namespace scfc
