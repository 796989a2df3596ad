#pragma once

#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scfc/fewshot.hpp"
#include "scfc/siamese.hpp"

namespace scfc {

// Pair-probability tables of one E-step. Row i of `occupied` holds
// forward_pair(T_O[i], S[j]) over support columns j; `unoccupied` likewise
// for T_U. The *_bin tensors are the strict row-mean binarizations.
struct ProbabilityTables {
    Tensor occupied;
    Tensor unoccupied;
    Tensor occupied_bin;
    Tensor unoccupied_bin;
};

struct EngineConfig {
    std::size_t pretrain_steps = 500;  // n: warm-start pair iterations
    std::size_t episodes = 1000;       // N
    SgdConfig sgd;                     // lr, minibatch M, lambda, seed
    std::size_t m_step_pair_budget = 256;
    double ssim_threshold = 0.9;
    std::size_t input_width = 28;
    std::size_t input_height = 28;
    // Stop after this many consecutive zero-flip episodes; 0 disables and the
    // loop always runs the full N.
    std::size_t early_stop_patience = 0;
    // What a streamed frame is compared against in the change detector.
    enum class SsimReference { LastAccepted, PreviousFrame };
    SsimReference ssim_reference = SsimReference::LastAccepted;

    void validate() const;
};

struct EpisodeReport {
    std::size_t episode = 0;
    std::vector<std::pair<std::string, int>> pseudo_labels;  // support order
    double mean_loss = 0.0;
    std::optional<double> accuracy;  // vs ground truth, when supplied
    std::size_t flips = 0;           // labels changed since the previous episode
    std::size_t support_size = 0;
};

// --- Algorithm building blocks ----------------------------------------------

// Strict row-mean thresholding: bin(i,j) = 1 iff p(i,j) > mean(row i).
Tensor binarize_rows(const Tensor& probabilities);

// Column vote between the binarized tables: label j = 1 iff the occupied
// column mean strictly exceeds the unoccupied one (ties go to 0).
std::vector<int> column_vote(const Tensor& occupied_bin, const Tensor& unoccupied_bin);

// Warm start: n single-pair SGD iterations on random test-set pairs with
// true labels. Appends per-iteration losses to loss_trace when given.
void pretrain(SiameseModel& model, const FewShotSets& sets, const EngineConfig& cfg, Rng& rng,
              std::vector<double>* loss_trace = nullptr);

struct EStepResult {
    ProbabilityTables tables;
    std::vector<std::pair<std::string, int>> labels;  // support order
};

// Fills both tables with forward_pair outputs, binarizes, votes per column,
// and writes the resulting imaginary labels into the clustering set.
// Requires encoder-sized images and a non-empty support set; |S| == 1 is a
// documented degenerate case (every entry ties with its row mean, all labels
// fall to 0), which is why callers are expected to keep |S| >= 2.
EStepResult e_step(const SiameseModel& model, FewShotSets& sets);

// One training epoch: m_step_pair_budget pairs drawn uniformly (with
// replacement) from test + support, labels via label_of, minibatch SGD.
// Returns the mean pre-step loss over all sampled pairs.
double m_step(SiameseModel& model, const FewShotSets& sets, const EngineConfig& cfg, Rng& rng);

// The episodic loop: e_step, m_step, optional stream ingestion through the
// SSIM change detector, one report per episode. Stream frames may be any
// resolution; accepted frames are resized to the encoder input when added.
std::vector<EpisodeReport> run_episodes(
    SiameseModel& model, FewShotSets& sets, const EngineConfig& cfg, Rng& rng,
    const std::unordered_map<std::string, int>* ground_truth = nullptr,
    const std::vector<Image>* stream = nullptr,
    const std::function<void(const EpisodeReport&, SiameseModel&)>& on_episode = {});

// Convenience driver: build the model from the config, resize every set
// image to the encoder input, pretrain, run all episodes.
struct ScfcRunResult {
    SiameseModel model;
    std::vector<EpisodeReport> reports;
    std::vector<std::pair<std::string, int>> final_labels;  // support order
};

ScfcRunResult run_scfc(const FewShotSets& sets, const EngineConfig& cfg,
                       const std::unordered_map<std::string, int>* ground_truth = nullptr,
                       const std::vector<Image>* stream = nullptr,
                       const std::function<void(const EpisodeReport&, SiameseModel&)>& on_episode = {});

// --- k-way extension ---------------------------------------------------------

// One completed one-vs-all clustering run: the positive class's exemplars
// live in sets->test_occupied(), pseudo_labels hold the run's final verdict
// per query id.
struct OneVsAllRun {
    int class_index = 0;
    SiameseModel* model = nullptr;
    const FewShotSets* sets = nullptr;
    std::unordered_map<std::string, int> pseudo_labels;
};

// Majority vote across the runs; a query's class is the one whose run
// pseudo-labeled it positive. Vote ties (including all-zero votes) break to
// the class with the highest mean similarity between the query and that
// class's exemplars, then to the lowest class index.
std::unordered_map<std::string, int> kway_cluster(const std::vector<OneVsAllRun>& runs,
                                                  const std::vector<Image>& queries);

}  // namespace scfc
