#include "scfc/engine.hpp"

#include <algorithm>
#include <iostream>

#include "scfc/parallel.hpp"
#include "scfc/ssim.hpp"

namespace scfc {

void EngineConfig::validate() const {
    sgd.validate();
    if (!(ssim_threshold > 0.0 && ssim_threshold < 1.0))
        throw ScfcError(ErrorCode::InvalidArgument, "ssim_threshold must lie in (0,1)");
    if (input_width < 12 || input_height < 12)
        throw ScfcError(ErrorCode::InvalidArgument, "encoder input must be at least 12x12");
    if (episodes > 0 && pretrain_steps >= episodes)
        std::cerr << "warning: pretrain steps (" << pretrain_steps
                  << ") should be much smaller than the episode count (" << episodes << ")\n";
}

// ---------------------------------------------------------------------------
// Table rules
// ---------------------------------------------------------------------------

Tensor binarize_rows(const Tensor& probabilities) {
    if (probabilities.shape.size() != 2)
        throw ScfcError(ErrorCode::ShapeMismatch, "expected a 2-D probability table");
    const std::size_t rows = probabilities.shape[0], cols = probabilities.shape[1];
    Tensor bin({rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        double mean = 0.0;
        for (std::size_t c = 0; c < cols; ++c) mean += probabilities.at2(r, c);
        mean /= static_cast<double>(cols);
        for (std::size_t c = 0; c < cols; ++c)
            bin.at2(r, c) = probabilities.at2(r, c) > mean ? 1.0 : 0.0;
    }
    return bin;
}

std::vector<int> column_vote(const Tensor& occupied_bin, const Tensor& unoccupied_bin) {
    if (occupied_bin.shape.size() != 2 || unoccupied_bin.shape.size() != 2 ||
        occupied_bin.shape[1] != unoccupied_bin.shape[1])
        throw ScfcError(ErrorCode::ShapeMismatch, "binarized tables must share their column count");
    const std::size_t cols = occupied_bin.shape[1];
    const std::size_t rows_o = occupied_bin.shape[0], rows_u = unoccupied_bin.shape[0];
    std::vector<int> labels(cols, 0);
    for (std::size_t c = 0; c < cols; ++c) {
        double mean_o = 0.0, mean_u = 0.0;
        for (std::size_t r = 0; r < rows_o; ++r) mean_o += occupied_bin.at2(r, c);
        for (std::size_t r = 0; r < rows_u; ++r) mean_u += unoccupied_bin.at2(r, c);
        mean_o /= static_cast<double>(rows_o);
        mean_u /= static_cast<double>(rows_u);
        labels[c] = mean_o > mean_u ? 1 : 0;  // ties fall to unoccupied
    }
    return labels;
}

// ---------------------------------------------------------------------------
// Pretraining
// ---------------------------------------------------------------------------

void pretrain(SiameseModel& model, const FewShotSets& sets, const EngineConfig& cfg, Rng& rng,
              std::vector<double>* loss_trace) {
    if (sets.test_occupied().empty() || sets.test_unoccupied().empty())
        throw ScfcError(ErrorCode::EmptySet, "pretraining needs at least one exemplar per class");
    const std::vector<const Image*> test = sets.test_images();
    for (std::size_t i = 0; i < cfg.pretrain_steps; ++i) {
        auto [a, b] = random_pair(test, rng);
        const LabeledPair pair = make_labeled_pair(sets, *a, *b);
        const double loss = train_minibatch(model, {pair}, cfg.sgd);
        if (loss_trace) loss_trace->push_back(loss);
    }
}

// ---------------------------------------------------------------------------
// E-step
// ---------------------------------------------------------------------------

EStepResult e_step(const SiameseModel& model, FewShotSets& sets) {
    const auto& occ = sets.test_occupied();
    const auto& unocc = sets.test_unoccupied();
    const auto& support = sets.support();
    if (occ.empty() || unocc.empty())
        throw ScfcError(ErrorCode::EmptySet, "E-step needs at least one exemplar per class");
    if (support.empty()) throw ScfcError(ErrorCode::EmptySet, "E-step needs a non-empty support set");

    // One encoder pass per image; every table cell is then a single head
    // evaluation of the shared embeddings, identical to forward_pair.
    std::vector<Tensor> emb_occ(occ.size()), emb_unocc(unocc.size()), emb_support(support.size());
    parallel_for(occ.size() + unocc.size() + support.size(), [&](std::size_t i) {
        if (i < occ.size())
            emb_occ[i] = model.embed(occ[i]);
        else if (i < occ.size() + unocc.size())
            emb_unocc[i - occ.size()] = model.embed(unocc[i - occ.size()]);
        else
            emb_support[i - occ.size() - unocc.size()] = model.embed(support[i - occ.size() - unocc.size()]);
    });

    EStepResult result;
    result.tables.occupied = Tensor({occ.size(), support.size()});
    result.tables.unoccupied = Tensor({unocc.size(), support.size()});
    parallel_for(support.size(), [&](std::size_t j) {
        for (std::size_t i = 0; i < occ.size(); ++i)
            result.tables.occupied.at2(i, j) = model.head_probability(emb_occ[i], emb_support[j]);
        for (std::size_t i = 0; i < unocc.size(); ++i)
            result.tables.unoccupied.at2(i, j) = model.head_probability(emb_unocc[i], emb_support[j]);
    });

    result.tables.occupied_bin = binarize_rows(result.tables.occupied);
    result.tables.unoccupied_bin = binarize_rows(result.tables.unoccupied);
    const std::vector<int> labels = column_vote(result.tables.occupied_bin, result.tables.unoccupied_bin);

    result.labels.reserve(support.size());
    for (std::size_t j = 0; j < support.size(); ++j) {
        sets.assign_imaginary(support[j].id, labels[j]);
        result.labels.emplace_back(support[j].id, labels[j]);
    }
    return result;
}

// ---------------------------------------------------------------------------
// M-step
// ---------------------------------------------------------------------------

double m_step(SiameseModel& model, const FewShotSets& sets, const EngineConfig& cfg, Rng& rng) {
    if (cfg.m_step_pair_budget == 0) return 0.0;
    const std::vector<const Image*> pool = sets.all_images();
    if (pool.empty()) throw ScfcError(ErrorCode::EmptySet, "M-step has no images to train on");

    double loss_sum = 0.0;
    std::size_t remaining = cfg.m_step_pair_budget;
    std::vector<LabeledPair> batch;
    while (remaining > 0) {
        // the final batch may be ragged when M does not divide the budget
        const std::size_t batch_size = std::min(remaining, cfg.sgd.minibatch_size);
        batch.clear();
        for (std::size_t i = 0; i < batch_size; ++i) {
            auto [a, b] = random_pair(pool, rng);
            batch.push_back(make_labeled_pair(sets, *a, *b));
        }
        loss_sum += train_minibatch(model, batch, cfg.sgd) * static_cast<double>(batch_size);
        remaining -= batch_size;
    }
    return loss_sum / static_cast<double>(cfg.m_step_pair_budget);
}

// ---------------------------------------------------------------------------
// Episodic loop
// ---------------------------------------------------------------------------

namespace {

std::size_t count_flips(const std::unordered_map<std::string, int>& previous,
                        const std::vector<std::pair<std::string, int>>& current) {
    std::size_t flips = 0;
    for (const auto& [id, label] : current) {
        auto it = previous.find(id);
        if (it != previous.end() && it->second != label) ++flips;
    }
    return flips;
}

double labeled_accuracy(const std::vector<std::pair<std::string, int>>& labels,
                        const std::unordered_map<std::string, int>& truth) {
    std::size_t hits = 0, seen = 0;
    for (const auto& [id, label] : labels) {
        auto it = truth.find(id);
        if (it == truth.end()) continue;
        ++seen;
        if (it->second == label) ++hits;
    }
    return seen == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(seen);
}

}  // namespace

std::vector<EpisodeReport> run_episodes(
    SiameseModel& model, FewShotSets& sets, const EngineConfig& cfg, Rng& rng,
    const std::unordered_map<std::string, int>* ground_truth, const std::vector<Image>* stream,
    const std::function<void(const EpisodeReport&, SiameseModel&)>& on_episode) {
    if (sets.support().size() < 2)
        throw ScfcError(ErrorCode::EmptySet,
                        "episodic clustering needs at least 2 support images, have " +
                            std::to_string(sets.support().size()));

    std::vector<EpisodeReport> reports;
    reports.reserve(cfg.episodes);

    std::unordered_map<std::string, int> previous_labels;
    std::size_t stream_cursor = 0;
    Image change_reference;  // last accepted (or last seen) stream frame
    bool have_reference = false;
    std::size_t zero_flip_streak = 0;

    for (std::size_t c = 0; c < cfg.episodes; ++c) {
        EStepResult estep = e_step(model, sets);
        const double mean_loss = m_step(model, sets, cfg, rng);

        EpisodeReport report;
        report.episode = c;
        report.pseudo_labels = std::move(estep.labels);
        report.mean_loss = mean_loss;
        report.flips = count_flips(previous_labels, report.pseudo_labels);
        report.support_size = sets.support().size();
        if (ground_truth) report.accuracy = labeled_accuracy(report.pseudo_labels, *ground_truth);

        previous_labels.clear();
        for (const auto& [id, label] : report.pseudo_labels) previous_labels.emplace(id, label);

        // Line-28 ingestion: one stream frame per episode, admitted when the
        // change detector fires. The first frame has nothing to compare
        // against and is always admitted.
        if (stream && stream_cursor < stream->size()) {
            const Image& frame = (*stream)[stream_cursor++];
            bool admit = true;
            if (have_reference) admit = ssim_change(change_reference, frame, cfg.ssim_threshold);
            if (admit) {
                sets.add_support(resize_nearest(frame, cfg.input_width, cfg.input_height));
                change_reference = frame;
                have_reference = true;
            } else if (cfg.ssim_reference == EngineConfig::SsimReference::PreviousFrame) {
                change_reference = frame;
            }
        }

        if (on_episode) on_episode(report, model);
        reports.push_back(std::move(report));

        if (cfg.early_stop_patience > 0) {
            zero_flip_streak = reports.back().flips == 0 ? zero_flip_streak + 1 : 0;
            if (zero_flip_streak >= cfg.early_stop_patience) break;
        }
    }
    return reports;
}

ScfcRunResult run_scfc(const FewShotSets& sets, const EngineConfig& cfg,
                       const std::unordered_map<std::string, int>* ground_truth,
                       const std::vector<Image>* stream,
                       const std::function<void(const EpisodeReport&, SiameseModel&)>& on_episode) {
    cfg.validate();
    if (sets.test_occupied().empty() || sets.test_unoccupied().empty())
        throw ScfcError(ErrorCode::EmptySet, "need at least one exemplar per class");

    FewShotSets working;
    for (const auto& img : sets.test_occupied())
        working.add_test_occupied(resize_nearest(img, cfg.input_width, cfg.input_height));
    for (const auto& img : sets.test_unoccupied())
        working.add_test_unoccupied(resize_nearest(img, cfg.input_width, cfg.input_height));
    for (const auto& img : sets.support()) {
        Image copy = resize_nearest(img, cfg.input_width, cfg.input_height);
        copy.label.reset();
        working.add_support(std::move(copy));
    }

    Rng model_rng = Rng(cfg.sgd.seed).split(1);
    Rng sampler_rng = Rng(cfg.sgd.seed).split(2);

    ScfcRunResult result{
        SiameseModel::build(cfg.input_width, cfg.input_height, cfg.sgd.l2_lambda, model_rng), {}, {}};
    pretrain(result.model, working, cfg, sampler_rng);
    result.reports = run_episodes(result.model, working, cfg, sampler_rng, ground_truth, stream, on_episode);
    if (!result.reports.empty()) result.final_labels = result.reports.back().pseudo_labels;
    return result;
}

// ---------------------------------------------------------------------------
// k-way majority vote
// ---------------------------------------------------------------------------

std::unordered_map<std::string, int> kway_cluster(const std::vector<OneVsAllRun>& runs,
                                                  const std::vector<Image>& queries) {
    if (runs.empty()) throw ScfcError(ErrorCode::EmptySet, "k-way vote needs at least one run");

    auto mean_similarity = [](const OneVsAllRun& run, const Image& query) {
        const auto& exemplars = run.sets->test_occupied();
        if (exemplars.empty() || !run.model) return 0.0;
        const std::size_t w = run.model->input_width(), h = run.model->input_height();
        const Image resized = resize_nearest(query, w, h);
        double total = 0.0;
        for (const auto& ex : exemplars) total += run.model->forward_pair(resized, resize_nearest(ex, w, h));
        return total / static_cast<double>(exemplars.size());
    };

    std::unordered_map<std::string, int> assignment;
    for (const Image& query : queries) {
        std::vector<const OneVsAllRun*> voters;
        for (const auto& run : runs) {
            auto it = run.pseudo_labels.find(query.id);
            if (it != run.pseudo_labels.end() && it->second == 1) voters.push_back(&run);
        }
        if (voters.size() == 1) {
            assignment[query.id] = voters.front()->class_index;
            continue;
        }
        // Tie (several positives) or abstention (none): fall back to mean
        // similarity against the candidate classes' exemplars.
        const std::vector<const OneVsAllRun*>* candidates = &voters;
        std::vector<const OneVsAllRun*> all;
        if (voters.empty()) {
            for (const auto& run : runs) all.push_back(&run);
            candidates = &all;
        }
        const OneVsAllRun* best = nullptr;
        double best_score = -1.0;
        for (const OneVsAllRun* run : *candidates) {
            const double score = mean_similarity(*run, query);
            if (!best || score > best_score ||
                (score == best_score && run->class_index < best->class_index)) {
                best = run;
                best_score = score;
            }
        }
        assignment[query.id] = best->class_index;
    }
    return assignment;
}

}  // namespace scfc
