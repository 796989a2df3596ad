// scfc - few-shot occupancy clustering pipeline.
//
// Commands:
//   cluster       pretrain + episodic clustering, writes assignments/reports
//   pretrain-only warm start only, writes a checkpoint and the loss trace
//   degrade       maxpool privacy degradation; with --windows, the accuracy sweep
//   benchmark     SCFC vs kNN table over several datasets
//   knn           kNN baseline labels for the support set
//
// Every output artifact embeds the resolved run configuration (CSV files as
// a leading "# config:" comment, JSONL files as a config record), and reruns
// with the same seed overwrite outputs with identical bytes.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "scfc/benchmark.hpp"
#include "scfc/engine.hpp"
#include "scfc/filters.hpp"
#include "scfc/image_io.hpp"
#include "scfc/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scfc;

namespace {

// ---------------------------------------------------------------------------
// Options
// ---------------------------------------------------------------------------

struct DatasetOptions {
    std::string data_root;
    std::string idx_images;
    std::string idx_labels;
    int digit_a = 0;
    int digit_b = 1;
    std::size_t shots = 5;
    std::size_t per_class = 500;
    std::size_t median = 0;          // odd window, 0 = off
    std::size_t degrade_window = 1;  // 1 = off
    std::string degrade_order = "median-first";
};

struct RunOptions {
    DatasetOptions dataset;
    EngineConfig engine;
    KnnConfig knn;
    std::string knn_distance = "euclidean";
    std::string ssim_reference = "last-accepted";
    std::string out_dir = "scfc-out";
    std::string stream_dir;
    std::size_t checkpoint_every = 0;
    bool keep_going = false;
    bool seed_given = false;
    bool input_dims_given = false;
    std::vector<std::size_t> sweep_windows;
    std::string input_dir;  // degrade-only flat folder
    std::string manifest;
    std::string pairs = "0:1,2:3,4:5,6:7,8:9";
    std::string image_format = "pgm";
};

void add_dataset_flags(CLI::App* cmd, DatasetOptions& ds) {
    cmd->add_option("--data-root", ds.data_root, "dataset folder (test/occupied, test/unoccupied, support)")
        ->envname("SCFC_DATA_ROOT");
    cmd->add_option("--idx-images", ds.idx_images, "IDX image file")->envname("SCFC_IDX_IMAGES");
    cmd->add_option("--idx-labels", ds.idx_labels, "IDX label file")->envname("SCFC_IDX_LABELS");
    cmd->add_option("--digit-a", ds.digit_a, "first digit of the pair (plays label 1)");
    cmd->add_option("--digit-b", ds.digit_b, "second digit of the pair (plays label 0)");
    cmd->add_option("--shots", ds.shots, "exemplars per class (intended cap 5)");
    cmd->add_option("--per-class", ds.per_class, "support images per class from an IDX corpus (0 = all)");
    cmd->add_option("--median", ds.median, "median filter window applied on load (odd, 0 = off)");
    cmd->add_option("--window", ds.degrade_window, "maxpool degradation window applied on load (1 = off)")
        ->envname("SCFC_WINDOW");
    cmd->add_option("--degrade-order", ds.degrade_order, "median-first or degrade-first")
        ->check(CLI::IsMember({"median-first", "degrade-first"}));
}

void add_engine_flags(CLI::App* cmd, RunOptions& opt) {
    cmd->add_option("--seed", opt.engine.sgd.seed, "run seed (omit for entropy + warning)")
        ->envname("SCFC_SEED")
        ->each([&opt](const std::string&) { opt.seed_given = true; });
    cmd->add_option("--n", opt.engine.pretrain_steps, "pretraining pair iterations")->envname("SCFC_N");
    cmd->add_option("--episodes", opt.engine.episodes, "episode count N")->envname("SCFC_EPISODES");
    cmd->add_option("--lr", opt.engine.sgd.learning_rate, "SGD learning rate")->envname("SCFC_LR");
    cmd->add_option("--lambda", opt.engine.sgd.l2_lambda, "L2 regularization strength")
        ->envname("SCFC_LAMBDA");
    cmd->add_option("--batch", opt.engine.sgd.minibatch_size, "minibatch size M")->envname("SCFC_BATCH");
    cmd->add_option("--pair-budget", opt.engine.m_step_pair_budget, "pairs sampled per M-step")
        ->envname("SCFC_PAIR_BUDGET");
    cmd->add_option("--ssim-threshold", opt.engine.ssim_threshold, "change-detector threshold")
        ->envname("SCFC_SSIM_THRESHOLD");
    cmd->add_option("--ssim-reference", opt.ssim_reference,
                    "change-detector reference frame: last-accepted or previous-frame")
        ->check(CLI::IsMember({"last-accepted", "previous-frame"}));
    cmd->add_option("--input-width", opt.engine.input_width,
                    "encoder input width (default 28, or 64 for --data-root datasets)")
        ->each([&opt](const std::string&) { opt.input_dims_given = true; });
    cmd->add_option("--input-height", opt.engine.input_height,
                    "encoder input height (default 28, or 48 for --data-root datasets)")
        ->each([&opt](const std::string&) { opt.input_dims_given = true; });
    cmd->add_option("--patience", opt.engine.early_stop_patience,
                    "stop after this many zero-flip episodes (0 = run all N)");
    cmd->add_option("--out", opt.out_dir, "output directory")->envname("SCFC_OUT");
}

// ---------------------------------------------------------------------------
// Config JSON (embedded in every artifact)
// ---------------------------------------------------------------------------

json config_json(const std::string& command, const RunOptions& opt) {
    json dataset{{"data_root", opt.dataset.data_root},
                 {"idx_images", opt.dataset.idx_images},
                 {"idx_labels", opt.dataset.idx_labels},
                 {"digit_a", opt.dataset.digit_a},
                 {"digit_b", opt.dataset.digit_b},
                 {"shots", opt.dataset.shots},
                 {"per_class", opt.dataset.per_class},
                 {"median", opt.dataset.median},
                 {"degrade_window", opt.dataset.degrade_window},
                 {"degrade_order", opt.dataset.degrade_order}};
    json engine{{"n", opt.engine.pretrain_steps},
                {"episodes", opt.engine.episodes},
                {"lr", opt.engine.sgd.learning_rate},
                {"lambda", opt.engine.sgd.l2_lambda},
                {"batch", opt.engine.sgd.minibatch_size},
                {"pair_budget", opt.engine.m_step_pair_budget},
                {"ssim_threshold", opt.engine.ssim_threshold},
                {"ssim_reference", opt.ssim_reference},
                {"input_width", opt.engine.input_width},
                {"input_height", opt.engine.input_height},
                {"patience", opt.engine.early_stop_patience},
                {"seed", opt.engine.sgd.seed}};
    json knn{{"k", opt.knn.k}, {"distance", opt.knn_distance}};
    return json{{"command", command}, {"dataset", dataset}, {"engine", engine},
                {"knn", knn},         {"out", opt.out_dir},  {"stream_dir", opt.stream_dir}};
}

void write_config_file(const fs::path& dir, const json& cfg) {
    std::ofstream out(dir / "run_config.json");
    out << cfg.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Dataset resolution
// ---------------------------------------------------------------------------

Image preprocess(const Image& img, const DatasetOptions& ds) {
    Image out = img;
    auto apply_median = [&]() {
        if (ds.median > 0) out = median_filter(out, ds.median);
    };
    auto apply_degrade = [&]() {
        if (ds.degrade_window > 1) out = maxpool_degrade(out, DegradeSpec{ds.degrade_window});
    };
    if (ds.degrade_order == "median-first") {
        apply_median();
        apply_degrade();
    } else {
        apply_degrade();
        apply_median();
    }
    return out;
}

LabeledDataset preprocess_dataset(LabeledDataset ds, const DatasetOptions& opt) {
    if (opt.median == 0 && opt.degrade_window <= 1) return ds;
    LabeledDataset out;
    out.name = ds.name;
    out.truth = std::move(ds.truth);
    for (const auto& img : ds.sets.test_occupied()) out.sets.add_test_occupied(preprocess(img, opt));
    for (const auto& img : ds.sets.test_unoccupied()) out.sets.add_test_unoccupied(preprocess(img, opt));
    for (const auto& img : ds.sets.support()) out.sets.add_support(preprocess(img, opt));
    return out;
}

LabeledDataset resolve_dataset(const DatasetOptions& ds, std::uint64_t seed) {
    if (!ds.data_root.empty()) return preprocess_dataset(load_image_dir(ds.data_root), ds);
    if (!ds.idx_images.empty() || !ds.idx_labels.empty()) {
        if (ds.idx_images.empty() || ds.idx_labels.empty())
            throw ScfcError(ErrorCode::InvalidArgument, "--idx-images and --idx-labels go together");
        DigitPairSpec spec;
        spec.digit_a = ds.digit_a;
        spec.digit_b = ds.digit_b;
        spec.shots = ds.shots;
        spec.per_class = ds.per_class;
        spec.seed = seed;
        return preprocess_dataset(build_digit_pair_dataset(ds.idx_images, ds.idx_labels, spec), ds);
    }
    throw ScfcError(ErrorCode::InvalidArgument,
                    "no dataset given: use --data-root or --idx-images/--idx-labels");
}

std::vector<Image> load_stream_dir(const std::string& dir) {
    std::vector<Image> frames;
    if (dir.empty()) return frames;
    if (!fs::is_directory(dir)) throw ScfcError(ErrorCode::MissingPath, "missing stream folder: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && has_image_extension(entry.path().string()))
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        Image img = load_image_file(path);
        img.id = "stream/" + fs::path(path).filename().string();
        frames.push_back(std::move(img));
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

std::string format_double(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

void write_assignments_csv(const fs::path& path, const json& cfg,
                           const std::vector<std::pair<std::string, int>>& labels) {
    std::ofstream out(path);
    if (!out) throw ScfcError(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out << "# config: " << cfg.dump() << "\n";
    out << "id,label\n";
    for (const auto& [id, label] : labels) out << id << "," << label << "\n";
}

int fail_with_json(const std::exception& e) {
    const auto* scfc_err = dynamic_cast<const ScfcError*>(&e);
    json err{{"error",
              {{"code", scfc_err ? error_code_name(scfc_err->code()) : "exception"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
}

void ensure_seed(RunOptions& opt) {
    if (opt.seed_given) return;
    opt.engine.sgd.seed = std::random_device{}();
    std::cerr << "warning: no --seed given; drew " << opt.engine.sgd.seed
              << " from entropy (pass --seed to reproduce this run)\n";
}

// Directory datasets are camera streams (default encoder input 64x48); IDX
// corpora are digit-sized (28x28). Explicit flags always win.
void resolve_run_options(RunOptions& opt) {
    ensure_seed(opt);
    if (!opt.input_dims_given && !opt.dataset.data_root.empty()) {
        opt.engine.input_width = 64;
        opt.engine.input_height = 48;
    }
    opt.engine.ssim_reference = opt.ssim_reference == "previous-frame"
                                    ? EngineConfig::SsimReference::PreviousFrame
                                    : EngineConfig::SsimReference::LastAccepted;
}

// ---------------------------------------------------------------------------
// cluster / pretrain-only
// ---------------------------------------------------------------------------

int cmd_cluster(RunOptions& opt, bool pretrain_only) {
    resolve_run_options(opt);
    opt.knn.distance = knn_distance_from_name(opt.knn_distance);
    const json cfg = config_json(pretrain_only ? "pretrain-only" : "cluster", opt);

    const LabeledDataset dataset = resolve_dataset(opt.dataset, opt.engine.sgd.seed);
    const std::vector<Image> stream = load_stream_dir(opt.stream_dir);

    fs::create_directories(opt.out_dir);
    const fs::path out_dir(opt.out_dir);
    write_config_file(out_dir, cfg);
    dataset.sets.write_snapshot((out_dir / "sets_snapshot.jsonl").string());

    const SgdConfig sgd = opt.engine.sgd;

    if (pretrain_only) {
        opt.engine.validate();
        FewShotSets working;
        for (const auto& img : dataset.sets.test_occupied())
            working.add_test_occupied(resize_nearest(img, opt.engine.input_width, opt.engine.input_height));
        for (const auto& img : dataset.sets.test_unoccupied())
            working.add_test_unoccupied(
                resize_nearest(img, opt.engine.input_width, opt.engine.input_height));
        Rng model_rng = Rng(sgd.seed).split(1);
        Rng sampler_rng = Rng(sgd.seed).split(2);
        SiameseModel model =
            SiameseModel::build(opt.engine.input_width, opt.engine.input_height, sgd.l2_lambda, model_rng);
        std::vector<double> trace;
        pretrain(model, working, opt.engine, sampler_rng, &trace);
        model.save((out_dir / "model.ckpt").string(), sgd);

        std::ofstream jsonl(out_dir / "pretrain.jsonl");
        jsonl << json{{"type", "config"}, {"config", cfg}}.dump() << "\n";
        for (std::size_t i = 0; i < trace.size(); ++i)
            jsonl << json{{"type", "pretrain_step"}, {"step", i}, {"loss", trace[i]}}.dump() << "\n";
        std::cout << "pretrained for " << trace.size() << " iterations; checkpoint at "
                  << (out_dir / "model.ckpt").string() << "\n";
        return 0;
    }

    std::ofstream jsonl(out_dir / "episodes.jsonl");
    jsonl << json{{"type", "config"}, {"config", cfg}}.dump() << "\n";

    const auto t0 = std::chrono::steady_clock::now();
    auto on_episode = [&](const EpisodeReport& report, SiameseModel& model) {
        json labels = json::object();
        for (const auto& [id, label] : report.pseudo_labels) labels[id] = label;
        json line{{"type", "episode"},
                  {"episode", report.episode},
                  {"mean_loss", report.mean_loss},
                  {"flips", report.flips},
                  {"support_size", report.support_size},
                  {"pseudo_labels", std::move(labels)}};
        if (report.accuracy) line["accuracy"] = *report.accuracy;
        jsonl << line.dump() << "\n";
        if (opt.checkpoint_every > 0 && (report.episode + 1) % opt.checkpoint_every == 0)
            model.save((out_dir / ("model_ep" + std::to_string(report.episode + 1) + ".ckpt")).string(),
                       sgd);
    };

    ScfcRunResult run = run_scfc(dataset.sets, opt.engine, dataset.truth.empty() ? nullptr : &dataset.truth,
                                 stream.empty() ? nullptr : &stream, on_episode);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_assignments_csv(out_dir / "assignments.csv", cfg, run.final_labels);
    run.model.save((out_dir / "model.ckpt").string(), sgd);

    std::cout << "clustered " << run.final_labels.size() << " support images over " << run.reports.size()
              << " episodes in " << format_double(seconds) << "s\n";
    if (!run.reports.empty() && run.reports.back().accuracy)
        std::cout << "final accuracy vs ground truth: " << format_double(*run.reports.back().accuracy)
                  << "\n";
    std::cout << "outputs in " << out_dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// knn
// ---------------------------------------------------------------------------

int cmd_knn(RunOptions& opt) {
    resolve_run_options(opt);
    opt.knn.validate();
    opt.knn.distance = knn_distance_from_name(opt.knn_distance);
    const json cfg = config_json("knn", opt);

    const LabeledDataset dataset = resolve_dataset(opt.dataset, opt.engine.sgd.seed);
    const auto predicted =
        knn_label_support(dataset, opt.knn, opt.engine.input_width, opt.engine.input_height);

    fs::create_directories(opt.out_dir);
    const fs::path out_dir(opt.out_dir);
    write_config_file(out_dir, cfg);

    std::vector<std::pair<std::string, int>> ordered;
    for (const auto& img : dataset.sets.support()) ordered.emplace_back(img.id, predicted.at(img.id));
    write_assignments_csv(out_dir / "knn_assignments.csv", cfg, ordered);

    std::cout << "labeled " << ordered.size() << " support images with k=" << opt.knn.k << " ("
              << opt.knn_distance << ")\n";
    if (!dataset.truth.empty())
        std::cout << "accuracy vs ground truth: " << format_double(accuracy(predicted, dataset.truth))
                  << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// degrade
// ---------------------------------------------------------------------------

int cmd_degrade(RunOptions& opt) {
    resolve_run_options(opt);
    const json cfg = config_json("degrade", opt);
    fs::create_directories(opt.out_dir);
    const fs::path out_dir(opt.out_dir);
    write_config_file(out_dir, cfg);

    // Sweep mode: dataset + strictly increasing windows + ground truth.
    if (!opt.sweep_windows.empty()) {
        const LabeledDataset dataset = resolve_dataset(opt.dataset, opt.engine.sgd.seed);
        const SweepResult sweep = privacy_sweep(dataset, opt.sweep_windows, opt.engine);

        std::ofstream csv(out_dir / "sweep.csv");
        csv << "# config: " << cfg.dump() << "\n";
        csv << "window,accuracy\n";
        for (const auto& entry : sweep.entries) {
            csv << entry.window << ",";
            if (entry.accuracy)
                csv << format_double(*entry.accuracy);
            else
                csv << "failed";
            csv << "\n";
            if (entry.sample.size() > 0)
                save_pgm((out_dir / ("sample_w" + std::to_string(entry.window) + ".pgm")).string(),
                         entry.sample);
            if (!entry.error.empty())
                std::cerr << "window " << entry.window << " failed: " << entry.error << "\n";
        }
        std::cout << "sweep over " << sweep.entries.size() << " windows written to "
                  << (out_dir / "sweep.csv").string() << "\n";
        return 0;
    }

    // Plain degradation of a flat image folder.
    if (opt.input_dir.empty())
        throw ScfcError(ErrorCode::InvalidArgument, "degrade needs --input-dir or --windows with a dataset");
    if (!fs::is_directory(opt.input_dir))
        throw ScfcError(ErrorCode::MissingPath, "missing input folder: " + opt.input_dir);

    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(opt.input_dir))
        if (entry.is_regular_file() && has_image_extension(entry.path().string()))
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ScfcError(ErrorCode::EmptySet, "no images in " + opt.input_dir);

    std::size_t ok = 0;
    json errors = json::array();
    for (const auto& path : files) {
        try {
            const Image img = preprocess(load_image_file(path), opt.dataset);
            const std::string stem = fs::path(path).stem().string();
            if (opt.image_format == "png")
                save_png((out_dir / (stem + ".png")).string(), img);
            else
                save_pgm((out_dir / (stem + ".pgm")).string(), img);
            ++ok;
        } catch (const ScfcError& e) {
            errors.push_back({{"file", path}, {"error", e.what()}});
            std::cerr << "skipping " << path << ": " << e.what() << "\n";
        }
    }
    std::ofstream manifest(out_dir / "degrade_manifest.json");
    manifest << json{{"config", cfg}, {"written", ok}, {"errors", errors}}.dump(2) << "\n";
    std::cout << "degraded " << ok << " of " << files.size() << " images into " << out_dir.string() << "\n";
    return ok > 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------

std::vector<std::pair<int, int>> parse_pairs(const std::string& text) {
    std::vector<std::pair<int, int>> pairs;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ScfcError(ErrorCode::InvalidArgument, "--pairs expects a:b,c:d,...");
        pairs.emplace_back(std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
    }
    if (pairs.empty()) throw ScfcError(ErrorCode::InvalidArgument, "--pairs is empty");
    return pairs;
}

int cmd_benchmark(RunOptions& opt) {
    resolve_run_options(opt);
    opt.knn.validate();
    opt.knn.distance = knn_distance_from_name(opt.knn_distance);
    const json cfg = config_json("benchmark", opt);

    std::vector<LabeledDataset> datasets;
    if (!opt.manifest.empty()) {
        std::ifstream in(opt.manifest);
        if (!in) throw ScfcError(ErrorCode::MissingPath, "cannot open manifest " + opt.manifest);
        json manifest;
        in >> manifest;
        for (const auto& entry : manifest) {
            try {
                if (entry.at("type") == "dir") {
                    LabeledDataset ds = load_image_dir(entry.at("root").get<std::string>());
                    if (entry.contains("name")) ds.name = entry["name"].get<std::string>();
                    datasets.push_back(std::move(ds));
                } else if (entry.at("type") == "idx_pair") {
                    DigitPairSpec spec;
                    spec.digit_a = entry.at("digit_a").get<int>();
                    spec.digit_b = entry.at("digit_b").get<int>();
                    spec.shots = entry.value("shots", opt.dataset.shots);
                    spec.per_class = entry.value("per_class", opt.dataset.per_class);
                    spec.seed = opt.engine.sgd.seed;
                    datasets.push_back(build_digit_pair_dataset(entry.at("images").get<std::string>(),
                                                                entry.at("labels").get<std::string>(),
                                                                spec));
                } else {
                    throw ScfcError(ErrorCode::BadFormat, "unknown manifest entry type");
                }
            } catch (const std::exception& e) {
                if (!opt.keep_going) throw;
                LabeledDataset failed;
                failed.name = entry.is_object() ? entry.value("name", std::string("unresolved"))
                                                : std::string("unresolved");
                std::cerr << "dataset " << failed.name << " failed to load: " << e.what() << "\n";
                datasets.push_back(std::move(failed));  // empty -> failed row
            }
        }
    } else {
        if (opt.dataset.idx_images.empty())
            throw ScfcError(ErrorCode::InvalidArgument,
                            "benchmark needs --manifest or --idx-images/--idx-labels");
        for (const auto& [a, b] : parse_pairs(opt.pairs)) {
            DigitPairSpec spec;
            spec.digit_a = a;
            spec.digit_b = b;
            spec.shots = opt.dataset.shots;
            spec.per_class = opt.dataset.per_class;
            spec.seed = opt.engine.sgd.seed;
            datasets.push_back(
                build_digit_pair_dataset(opt.dataset.idx_images, opt.dataset.idx_labels, spec));
        }
    }

    const BenchmarkTable table = benchmark_table(datasets, opt.engine, opt.knn);

    fs::create_directories(opt.out_dir);
    const fs::path out_dir(opt.out_dir);
    write_config_file(out_dir, cfg);
    std::ofstream csv(out_dir / "benchmark.csv");
    csv << "# config: " << cfg.dump() << "\n";
    csv << table.to_csv();

    bool any_failure = false;
    std::cout << "dataset            scfc      knn\n";
    for (const auto& row : table.rows) {
        std::cout << row.dataset;
        for (std::size_t i = row.dataset.size(); i < 19; ++i) std::cout << ' ';
        if (row.scfc_accuracy)
            std::cout << format_double(*row.scfc_accuracy) << "  ";
        else
            std::cout << "failed  ";
        if (row.knn_accuracy)
            std::cout << format_double(*row.knn_accuracy);
        else
            std::cout << "failed";
        if (!row.error.empty()) {
            any_failure = true;
            std::cout << "   (" << row.error << ")";
        }
        std::cout << "\n";
    }
    std::cout << "table written to " << (out_dir / "benchmark.csv").string() << "\n";
    return (any_failure && !opt.keep_going) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scfc: few-shot occupancy clustering from a handful of labeled exemplars"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read defaults from a TOML/INI config file");

    RunOptions opt;

    CLI::App* cluster = app.add_subcommand("cluster", "pretrain + episodic clustering");
    add_dataset_flags(cluster, opt.dataset);
    add_engine_flags(cluster, opt);
    cluster->add_option("--stream-dir", opt.stream_dir,
                        "folder of frames streamed through the change detector, one per episode");
    cluster->add_option("--checkpoint-every", opt.checkpoint_every,
                        "write a checkpoint every K episodes (0 = final only)");

    CLI::App* pretrain_cmd = app.add_subcommand("pretrain-only", "warm start, then stop");
    add_dataset_flags(pretrain_cmd, opt.dataset);
    add_engine_flags(pretrain_cmd, opt);

    CLI::App* degrade = app.add_subcommand("degrade", "maxpool privacy degradation / accuracy sweep");
    add_dataset_flags(degrade, opt.dataset);
    add_engine_flags(degrade, opt);
    degrade->add_option("--input-dir", opt.input_dir, "flat folder of images to degrade");
    degrade
        ->add_option("--windows", opt.sweep_windows,
                     "strictly increasing window list: run the accuracy sweep")
        ->delimiter(',');
    degrade->add_option("--format", opt.image_format, "output image format")
        ->check(CLI::IsMember({"pgm", "png"}));

    CLI::App* knn_cmd = app.add_subcommand("knn", "kNN baseline over the support set");
    add_dataset_flags(knn_cmd, opt.dataset);
    add_engine_flags(knn_cmd, opt);
    knn_cmd->add_option("--k", opt.knn.k, "neighbor count (odd)")->envname("SCFC_K");
    knn_cmd->add_option("--distance", opt.knn_distance, "euclidean or manhattan")
        ->check(CLI::IsMember({"euclidean", "manhattan"}))
        ->envname("SCFC_DISTANCE");

    CLI::App* bench = app.add_subcommand("benchmark", "SCFC vs kNN accuracy table");
    add_dataset_flags(bench, opt.dataset);
    add_engine_flags(bench, opt);
    bench->add_option("--manifest", opt.manifest, "JSON list of datasets");
    bench->add_option("--pairs", opt.pairs, "digit pairs as a:b,c:d,... for an IDX corpus");
    bench->add_option("--k", opt.knn.k, "kNN neighbor count (odd)")->envname("SCFC_K");
    bench->add_option("--distance", opt.knn_distance, "euclidean or manhattan")
        ->check(CLI::IsMember({"euclidean", "manhattan"}))
        ->envname("SCFC_DISTANCE");
    bench->add_flag("--keep-going", opt.keep_going, "keep exit status 0 when individual rows fail")
        ->envname("SCFC_KEEP_GOING");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(cluster)) return cmd_cluster(opt, false);
        if (app.got_subcommand(pretrain_cmd)) return cmd_cluster(opt, true);
        if (app.got_subcommand(degrade)) return cmd_degrade(opt);
        if (app.got_subcommand(knn_cmd)) return cmd_knn(opt);
        if (app.got_subcommand(bench)) return cmd_benchmark(opt);
    } catch (const std::exception& e) {
        return fail_with_json(e);
    }
    return 0;
}
