#include "scfc/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "scfc/image_io.hpp"

namespace fs = std::filesystem;

namespace scfc {

namespace {

std::vector<std::string> list_image_files(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw ScfcError(ErrorCode::MissingPath, "missing dataset folder: " + dir.string());
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && has_image_extension(entry.path().string()))
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());  // stream order
    return files;
}

Image load_with_relative_id(const std::string& path, const fs::path& root) {
    Image img = load_image_file(path);
    img.id = fs::relative(path, root).generic_string();
    return img;
}

// Deterministic in-place shuffle (Fisher-Yates on our Rng).
template <typename T>
void seeded_shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

}  // namespace

LabeledDataset load_image_dir(const std::string& root, std::size_t exemplar_warn_cap) {
    const fs::path root_path(root);
    if (!fs::is_directory(root_path))
        throw ScfcError(ErrorCode::MissingPath, "missing dataset root: " + root);

    LabeledDataset ds;
    ds.name = root_path.filename().string();

    const auto occupied = list_image_files(root_path / "test" / "occupied");
    const auto unoccupied = list_image_files(root_path / "test" / "unoccupied");
    const auto support = list_image_files(root_path / "support");

    if (occupied.size() > exemplar_warn_cap || unoccupied.size() > exemplar_warn_cap)
        std::cerr << "warning: " << root << " has more than " << exemplar_warn_cap
                  << " exemplars per class (" << occupied.size() << " occupied, " << unoccupied.size()
                  << " unoccupied)\n";

    for (const auto& path : occupied) ds.sets.add_test_occupied(load_with_relative_id(path, root_path));
    for (const auto& path : unoccupied) ds.sets.add_test_unoccupied(load_with_relative_id(path, root_path));
    for (const auto& path : support) {
        Image img = load_with_relative_id(path, root_path);
        img.label.reset();  // support arrives unlabeled
        ds.sets.add_support(std::move(img));
    }

    const fs::path truth_path = root_path / "truth.csv";
    if (fs::is_regular_file(truth_path)) ds.truth = load_truth_csv(truth_path.string());
    return ds;
}

std::unordered_map<std::string, int> load_truth_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScfcError(ErrorCode::MissingPath, "cannot open " + path);
    std::unordered_map<std::string, int> truth;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos)
            throw ScfcError(ErrorCode::BadFormat, path + ": expected 'id,label' lines");
        const std::string id = line.substr(0, comma);
        if (id == "id") continue;  // header
        truth[id] = std::stoi(line.substr(comma + 1));
    }
    return truth;
}

LabeledDataset build_digit_pair_dataset(const std::string& images_path, const std::string& labels_path,
                                        const DigitPairSpec& spec) {
    return build_digit_pair_dataset(load_idx(images_path, labels_path), spec);
}

LabeledDataset build_digit_pair_dataset(const std::vector<Image>& corpus, const DigitPairSpec& spec) {
    if (spec.digit_a == spec.digit_b)
        throw ScfcError(ErrorCode::InvalidArgument, "digit pair must use two distinct digits");
    if (spec.shots == 0) throw ScfcError(ErrorCode::InvalidArgument, "need at least one exemplar per class");
    if (spec.shots > 5)
        std::cerr << "warning: " << spec.shots << " exemplars per class exceeds the intended cap of 5\n";

    std::vector<const Image*> pool_a, pool_b;
    for (const auto& img : corpus) {
        if (!img.label) continue;
        if (*img.label == spec.digit_a) pool_a.push_back(&img);
        if (*img.label == spec.digit_b) pool_b.push_back(&img);
    }

    Rng rng(spec.seed);
    seeded_shuffle(pool_a, rng);
    seeded_shuffle(pool_b, rng);

    auto take = [&](std::vector<const Image*>& pool, std::size_t want, int digit) {
        if (pool.size() < want)
            throw ScfcError(ErrorCode::CountMismatch, "digit " + std::to_string(digit) + " has only " +
                                                          std::to_string(pool.size()) + " images, need " +
                                                          std::to_string(want));
    };
    take(pool_a, spec.shots, spec.digit_a);
    take(pool_b, spec.shots, spec.digit_b);

    LabeledDataset ds;
    ds.name = "digits-" + std::to_string(spec.digit_a) + "v" + std::to_string(spec.digit_b);

    for (std::size_t i = 0; i < spec.shots; ++i) {
        ds.sets.add_test_occupied(*pool_a[i]);    // digit_a plays "occupied"
        ds.sets.add_test_unoccupied(*pool_b[i]);  // digit_b plays "unoccupied"
    }

    const std::size_t avail_a = pool_a.size() - spec.shots;
    const std::size_t avail_b = pool_b.size() - spec.shots;
    std::size_t want = spec.per_class;
    if (want == 0) want = std::min(avail_a, avail_b);
    take(pool_a, spec.shots + want, spec.digit_a);
    take(pool_b, spec.shots + want, spec.digit_b);

    // Interleave the two classes so stream order carries no label signal.
    for (std::size_t i = 0; i < want; ++i) {
        for (const Image* src : {pool_a[spec.shots + i], pool_b[spec.shots + i]}) {
            Image img = *src;
            const int truth_label = *img.label == spec.digit_a ? 1 : 0;
            img.label.reset();
            ds.truth[img.id] = truth_label;
            ds.sets.add_support(std::move(img));
        }
    }
    return ds;
}

LabeledDataset build_one_vs_all_dataset(const std::vector<Image>& exemplar_pool,
                                        const std::vector<Image>& queries, int positive_digit,
                                        const std::vector<int>& all_digits, std::size_t shots,
                                        std::uint64_t seed) {
    std::vector<const Image*> positives;
    std::vector<std::vector<const Image*>> negatives_by_class;
    for (int digit : all_digits) {
        if (digit == positive_digit) continue;
        negatives_by_class.emplace_back();
    }
    for (const auto& img : exemplar_pool) {
        if (!img.label) continue;
        if (*img.label == positive_digit) {
            positives.push_back(&img);
        } else {
            std::size_t slot = 0;
            bool found = false;
            for (int digit : all_digits) {
                if (digit == positive_digit) continue;
                if (*img.label == digit) {
                    found = true;
                    break;
                }
                ++slot;
            }
            if (found) negatives_by_class[slot].push_back(&img);
        }
    }
    if (positives.size() < shots)
        throw ScfcError(ErrorCode::CountMismatch,
                        "not enough exemplars for digit " + std::to_string(positive_digit));

    Rng rng(seed);
    seeded_shuffle(positives, rng);

    LabeledDataset ds;
    ds.name = "one-vs-all-" + std::to_string(positive_digit);
    for (std::size_t i = 0; i < shots; ++i) ds.sets.add_test_occupied(*positives[i]);

    // Negative exemplars: round-robin over the other classes.
    std::size_t added = 0;
    for (auto& pool : negatives_by_class) seeded_shuffle(pool, rng);
    for (std::size_t round = 0; added < shots && !negatives_by_class.empty(); ++round) {
        bool any = false;
        for (auto& pool : negatives_by_class) {
            if (round < pool.size() && added < shots) {
                ds.sets.add_test_unoccupied(*pool[round]);
                ++added;
                any = true;
            }
        }
        if (!any) break;
    }
    if (added == 0) throw ScfcError(ErrorCode::EmptySet, "no negative exemplars available");

    for (const auto& query : queries) {
        Image img = query;
        if (img.label) ds.truth[img.id] = *img.label == positive_digit ? 1 : 0;
        img.label.reset();
        ds.sets.add_support(std::move(img));
    }
    return ds;
}

}  // namespace scfc
