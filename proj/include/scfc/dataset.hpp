#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "scfc/fewshot.hpp"

namespace scfc {

// A named task: the set triple plus ground truth for the support images
// (when known), used only for scoring.
struct LabeledDataset {
    std::string name;
    FewShotSets sets;
    std::unordered_map<std::string, int> truth;
};

// Directory layout:
//   root/test/occupied/*.pgm|png    -> test set, label 1
//   root/test/unoccupied/*.pgm|png  -> test set, label 0
//   root/support/*.pgm|png          -> support set (may be empty)
// Lexicographic filename order defines stream order. Ids are paths relative
// to root. More than `exemplar_warn_cap` images per test class only warns.
// An optional root/truth.csv ("id,label" per line) supplies support ground
// truth for scoring.
LabeledDataset load_image_dir(const std::string& root, std::size_t exemplar_warn_cap = 5);

std::unordered_map<std::string, int> load_truth_csv(const std::string& path);

// Two-digit clustering task built from an IDX corpus: `shots` exemplars per
// digit form the test set, `per_class` further images per digit form the
// support set (seeded draw). digit_a plays the label-1 role, digit_b label 0.
// per_class == 0 takes everything left.
struct DigitPairSpec {
    int digit_a = 0;
    int digit_b = 1;
    std::size_t shots = 5;
    std::size_t per_class = 500;
    std::uint64_t seed = 0;
};

LabeledDataset build_digit_pair_dataset(const std::string& images_path, const std::string& labels_path,
                                        const DigitPairSpec& spec);
LabeledDataset build_digit_pair_dataset(const std::vector<Image>& corpus, const DigitPairSpec& spec);

// One-vs-all variant for k-way clustering: `positive_digit` exemplars are the
// label-1 test class, an even seeded mix of the other listed digits forms the
// label-0 test class, and `queries` become the support set.
LabeledDataset build_one_vs_all_dataset(const std::vector<Image>& exemplar_pool,
                                        const std::vector<Image>& queries, int positive_digit,
                                        const std::vector<int>& all_digits, std::size_t shots,
                                        std::uint64_t seed);

}  // namespace scfc
