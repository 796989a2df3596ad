#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scfc/image.hpp"
#include "scfc/rng.hpp"

namespace scfc {

// The test/support/clustering triple. Test images carry immutable true
// labels fixed by which folder they came from; support images are unlabeled
// until an E-step assigns imaginary labels into the clustering set. Ids are
// unique across test and support; the clustering set keeps the latest label
// per support id.
class FewShotSets {
  public:
    void add_test_occupied(Image img);
    void add_test_unoccupied(Image img);
    void add_support(Image img);

    const std::vector<Image>& test_occupied() const { return test_occupied_; }
    const std::vector<Image>& test_unoccupied() const { return test_unoccupied_; }
    const std::vector<Image>& support() const { return support_; }
    const std::unordered_map<std::string, int>& clustering() const { return clustering_; }

    std::size_t test_size() const { return test_occupied_.size() + test_unoccupied_.size(); }

    bool contains(const std::string& id) const { return locations_.count(id) > 0; }
    bool is_support_id(const std::string& id) const;

    // True label for test images, imaginary label for support images.
    int label_of(const std::string& id) const;

    // Latest-wins pseudo-label assignment; only support ids are assignable.
    void assign_imaginary(const std::string& id, int label);

    void clear_clustering() { clustering_.clear(); }

    // Pointers to every test image followed by every support image, in
    // insertion order. Stable across calls while the sets are unchanged.
    std::vector<const Image*> all_images() const;
    std::vector<const Image*> test_images() const;

    // JSON-lines audit dump: {id, set, label, source_path} per image.
    void write_snapshot(const std::string& path) const;

  private:
    enum class SetKind { TestOccupied, TestUnoccupied, Support };
    struct Location {
        SetKind kind;
        std::size_t index;
    };

    void register_id(const std::string& id, SetKind kind, std::size_t index);

    std::vector<Image> test_occupied_;
    std::vector<Image> test_unoccupied_;
    std::vector<Image> support_;
    std::unordered_map<std::string, int> clustering_;
    std::unordered_map<std::string, Location> locations_;
};

struct LabeledPair {
    const Image* first = nullptr;
    const Image* second = nullptr;
    int y = 0;  // 1 iff both endpoints share a label
};

// Two independent uniform draws with replacement; the same element may come
// back twice.
std::pair<std::size_t, std::size_t> random_pair_indices(std::size_t set_size, Rng& rng);
std::pair<const Image*, const Image*> random_pair(const std::vector<const Image*>& set, Rng& rng);

// Pair with y resolved through label_of (true labels for test, imaginary for
// support).
LabeledPair make_labeled_pair(const FewShotSets& sets, const Image& a, const Image& b);

}  // namespace scfc
