#include "scfc/fewshot.hpp"

#include <fstream>

#include "nlohmann/json.hpp"

namespace scfc {

void FewShotSets::register_id(const std::string& id, SetKind kind, std::size_t index) {
    if (id.empty()) throw ScfcError(ErrorCode::InvalidArgument, "image id must be non-empty");
    if (!locations_.emplace(id, Location{kind, index}).second)
        throw ScfcError(ErrorCode::DuplicateId, "image id already present: " + id);
}

void FewShotSets::add_test_occupied(Image img) {
    register_id(img.id, SetKind::TestOccupied, test_occupied_.size());
    img.label = 1;
    test_occupied_.push_back(std::move(img));
}

void FewShotSets::add_test_unoccupied(Image img) {
    register_id(img.id, SetKind::TestUnoccupied, test_unoccupied_.size());
    img.label = 0;
    test_unoccupied_.push_back(std::move(img));
}

void FewShotSets::add_support(Image img) {
    register_id(img.id, SetKind::Support, support_.size());
    support_.push_back(std::move(img));
}

bool FewShotSets::is_support_id(const std::string& id) const {
    auto it = locations_.find(id);
    return it != locations_.end() && it->second.kind == SetKind::Support;
}

int FewShotSets::label_of(const std::string& id) const {
    auto it = locations_.find(id);
    if (it == locations_.end()) throw ScfcError(ErrorCode::UnknownId, "no image with id " + id);
    switch (it->second.kind) {
        case SetKind::TestOccupied: return 1;
        case SetKind::TestUnoccupied: return 0;
        case SetKind::Support: {
            auto c = clustering_.find(id);
            if (c == clustering_.end())
                throw ScfcError(ErrorCode::UnlabeledImage,
                                "support image " + id + " has no imaginary label yet (run an E-step)");
            return c->second;
        }
    }
    throw ScfcError(ErrorCode::UnknownId, "no image with id " + id);
}

void FewShotSets::assign_imaginary(const std::string& id, int label) {
    if (label != 0 && label != 1)
        throw ScfcError(ErrorCode::InvalidArgument, "imaginary label must be 0 or 1");
    auto it = locations_.find(id);
    if (it == locations_.end()) throw ScfcError(ErrorCode::UnknownId, "no image with id " + id);
    if (it->second.kind != SetKind::Support)
        throw ScfcError(ErrorCode::InvalidArgument, "test labels are immutable; cannot relabel " + id);
    clustering_[id] = label;
}

std::vector<const Image*> FewShotSets::test_images() const {
    std::vector<const Image*> out;
    out.reserve(test_size());
    for (const auto& img : test_occupied_) out.push_back(&img);
    for (const auto& img : test_unoccupied_) out.push_back(&img);
    return out;
}

std::vector<const Image*> FewShotSets::all_images() const {
    std::vector<const Image*> out = test_images();
    out.reserve(test_size() + support_.size());
    for (const auto& img : support_) out.push_back(&img);
    return out;
}

void FewShotSets::write_snapshot(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ScfcError(ErrorCode::IoFailure, "cannot open " + path + " for writing");
    auto dump = [&](const Image& img, const char* set_name, nlohmann::json label) {
        nlohmann::json line{{"id", img.id},
                            {"set", set_name},
                            {"label", std::move(label)},
                            {"source_path", img.source_path}};
        out << line.dump() << "\n";
    };
    for (const auto& img : test_occupied_) dump(img, "test_occupied", 1);
    for (const auto& img : test_unoccupied_) dump(img, "test_unoccupied", 0);
    for (const auto& img : support_) {
        auto it = clustering_.find(img.id);
        dump(img, "support", it == clustering_.end() ? nlohmann::json() : nlohmann::json(it->second));
    }
}

std::pair<std::size_t, std::size_t> random_pair_indices(std::size_t set_size, Rng& rng) {
    if (set_size == 0) throw ScfcError(ErrorCode::EmptySet, "cannot draw a pair from an empty set");
    const std::size_t i = rng.uniform_index(set_size);
    const std::size_t j = rng.uniform_index(set_size);
    return {i, j};
}

std::pair<const Image*, const Image*> random_pair(const std::vector<const Image*>& set, Rng& rng) {
    auto [i, j] = random_pair_indices(set.size(), rng);
    return {set[i], set[j]};
}

LabeledPair make_labeled_pair(const FewShotSets& sets, const Image& a, const Image& b) {
    LabeledPair pair;
    pair.first = &a;
    pair.second = &b;
    pair.y = sets.label_of(a.id) == sets.label_of(b.id) ? 1 : 0;
    return pair;
}

}  // namespace scfc
