#include "scfc/knn.hpp"

#include <algorithm>
#include <cmath>

namespace scfc {

namespace {

double pixel_distance(const Image& a, const Image& b, KnnDistance metric) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        acc += metric == KnnDistance::Euclidean ? d * d : std::fabs(d);
    }
    return metric == KnnDistance::Euclidean ? std::sqrt(acc) : acc;
}

}  // namespace

int knn_predict(const KnnConfig& cfg, const std::vector<Image>& references, const Image& query) {
    cfg.validate();
    if (references.size() < cfg.k)
        throw ScfcError(ErrorCode::CountMismatch, "need at least k=" + std::to_string(cfg.k) +
                                                      " references, have " +
                                                      std::to_string(references.size()));

    struct Entry {
        double distance;
        const Image* ref;
    };
    std::vector<Entry> entries;
    entries.reserve(references.size());
    for (const auto& ref : references) {
        if (ref.width != query.width || ref.height != query.height)
            throw ScfcError(ErrorCode::ShapeMismatch,
                            "reference " + ref.id + " does not match the query dimensions");
        if (!ref.label)
            throw ScfcError(ErrorCode::UnlabeledImage, "reference " + ref.id + " has no label");
        entries.push_back({pixel_distance(ref, query, cfg.distance), &ref});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.ref->id < b.ref->id;
    });

    std::size_t ones = 0;
    for (std::size_t i = 0; i < cfg.k; ++i)
        if (*entries[i].ref->label == 1) ++ones;
    return ones * 2 > cfg.k ? 1 : 0;
}

KnnDistance knn_distance_from_name(const std::string& name) {
    if (name == "euclidean") return KnnDistance::Euclidean;
    if (name == "manhattan") return KnnDistance::Manhattan;
    throw ScfcError(ErrorCode::InvalidArgument, "unknown distance '" + name +
                                                    "' (expected euclidean or manhattan)");
}

const char* knn_distance_name(KnnDistance distance) {
    return distance == KnnDistance::Euclidean ? "euclidean" : "manhattan";
}

}  // namespace scfc
