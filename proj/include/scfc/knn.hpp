#pragma once

#include <vector>

#include "scfc/image.hpp"

namespace scfc {

enum class KnnDistance { Euclidean, Manhattan };

struct KnnConfig {
    std::size_t k = 3;
    KnnDistance distance = KnnDistance::Euclidean;

    void validate() const {
        if (k == 0 || k % 2 == 0)
            throw ScfcError(ErrorCode::InvalidArgument, "k must be a positive odd integer");
    }
};

// Majority label among the k nearest references under the configured
// distance on flattened pixels. Distance ties break toward the lower image
// id, so reference order never matters.
int knn_predict(const KnnConfig& cfg, const std::vector<Image>& references, const Image& query);

KnnDistance knn_distance_from_name(const std::string& name);
const char* knn_distance_name(KnnDistance distance);

}  // namespace scfc
