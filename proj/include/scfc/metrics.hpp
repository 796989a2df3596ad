#pragma once

#include <string>
#include <unordered_map>

#include "scfc/error.hpp"

namespace scfc {

// Fraction of exact label matches. The two maps must cover the same ids.
inline double accuracy(const std::unordered_map<std::string, int>& predicted,
                       const std::unordered_map<std::string, int>& truth) {
    if (predicted.size() != truth.size())
        throw ScfcError(ErrorCode::CountMismatch,
                        "prediction and truth cover different id sets (" +
                            std::to_string(predicted.size()) + " vs " + std::to_string(truth.size()) + ")");
    if (predicted.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& [id, label] : predicted) {
        auto it = truth.find(id);
        if (it == truth.end())
            throw ScfcError(ErrorCode::UnknownId, "prediction for unknown id " + id);
        if (it->second == label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace scfc
